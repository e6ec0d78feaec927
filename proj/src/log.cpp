#include "dvrp/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace dvrp {

static LogLevel parse_level() {
  const char* env = std::getenv("DVRP_LOG");
  if (env == nullptr) return LogLevel::Off;
  if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
  if (std::strcmp(env, "info") == 0) return LogLevel::Info;
  if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
  if (std::strcmp(env, "error") == 0) return LogLevel::Error;
  return LogLevel::Off;
}

LogLevel log_threshold() {
  static const LogLevel level = parse_level();
  return level;
}

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) < static_cast<int>(log_threshold())) return;
  static const char* names[] = {"DEBUG", "INFO", "WARN", "ERROR"};
  std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(level)],
               message.c_str());
}

}  // namespace dvrp
