#pragma once

namespace dvrp {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace dvrp
