#pragma once

#include <string>
#include <vector>

#include "dvrp/bounds.hpp"

namespace dvrp {

// Self-contained validation suites, runnable from the CLI. Each sweeps a
// seeded family of instances against an analytic bound or an exhaustive
// oracle and reports pass/fail with a JSON detail blob.
struct CheckOutcome {
  std::string name;
  bool pass = false;
  std::string summary;
  std::string detail_json;
};

std::vector<std::string> check_names();

// `cost_fn` overrides plan cost evaluation inside the plan-length bound
// sweep; fault-injection tests use it to prove the suite can fail.
CheckOutcome run_check(const std::string& name, const CostEvalFn& cost_fn = {});

// Runs every suite whose name contains `filter` (all when empty).
std::vector<CheckOutcome> run_checks(const std::string& filter = "",
                                     const CostEvalFn& cost_fn = {});

}  // namespace dvrp
