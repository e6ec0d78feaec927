#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dvrp/cost.hpp"
#include "dvrp/workload.hpp"

namespace dvrp {

struct SolverConfig {
  enum class Construction { CheapestInsertion, NearestNeighbor };
  enum class Move { Relocate, TwoOptReverse, OrOpt2, OrOpt3 };

  Construction construction = Construction::CheapestInsertion;
  std::vector<Move> moves = {Move::Relocate, Move::TwoOptReverse, Move::OrOpt2,
                             Move::OrOpt3};
  int max_passes = 30;
  double improvement_epsilon = 1e-9;
  // Reserved for randomized tie-breaking; the scan order itself is the
  // deterministic tie-break, so the seed currently has no effect.
  std::uint64_t seed = 0;

  void validate() const;
};

struct SolveInput {
  std::span<const Task> tasks;
  Pose start{};
  std::span<const double> latents;  // aligned with tasks
  Objective objective{};
  double speed = 1.0;
  double s_bar = 0.0;
};

// Construction + first-improvement local search. Returns an open path from
// start visiting every task exactly once; never worse than the construction
// tour; deterministic.
TourPlan optimize(const SolveInput& in, const SolverConfig& cfg,
                  const Environment& env);

// Exhaustive permutation enumeration, n <= 9. Ties broken lexicographically
// by visit id sequence.
TourPlan optimize_exact(const SolveInput& in, const Environment& env);

// One-line JSON instance dump for debugging failed solves.
std::string dump_instance_json(const SolveInput& in, std::uint64_t seed);

}  // namespace dvrp
