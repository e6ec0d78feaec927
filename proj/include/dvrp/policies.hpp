#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvrp/rng.hpp"
#include "dvrp/tour_opt.hpp"

namespace dvrp {

// Batch-routing policy family. A generalized policy plans a p-norm (or pure
// length) tour over the whole queue and commits a contiguous eta-fragment of
// it; dc_batch services one angular sector at a time round-robin;
// event_triggered replans from scratch on every arrival and commits one task
// at a time.
struct PolicyParams {
  enum class Kind { Generalized, DcBatch, EventTriggered };

  Kind kind = Kind::Generalized;
  double p = 1.5;  // cost exponent; infinity selects the pure length objective
  double eta = 0.05;
  bool include_latent = true;   // weigh accrued waits in the cost
  bool random_fragment = false; // randomize the fragment start index
  int sector_count = 10;        // DcBatch only
  std::string label;

  Objective objective() const;
  void validate(const Environment& env) const;
};

// Named presets usable in configs: proposed, proposed_eta02, batch,
// eta_batch, dc_batch, c2_event.
PolicyParams policy_preset(const std::string& name);
const std::vector<std::string>& policy_preset_names();

struct Commitment {
  std::vector<int> task_ids;  // fragment to service now, in order
  TourPlan plan;              // full plan the fragment was cut from
  double epoch = 0.0;         // planning time
  int start_index = 1;        // 1-based position of the fragment in the plan
};

// Per-vehicle mutable policy state, owned by one simulation lane.
struct PolicyState {
  explicit PolicyState(std::uint64_t seed) : rng(seed) {}
  RngStream rng;
  int dc_pointer = -1;  // last serviced sector, -1 before the first
};

struct PlanningContext {
  const Environment* env = nullptr;
  SolverConfig solver{};
  double speed = 1.0;
  double s_bar = 0.0;
};

// ceil(eta * n) with a floor of one task.
int fragment_size(double eta, int n);

// Plans over the queue with latents frozen at `now` and cuts the committed
// fragment. Empty queue -> no commitment (caller idles).
std::optional<Commitment> plan_fragment(const PolicyParams& params,
                                        PolicyState& state,
                                        std::span<const Task> queue,
                                        const Pose& vehicle_pose, double now,
                                        const PlanningContext& ctx);

// Next sector after last_sector (cyclically) that holds at least one queued
// task; -1 when the queue is empty.
int dc_next_sector(int last_sector, const SectorFan& fan,
                   std::span<const Task> queue);

enum class SimEvent { TaskArrival, ServiceCompleted };
enum class ReplanDecision { Replan, Continue };

// Event-triggered policies replan on arrivals and otherwise continue along
// the current plan; an on-site service is never aborted.
ReplanDecision event_replan_trigger(SimEvent event, const PolicyParams& params);

}  // namespace dvrp
