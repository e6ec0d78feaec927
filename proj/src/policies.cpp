#include "dvrp/policies.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dvrp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Objective PolicyParams::objective() const {
  if (std::isinf(p)) return Objective::path_length();
  return Objective::p_norm(p, include_latent);
}

void PolicyParams::validate(const Environment& env) const {
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("eta must be in (0, 1]");
  if (!std::isinf(p) && !(p >= 1.0))
    throw std::invalid_argument("p must be >= 1 or infinite");
  if (kind == Kind::DcBatch) {
    if (!env.is_euclidean())
      throw std::invalid_argument("dc_batch requires a euclidean environment");
    if (sector_count < 1)
      throw std::invalid_argument("sector_count must be >= 1");
  }
  if (kind == Kind::EventTriggered && std::isinf(p))
    throw std::invalid_argument("event policy needs a finite p");
}

PolicyParams policy_preset(const std::string& name) {
  PolicyParams params;
  params.label = name;
  if (name == "proposed") {
    params.kind = PolicyParams::Kind::Generalized;
    params.p = 1.5;
    params.eta = 0.05;
    params.include_latent = true;
    params.random_fragment = false;
    return params;
  }
  if (name == "proposed_eta02") {
    params.kind = PolicyParams::Kind::Generalized;
    params.p = 1.5;
    params.eta = 0.2;
    params.include_latent = true;
    params.random_fragment = false;
    return params;
  }
  if (name == "batch") {
    params.kind = PolicyParams::Kind::Generalized;
    params.p = kInf;
    params.eta = 1.0;
    params.include_latent = false;
    params.random_fragment = false;
    return params;
  }
  if (name == "eta_batch") {
    params.kind = PolicyParams::Kind::Generalized;
    params.p = kInf;
    params.eta = 0.2;
    params.include_latent = false;
    params.random_fragment = true;
    return params;
  }
  if (name == "dc_batch") {
    params.kind = PolicyParams::Kind::DcBatch;
    params.p = kInf;
    params.eta = 1.0;
    params.include_latent = false;
    params.random_fragment = false;
    params.sector_count = 10;
    return params;
  }
  if (name == "c2_event") {
    params.kind = PolicyParams::Kind::EventTriggered;
    params.p = 2.0;
    params.eta = 1.0;
    params.include_latent = true;
    params.random_fragment = false;
    return params;
  }
  throw std::invalid_argument("unknown policy preset: " + name);
}

const std::vector<std::string>& policy_preset_names() {
  static const std::vector<std::string> names = {
      "proposed", "proposed_eta02", "batch", "eta_batch", "dc_batch",
      "c2_event"};
  return names;
}

int fragment_size(double eta, int n) {
  if (n <= 0) return 0;
  int size = static_cast<int>(std::ceil(eta * n - 1e-9));
  if (size < 1) size = 1;
  if (size > n) size = n;
  return size;
}

int dc_next_sector(int last_sector, const SectorFan& fan,
                   std::span<const Task> queue) {
  if (queue.empty()) return -1;
  for (int step = 1; step <= fan.count; ++step) {
    int candidate = (last_sector + step) % fan.count;
    if (candidate < 0) candidate += fan.count;
    for (const Task& t : queue)
      if (fan.sector_index(t.location.pt) == candidate) return candidate;
  }
  return -1;
}

ReplanDecision event_replan_trigger(SimEvent event,
                                    const PolicyParams& params) {
  if (params.kind != PolicyParams::Kind::EventTriggered)
    throw std::invalid_argument("trigger queried for a non-event policy");
  return event == SimEvent::TaskArrival ? ReplanDecision::Replan
                                        : ReplanDecision::Continue;
}

namespace {

std::vector<double> frozen_latents(std::span<const Task> queue, double now) {
  std::vector<double> latents(queue.size());
  for (std::size_t i = 0; i < queue.size(); ++i) {
    double t = now - queue[i].arrival_time;
    if (t < 0.0) {
      if (t < -1e-9)
        throw std::invalid_argument("task planned before its arrival");
      t = 0.0;
    }
    latents[i] = t;
  }
  return latents;
}

Commitment cut_fragment(TourPlan plan, double now, int start_index,
                        int length) {
  Commitment c;
  c.epoch = now;
  c.start_index = start_index;
  c.task_ids.assign(plan.visits.begin() + (start_index - 1),
                    plan.visits.begin() + (start_index - 1) + length);
  c.plan = std::move(plan);
  return c;
}

}  // namespace

std::optional<Commitment> plan_fragment(const PolicyParams& params,
                                        PolicyState& state,
                                        std::span<const Task> queue,
                                        const Pose& vehicle_pose, double now,
                                        const PlanningContext& ctx) {
  params.validate(*ctx.env);
  if (queue.empty()) return std::nullopt;

  if (params.kind == PolicyParams::Kind::DcBatch) {
    SectorFan fan = make_sectors(*ctx.env, params.sector_count);
    int sector = dc_next_sector(state.dc_pointer, fan, queue);
    if (sector < 0) return std::nullopt;
    state.dc_pointer = sector;
    std::vector<Task> in_sector;
    std::vector<double> latents;
    for (const Task& t : queue)
      if (fan.sector_index(t.location.pt) == sector) {
        in_sector.push_back(t);
        latents.push_back(std::max(0.0, now - t.arrival_time));
      }
    SolveInput input{in_sector, vehicle_pose, latents, Objective::path_length(),
                     ctx.speed, ctx.s_bar};
    TourPlan plan = optimize(input, ctx.solver, *ctx.env);
    int n = static_cast<int>(plan.size());
    return cut_fragment(std::move(plan), now, 1, n);
  }

  std::vector<double> latents = frozen_latents(queue, now);
  SolveInput input{queue, vehicle_pose, latents, params.objective(), ctx.speed,
                   ctx.s_bar};
  TourPlan plan = optimize(input, ctx.solver, *ctx.env);
  int n = static_cast<int>(plan.size());

  if (params.kind == PolicyParams::Kind::EventTriggered)
    return cut_fragment(std::move(plan), now, 1, 1);

  int index = 1;
  if (params.random_fragment) index = state.rng.uniform_int(1, n);
  int length = fragment_size(params.eta, n);
  if (index - 1 + length > n) length = n - index + 1;  // clamp, no wraparound
  return cut_fragment(std::move(plan), now, index, length);
}

}  // namespace dvrp
