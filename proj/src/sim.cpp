#include "dvrp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dvrp/csv.hpp"
#include "dvrp/log.hpp"

namespace dvrp {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

// One vehicle's deterministic event loop.
class Lane {
 public:
  Lane(std::span<const Task> tasks, const PolicyParams& policy,
       const SolverConfig& solver, const Environment& env, double speed,
       double s_bar, int vehicle_id, Pose depot, std::uint64_t policy_seed,
       bool record_log, std::vector<std::string>* event_log)
      : tasks_(tasks),
        policy_(policy),
        env_(env),
        speed_(speed),
        s_bar_(s_bar),
        vehicle_id_(vehicle_id),
        depot_(depot),
        state_(policy_seed),
        record_log_(record_log),
        event_log_(event_log) {
    ctx_.env = &env;
    ctx_.solver = solver;
    ctx_.speed = speed;
    ctx_.s_bar = s_bar;
    pose_ = depot_;
  }

  void run() {
    if (policy_.kind == PolicyParams::Kind::EventTriggered)
      run_event();
    else
      run_generalized();
  }

  std::vector<WaitRecord> waits;
  std::vector<IterationRecord> iterations;
  VehicleClocks clocks;

 private:
  double now() const { return clocks.busy + clocks.travel + clocks.idle; }

  void advance(double& clock, double dt) {
    if (dt < 0.0) {
      if (dt < -1e-9) throw std::logic_error("simulation time went backwards");
      dt = 0.0;
    }
    clock += dt;
  }

  double next_arrival_time() const {
    return next_arrival_ < tasks_.size() ? tasks_[next_arrival_].arrival_time
                                         : kNever;
  }

  // Moves tasks whose arrival time has passed into the queue.
  int enqueue_ready() {
    int added = 0;
    while (next_arrival_ < tasks_.size() &&
           tasks_[next_arrival_].arrival_time <= now()) {
      queue_.push_back(tasks_[next_arrival_]);
      ++next_arrival_;
      ++added;
    }
    return added;
  }

  void log_event(const std::string& line) {
    if (record_log_ && event_log_ != nullptr) event_log_->push_back(line);
  }

  // Travels toward target, stopping early once the clock reaches stop_time:
  // at the interpolated point in euclidean environments, at the end of the
  // current edge on roadmaps. Returns true when the target was reached.
  bool travel_toward(const Pose& target, double stop_time) {
    if (env_.is_euclidean()) {
      double dist = distance(pose_.pt, target.pt);
      if (dist == 0.0) return true;
      double full_dt = dist / speed_;
      if (now() + full_dt <= stop_time || stop_time == kNever) {
        advance(clocks.travel, full_dt);
        pose_ = target;
        return true;
      }
      double dt = stop_time - now();
      if (dt <= 0.0) return false;
      double fraction = dt * speed_ / dist;
      pose_ = Pose{lerp(pose_.pt, target.pt, fraction), -1};
      advance(clocks.travel, dt);
      return false;
    }
    const RoadmapGraph& g = env_.graph();
    if (pose_.node == target.node) return true;
    std::vector<int> path = g.path(pose_.node, target.node);
    for (std::size_t i = 1; i < path.size(); ++i) {
      if (now() >= stop_time) return false;
      double w = g.time(path[i - 1], path[i]);
      // A stop mid-edge rounds to the edge's far node.
      advance(clocks.travel, w);
      pose_ = env_.node_pose(path[i]);
    }
    return true;
  }

  void travel_to(const Pose& target) { travel_toward(target, kNever); }

  // Queue empty: head home, interruptible by the next arrival; idle there.
  void wait_for_arrival() {
    double t_next = next_arrival_time();
    if (!same_pose(pose_, depot_)) {
      bool reached = travel_toward(depot_, t_next);
      if (!reached) return;  // arrival pending (or edge overshoot)
    }
    if (now() < t_next) advance(clocks.idle, t_next - now());
  }

  Task take_from_queue(int task_id) {
    for (std::size_t i = 0; i < queue_.size(); ++i) {
      if (queue_[i].id == task_id) {
        Task t = queue_[i];
        queue_.erase(queue_.begin() + i);
        return t;
      }
    }
    throw std::logic_error("committed task not in queue");
  }

  void record_epoch(const TourPlan& plan) {
    IterationRecord rec;
    rec.iteration = iteration_;
    rec.vehicle_id = vehicle_id_;
    rec.epoch_time = now();
    rec.n_outstanding = static_cast<int>(queue_.size());
    rec.planned_travel_time = std::accumulate(plan.leg_times.begin(),
                                              plan.leg_times.end(), 0.0);
    rec.planned_span =
        rec.planned_travel_time + static_cast<double>(plan.size()) * s_bar_;
    iterations.push_back(rec);
  }

  void service(const Task& t) {
    double start = now();
    if (start < t.arrival_time - 1e-9)
      throw std::logic_error("service before arrival");
    advance(clocks.busy, t.service_duration);
    waits.push_back({t.id, vehicle_id_, t.arrival_time, start, now(),
                     iteration_});
    log_event("service task=" + format_int(t.id) +
              " start=" + format_double(start));
  }

  void run_generalized() {
    while (true) {
      enqueue_ready();
      if (queue_.empty()) {
        if (next_arrival_ == tasks_.size()) break;
        wait_for_arrival();
        continue;
      }
      ++iteration_;
      auto commitment =
          plan_fragment(policy_, state_, queue_, pose_, now(), ctx_);
      record_epoch(commitment->plan);
      log_event("plan k=" + format_int(iteration_) +
                " n=" + format_int(static_cast<long long>(queue_.size())));
      for (int id : commitment->task_ids) {
        Task t = take_from_queue(id);
        travel_to(t.location);
        service(t);
        enqueue_ready();
      }
    }
  }

  void run_event() {
    std::deque<int> plan_order;
    bool stale = true;  // plan must be (re)built before the next leg
    while (true) {
      if (enqueue_ready() > 0)
        stale = event_replan_trigger(SimEvent::TaskArrival, policy_) ==
                ReplanDecision::Replan;
      if (queue_.empty()) {
        if (next_arrival_ == tasks_.size()) break;
        wait_for_arrival();
        continue;
      }
      if (stale || plan_order.empty()) {
        ++iteration_;
        auto commitment =
            plan_fragment(policy_, state_, queue_, pose_, now(), ctx_);
        record_epoch(commitment->plan);
        plan_order.assign(commitment->plan.visits.begin(),
                          commitment->plan.visits.end());
        stale = false;
      }
      int target_id = plan_order.front();
      const Task* target = nullptr;
      for (const Task& t : queue_)
        if (t.id == target_id) target = &t;
      if (target == nullptr) throw std::logic_error("planned task not queued");
      Pose target_pose = target->location;
      if (!travel_toward(target_pose, next_arrival_time())) continue;
      Task t = take_from_queue(target_id);
      plan_order.pop_front();
      service(t);
    }
  }

  std::span<const Task> tasks_;
  PolicyParams policy_;
  const Environment& env_;
  double speed_;
  double s_bar_;
  int vehicle_id_;
  Pose depot_;
  PolicyState state_;
  PlanningContext ctx_;
  Pose pose_;
  std::vector<Task> queue_;
  std::size_t next_arrival_ = 0;
  int iteration_ = 0;
  bool record_log_;
  std::vector<std::string>* event_log_;
};

SimulationTrace run_lane(std::span<const Task> tasks,
                         const PolicyParams& policy, const SolverConfig& solver,
                         const Environment& env, double speed, double s_bar,
                         int vehicle_id, Pose depot, std::uint64_t policy_seed,
                         bool record_log) {
  SimulationTrace trace;
  trace.speed = speed;
  trace.s_bar = s_bar;
  trace.length_scale = env.is_euclidean() ? speed : 1.0;
  Lane lane(tasks, policy, solver, env, speed, s_bar, vehicle_id, depot,
            policy_seed, record_log, &trace.event_log);
  lane.run();
  trace.waits = std::move(lane.waits);
  trace.iterations = std::move(lane.iterations);
  trace.clocks.resize(vehicle_id + 1);
  trace.clocks[vehicle_id] = lane.clocks;
  trace.end_time = lane.clocks.horizon();
  return trace;
}

}  // namespace

SimulationTrace run_single(std::span<const Task> tasks,
                           const PolicyParams& policy,
                           const SolverConfig& solver, const Environment& env,
                           double speed, double s_bar, const SimOptions& opts) {
  policy.validate(env);
  solver.validate();
  if (!(speed > 0.0)) throw std::invalid_argument("speed must be positive");
  if (!(s_bar >= 0.0)) throw std::invalid_argument("s_bar must be >= 0");
  return run_lane(tasks, policy, solver, env, speed, s_bar, 0,
                  env.waiting_pose(), mix_seed(opts.policy_seed, 0),
                  opts.record_event_log);
}

std::vector<Partition> k_means_partition(std::span<const Pose> sample, int m,
                                         std::uint64_t seed,
                                         const Environment& env, double speed) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (static_cast<int>(sample.size()) < m)
    throw std::invalid_argument("sample smaller than partition count");

  RngStream rng(mix_seed(seed, 0xC3));
  int n = static_cast<int>(sample.size());

  // k-means++ seeding: each further center is drawn with probability
  // proportional to squared distance from the nearest one chosen so far.
  std::vector<int> chosen{rng.uniform_int(0, n - 1)};
  std::vector<double> nearest(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    nearest[i] = env.travel_time(sample[i], sample[chosen[0]], speed);
  while (static_cast<int>(chosen.size()) < m) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += nearest[i] * nearest[i];
    int pick;
    if (total > 0.0) {
      double r = rng.uniform01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += nearest[i] * nearest[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_int(0, n - 1);  // all remaining points coincide
    }
    chosen.push_back(pick);
    for (int i = 0; i < n; ++i)
      nearest[i] =
          std::min(nearest[i], env.travel_time(sample[i], sample[pick], speed));
  }
  std::vector<Pose> centers;
  for (int idx : chosen) centers.push_back(sample[idx]);

  std::vector<int> assign(n, -1);
  auto assign_all = [&]() {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = kNever;
      for (int c = 0; c < m; ++c) {
        double d = env.travel_time(sample[i], centers[c], speed);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    return changed;
  };

  bool stable = false;
  for (int round = 0; round < 100; ++round) {
    if (!assign_all()) {
      stable = true;
      break;
    }
    for (int c = 0; c < m; ++c) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i)
        if (assign[i] == c) members.push_back(i);
      if (members.empty()) continue;  // keep the previous center
      if (env.is_euclidean()) {
        Point mean{0.0, 0.0};
        for (int i : members) {
          mean.x += sample[i].pt.x;
          mean.y += sample[i].pt.y;
        }
        mean.x /= members.size();
        mean.y /= members.size();
        centers[c] = env.make_pose(mean);
      } else {
        // Medoid node: minimizes total travel time to the members.
        int best_node = centers[c].node;
        double best_total = kNever;
        for (int v = 0; v < env.graph().size(); ++v) {
          double total = 0.0;
          for (int i : members) total += env.graph().time(v, sample[i].node);
          if (total < best_total) {
            best_total = total;
            best_node = v;
          }
        }
        centers[c] = env.node_pose(best_node);
      }
    }
  }
  if (!stable)
    throw std::runtime_error(
        "partitioner failed to stabilize within 100 rounds; reseed");

  std::vector<Partition> partitions(m);
  for (int c = 0; c < m; ++c) partitions[c] = Partition{c, centers[c]};
  return partitions;
}

int nearest_partition(std::span<const Partition> partitions, const Pose& p,
                      const Environment& env, double speed) {
  int best = 0;
  double best_d = kNever;
  for (const Partition& part : partitions) {
    double d = env.travel_time(p, part.depot, speed);
    if (d < best_d) {
      best_d = d;
      best = part.vehicle_id;
    }
  }
  return best;
}

FleetResult run_fleet(std::span<const Task> tasks,
                      const std::vector<PolicyParams>& policies, int m,
                      const SolverConfig& solver, const Environment& env,
                      double speed, double s_bar, double lambda,
                      const FleetOptions& opts) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (policies.empty())
    throw std::invalid_argument("at least one policy required");
  if (policies.size() != 1 && static_cast<int>(policies.size()) != m)
    throw std::invalid_argument("policy list must have one entry or m");
  auto policy_for = [&](int vid) -> const PolicyParams& {
    return policies.size() == 1 ? policies[0] : policies[vid];
  };

  FleetResult result;
  if (m == 1) {
    // Degenerate case: one vehicle waiting at the environment's own pose.
    result.partitions = {Partition{0, env.waiting_pose()}};
  } else {
    std::vector<Pose> sample;
    sample.reserve(tasks.size());
    for (const Task& t : tasks) sample.push_back(t.location);
    result.partitions =
        k_means_partition(sample, m, opts.partition_seed, env, speed);
  }

  std::vector<std::vector<Task>> lanes(m);
  for (const Task& t : tasks) {
    int vid = m == 1 ? 0
                     : nearest_partition(result.partitions, t.location, env,
                                         speed);
    lanes[vid].push_back(t);
  }

  SimulationTrace& trace = result.trace;
  trace.speed = speed;
  trace.s_bar = s_bar;
  trace.length_scale = env.is_euclidean() ? speed : 1.0;
  trace.clocks.resize(m);
  result.task_counts.resize(m);
  result.load_factors.resize(m);

  for (int vid = 0; vid < m; ++vid) {
    policy_for(vid).validate(env);
    Lane lane(lanes[vid], policy_for(vid), solver, env, speed, s_bar, vid,
              result.partitions[vid].depot, mix_seed(opts.policy_seed, vid),
              opts.record_event_log, &trace.event_log);
    lane.run();
    trace.waits.insert(trace.waits.end(), lane.waits.begin(),
                       lane.waits.end());
    trace.iterations.insert(trace.iterations.end(), lane.iterations.begin(),
                            lane.iterations.end());
    trace.clocks[vid] = lane.clocks;
    trace.end_time = std::max(trace.end_time, lane.clocks.horizon());
    result.task_counts[vid] = static_cast<int>(lanes[vid].size());
    double share = tasks.empty() ? 0.0
                                 : static_cast<double>(lanes[vid].size()) /
                                       static_cast<double>(tasks.size());
    result.load_factors[vid] = lambda * share * s_bar;
  }
  return result;
}

std::string waits_csv(const SimulationTrace& trace) {
  std::string out =
      "task_id,vehicle_id,arrival,service_start,service_end,wait,"
      "system_time,iteration\n";
  for (const WaitRecord& w : trace.waits) {
    out += format_int(w.task_id);
    out += ',';
    out += format_int(w.vehicle_id);
    out += ',';
    out += format_double(w.arrival_time);
    out += ',';
    out += format_double(w.service_start);
    out += ',';
    out += format_double(w.service_end);
    out += ',';
    out += format_double(w.wait());
    out += ',';
    out += format_double(w.system_time());
    out += ',';
    out += format_int(w.iteration);
    out += '\n';
  }
  return out;
}

std::string queue_csv(const SimulationTrace& trace) {
  std::string out = "iteration,epoch_time,n_outstanding,planned_tour_length\n";
  for (const IterationRecord& r : trace.iterations) {
    out += format_int(r.iteration);
    out += ',';
    out += format_double(r.epoch_time);
    out += ',';
    out += format_int(r.n_outstanding);
    out += ',';
    out += format_double(r.planned_travel_time * trace.length_scale);
    out += '\n';
  }
  return out;
}

}  // namespace dvrp
