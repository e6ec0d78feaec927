#include "dvrp/policies.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "dvrp/sim.hpp"

using namespace dvrp;

namespace {

Pose at(double x, double y) { return Pose{{x, y}, -1}; }

Task task(int id, double x, double y, double arrival) {
  return Task{id, at(x, y), arrival, 0.0};
}

PlanningContext context(const Environment& env, double s_bar = 0.0) {
  PlanningContext ctx;
  ctx.env = &env;
  ctx.speed = 1.0;
  ctx.s_bar = s_bar;
  ctx.solver.construction = SolverConfig::Construction::NearestNeighbor;
  ctx.solver.moves.clear();
  return ctx;
}

}  // namespace

TEST_CASE("policy presets pin the whole parameter table") {
  PolicyParams p = policy_preset("proposed");
  CHECK(p.kind == PolicyParams::Kind::Generalized);
  CHECK(p.p == 1.5);
  CHECK(p.eta == 0.05);
  CHECK(p.include_latent);
  CHECK_FALSE(p.random_fragment);
  CHECK(p.label == "proposed");
  CHECK(p.objective().mode == Objective::Mode::PNorm);
  CHECK(p.objective().p == 1.5);
  CHECK(p.objective().include_latent);

  p = policy_preset("proposed_eta02");
  CHECK(p.kind == PolicyParams::Kind::Generalized);
  CHECK(p.p == 1.5);
  CHECK(p.eta == 0.2);
  CHECK(p.include_latent);
  CHECK_FALSE(p.random_fragment);

  p = policy_preset("batch");
  CHECK(p.kind == PolicyParams::Kind::Generalized);
  CHECK(std::isinf(p.p));
  CHECK(p.eta == 1.0);
  CHECK_FALSE(p.include_latent);
  CHECK_FALSE(p.random_fragment);
  CHECK(p.objective().mode == Objective::Mode::PathLength);

  p = policy_preset("eta_batch");
  CHECK(p.kind == PolicyParams::Kind::Generalized);
  CHECK(std::isinf(p.p));
  CHECK(p.eta == 0.2);
  CHECK_FALSE(p.include_latent);
  CHECK(p.random_fragment);

  p = policy_preset("dc_batch");
  CHECK(p.kind == PolicyParams::Kind::DcBatch);
  CHECK(std::isinf(p.p));
  CHECK(p.eta == 1.0);
  CHECK(p.sector_count == 10);
  CHECK_FALSE(p.random_fragment);

  p = policy_preset("c2_event");
  CHECK(p.kind == PolicyParams::Kind::EventTriggered);
  CHECK(p.p == 2.0);
  CHECK(p.include_latent);
  CHECK(p.objective().mode == Objective::Mode::PNorm);

  CHECK(policy_preset_names().size() == 6);
  for (const std::string& name : policy_preset_names())
    CHECK(policy_preset(name).label == name);
  CHECK_THROWS_AS(policy_preset("nope"), std::invalid_argument);
}

TEST_CASE("policy parameter validation") {
  Environment env = Environment::euclidean(1.0, 1.0);
  PolicyParams p = policy_preset("proposed");
  CHECK_NOTHROW(p.validate(env));

  p.eta = 0.0;
  CHECK_THROWS_AS(p.validate(env), std::invalid_argument);
  p.eta = 1.5;
  CHECK_THROWS_AS(p.validate(env), std::invalid_argument);
  p = policy_preset("proposed");
  p.p = 0.9;
  CHECK_THROWS_AS(p.validate(env), std::invalid_argument);

  PolicyParams dc = policy_preset("dc_batch");
  dc.sector_count = 0;
  CHECK_THROWS_AS(dc.validate(env), std::invalid_argument);

  RoadmapGraph g;
  g.add_node("a", {0.0, 0.0});
  g.add_node("b", {1.0, 0.0});
  g.add_edge("a", "b", 1.0);
  g.finalize();
  Environment road = Environment::roadmap(std::move(g));
  CHECK_THROWS_AS(policy_preset("dc_batch").validate(road), std::invalid_argument);

  PolicyParams ev = policy_preset("c2_event");
  ev.p = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ev.validate(env), std::invalid_argument);
}

TEST_CASE("fragment size is ceil(eta n) with a floor of one") {
  CHECK(fragment_size(0.2, 10) == 2);
  CHECK(fragment_size(0.05, 10) == 1);
  CHECK(fragment_size(0.01, 5) == 1);
  CHECK(fragment_size(1.0, 7) == 7);
  CHECK(fragment_size(0.34, 10) == 4);
  CHECK(fragment_size(0.2, 5) == 1);  // exact products do not round up
  CHECK(fragment_size(0.5, 0) == 0);
}

TEST_CASE("batch commits the whole queue head first") {
  Environment env = Environment::euclidean(1.0, 1.0);
  RngStream rng(5);
  std::vector<Task> queue;
  for (int i = 0; i < 10; ++i)
    queue.push_back(task(i, rng.uniform01(), rng.uniform01(), 0.0));
  PolicyState state(1);
  auto c = plan_fragment(policy_preset("batch"), state, queue, at(0.5, 0.5),
                         1.0, context(env));
  REQUIRE(c.has_value());
  CHECK(c->start_index == 1);
  CHECK(c->epoch == 1.0);
  CHECK(c->task_ids.size() == 10);
  CHECK(c->task_ids == c->plan.visits);
}

TEST_CASE("eta fragment is cut from the plan head") {
  Environment env = Environment::euclidean(1.0, 1.0);
  RngStream rng(9);
  std::vector<Task> queue;
  for (int i = 0; i < 10; ++i)
    queue.push_back(task(i, rng.uniform01(), rng.uniform01(), 0.0));
  PolicyState state(1);
  auto c = plan_fragment(policy_preset("proposed_eta02"), state, queue,
                         at(0.5, 0.5), 2.0, context(env, 0.3));
  REQUIRE(c.has_value());
  CHECK(c->start_index == 1);
  CHECK(c->task_ids.size() == 2);
  CHECK(c->task_ids ==
        std::vector<int>(c->plan.visits.begin(), c->plan.visits.begin() + 2));
}

TEST_CASE("random fragment start is uniform and clamps at the tail") {
  Environment env = Environment::euclidean(1.0, 1.0);
  RngStream rng(31);
  std::vector<Task> queue;
  for (int i = 0; i < 10; ++i)
    queue.push_back(task(i, rng.uniform01(), rng.uniform01(), 0.0));
  PolicyState state(77);
  PolicyParams params = policy_preset("eta_batch");
  PlanningContext ctx = context(env);

  std::map<int, int> counts;
  for (int draw = 0; draw < 10000; ++draw) {
    auto c = plan_fragment(params, state, queue, at(0.5, 0.5), 1.0, ctx);
    REQUIRE(c.has_value());
    REQUIRE(c->start_index >= 1);
    REQUIRE(c->start_index <= 10);
    ++counts[c->start_index];
    std::size_t want = c->start_index == 10 ? 1 : 2;  // clamped at the tail
    REQUIRE(c->task_ids.size() == want);
    std::size_t first = static_cast<std::size_t>(c->start_index - 1);
    REQUIRE(c->task_ids == std::vector<int>(c->plan.visits.begin() + first,
                                            c->plan.visits.begin() + first + want));
  }
  REQUIRE(counts.size() == 10);
  for (const auto& [index, count] : counts) {
    // binomial(10000, 0.1): mean 1000, three sigma is 90
    CHECK(count >= 910);
    CHECK(count <= 1090);
  }
}

TEST_CASE("planning freezes latents at the epoch") {
  Environment env = Environment::euclidean(1.0, 1.0);
  std::vector<Task> queue{task(0, 0.2, 0.2, 0.0), task(1, 0.8, 0.2, 1.0),
                          task(2, 0.5, 0.8, 3.0)};
  PolicyState state(1);
  auto c = plan_fragment(policy_preset("proposed"), state, queue, at(0.5, 0.5),
                         5.0, context(env, 0.2));
  REQUIRE(c.has_value());
  REQUIRE(c->plan.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    double arrival = queue[static_cast<std::size_t>(c->plan.visits[i])].arrival_time;
    CHECK(c->plan.latent_waits[i] == 5.0 - arrival);
  }

  SUBCASE("planning before an arrival is rejected") {
    std::vector<Task> future{task(0, 0.2, 0.2, 5.0)};
    CHECK_THROWS_AS(plan_fragment(policy_preset("proposed"), state, future,
                                  at(0.5, 0.5), 1.0, context(env)),
                    std::invalid_argument);
  }
}

TEST_CASE("accrued wait redirects the proposed policy but not batch") {
  Environment env = Environment::euclidean(12.0, 1.0);
  // near task just arrived, far task has waited 200 time units
  double now = 200.0;
  std::vector<Task> queue{task(0, 5.0, 0.5, now), task(1, 11.0, 0.5, 0.0)};
  Pose start = at(6.0, 0.5);

  // exchange both orders by hand under the c^1.5 cost to pin the oracle
  Objective obj = Objective::p_norm(1.5);
  TourPlan far_first{start, {1, 0}, {200.0, 0.0}, {5.0, 6.0}, 0.0};
  TourPlan near_first{start, {0, 1}, {0.0, 200.0}, {1.0, 6.0}, 0.0};
  REQUIRE(evaluate(far_first, obj) < evaluate(near_first, obj));

  PolicyState state(1);
  PlanningContext ctx = context(env);
  ctx.solver = SolverConfig{};  // needs the move set to escape the greedy order
  auto proposed = plan_fragment(policy_preset("proposed"), state, queue, start,
                                now, ctx);
  REQUIRE(proposed.has_value());
  CHECK(proposed->task_ids == std::vector<int>{1});  // eta 0.05 commits one

  auto batch = plan_fragment(policy_preset("batch"), state, queue, start, now,
                             ctx);
  REQUIRE(batch.has_value());
  CHECK(batch->task_ids == std::vector<int>{0, 1});  // shortest path ignores it
}

TEST_CASE("empty queue commits nothing for every preset") {
  Environment env = Environment::euclidean(1.0, 1.0);
  for (const std::string& name : policy_preset_names()) {
    PolicyState state(1);
    CHECK_FALSE(plan_fragment(policy_preset(name), state, {}, at(0.5, 0.5),
                              1.0, context(env))
                    .has_value());
  }
}

TEST_CASE("event policy commits exactly one task per epoch") {
  Environment env = Environment::euclidean(1.0, 1.0);
  RngStream rng(23);
  std::vector<Task> queue;
  for (int i = 0; i < 5; ++i)
    queue.push_back(task(i, rng.uniform01(), rng.uniform01(), 0.0));
  PolicyState state(1);
  auto c = plan_fragment(policy_preset("c2_event"), state, queue, at(0.5, 0.5),
                         0.5, context(env, 0.4));
  REQUIRE(c.has_value());
  CHECK(c->start_index == 1);
  CHECK(c->plan.size() == 5);
  CHECK(c->task_ids == std::vector<int>{c->plan.visits[0]});
}

TEST_CASE("event trigger replans on arrivals only") {
  PolicyParams ev = policy_preset("c2_event");
  CHECK(event_replan_trigger(SimEvent::TaskArrival, ev) == ReplanDecision::Replan);
  CHECK(event_replan_trigger(SimEvent::ServiceCompleted, ev) ==
        ReplanDecision::Continue);
  CHECK_THROWS_AS(event_replan_trigger(SimEvent::TaskArrival, policy_preset("batch")),
                  std::invalid_argument);
}

TEST_CASE("sector rotation services the next occupied sector") {
  Environment env = Environment::euclidean(1.0, 1.0);
  SectorFan fan = make_sectors(env, 10);

  // 120 degrees from the centre lands in the fourth 36-degree wedge
  Point p3{0.5 + 0.3 * std::cos(2.0 * M_PI / 3.0),
           0.5 + 0.3 * std::sin(2.0 * M_PI / 3.0)};
  REQUIRE(fan.sector_index(p3) == 3);
  std::vector<Task> only3{Task{0, Pose{p3, -1}, 0.0, 0.0}};
  CHECK(dc_next_sector(7, fan, only3) == 3);
  CHECK(dc_next_sector(3, fan, only3) == 3);  // full cycle returns home

  Point p2{0.5, 0.8};                                      // 90 degrees
  Point p9{0.5 + 0.3 * std::cos(-2.0 * M_PI * 0.05),
           0.5 + 0.3 * std::sin(-2.0 * M_PI * 0.05)};      // 342 degrees
  REQUIRE(fan.sector_index(p2) == 2);
  REQUIRE(fan.sector_index(p9) == 9);
  std::vector<Task> both{Task{0, Pose{p2, -1}, 0.0, 0.0},
                         Task{1, Pose{p9, -1}, 0.0, 0.0}};
  CHECK(dc_next_sector(2, fan, both) == 9);
  CHECK(dc_next_sector(9, fan, both) == 2);
  CHECK(dc_next_sector(-1, fan, both) == 2);

  CHECK(dc_next_sector(4, fan, {}) == -1);
}

TEST_CASE("single-sector rotation degenerates to batch") {
  Environment env = Environment::euclidean(1.0, 1.0);
  RngStream rng(47);
  std::vector<Task> queue;
  for (int i = 0; i < 8; ++i)
    queue.push_back(task(i, rng.uniform01(), rng.uniform01(), 0.0));

  PolicyParams dc = policy_preset("dc_batch");
  dc.sector_count = 1;
  PolicyState s1(1), s2(1);
  auto lhs = plan_fragment(dc, s1, queue, at(0.5, 0.5), 1.0, context(env));
  auto rhs = plan_fragment(policy_preset("batch"), s2, queue, at(0.5, 0.5),
                           1.0, context(env));
  REQUIRE(lhs.has_value());
  REQUIRE(rhs.has_value());
  CHECK(lhs->task_ids == rhs->task_ids);
  CHECK(lhs->plan.visits == rhs->plan.visits);
  CHECK(s1.dc_pointer == 0);
}

TEST_CASE("random fragments keep old tasks from starving") {
  // a task should survive about 1/eta replans before commitment; allow 2/eta
  Environment env = Environment::euclidean(1.0, 1.0);
  WorkloadSpec spec;
  spec.n_tasks = 1200;
  spec.rho = 0.7;
  spec.s_bar = 1.0;
  spec.s_std = 0.1;
  spec.seed = 11;
  std::vector<Task> tasks = generate_workload(spec, env);

  SolverConfig solver;
  solver.construction = SolverConfig::Construction::NearestNeighbor;
  solver.moves.clear();
  SimulationTrace trace =
      run_single(tasks, policy_preset("eta_batch"), solver, env, 1.0, 1.0);

  double survived = 0.0;
  for (const WaitRecord& w : trace.waits) {
    int first = 0;
    for (const IterationRecord& it : trace.iterations)
      if (it.epoch_time >= w.arrival_time) {
        first = it.iteration;
        break;
      }
    REQUIRE(w.iteration >= first);
    survived += w.iteration - first;
  }
  CHECK(survived / static_cast<double>(trace.waits.size()) <= 10.0);
}
