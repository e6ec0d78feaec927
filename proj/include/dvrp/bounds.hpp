#pragma once

#include <functional>
#include <span>
#include <string>

#include "dvrp/cost.hpp"
#include "dvrp/environment.hpp"
#include "dvrp/sim.hpp"
#include "dvrp/workload.hpp"

namespace dvrp {

// Inputs for the analytic plan-length bound. max_task_time is the composite
// worst case for a single stop: diameter / speed + mean service time.
struct BoundCheckConfig {
  double p = 1.0;
  double max_task_time = 0.0;
  double s_bar = 0.0;
  double tolerance = 1e-9;

  void validate() const;
};

struct BoundCheck {
  bool holds = false;
  // False when the instance breaks an assumption of the bound (for the plan
  // length bound: some composite leg exceeds max_task_time). In that case
  // `holds` is not meaningful and callers should report the precondition,
  // not a violation.
  bool precondition_ok = true;
  double lhs = 0.0;
  double rhs = 0.0;
};

// Pluggable cost evaluation, used by fault-injection tests to verify the
// checks actually bite. Defaults to evaluate().
using CostEvalFn = std::function<double(const TourPlan&, const Objective&)>;

// Plan duration bound: the composite plan length (travel legs plus one mean
// service per stop) is at most ((p+1) * Q * c^p)^(1/(p+1)) where Q is the
// composite max task time and c is the p-norm cost with latents included.
BoundCheck check_plan_length_bound(const TourPlan& plan, const BoundCheckConfig& cfg,
                                   const CostEvalFn& cost_fn = {});

// Geometric tour bound for n points in a rectangle of area A and perimeter P:
// the optimal closed tour is no longer than sqrt(2*A*n) + P. `plan` must be a
// length-optimal open path over `tasks` (re-verified internally against the
// exhaustive solver, so n must be within its reach); the closed length adds
// the return leg to the start pose.
BoundCheck check_tour_length_bound(std::span<const Task> tasks, const Environment& env,
                                   const TourPlan& plan, double tolerance = 1e-9);

// Growth exponent for queue-length-driven plan costs: (p*gamma + 1) / (p + 1).
double queue_growth_exponent(double p, double gamma);

// Empirical check of the queue recursion envelope
//   N_{k+1} <= lambda*Q + lambda*eta*l_k + (rho*eta + 1 - eta) * N_k
// over the steady-state part of a generalized-policy trace, plus the length
// envelope l_k <= beta * N_k^kappa. Confidence intervals are batch-means
// bootstrap so serial correlation between epochs does not fake precision.
struct EnvelopeReport {
  int steady_iterations = 0;
  int pair_count = 0;
  // Fraction of steady epochs whose planned travel time fits under
  // beta * n^kappa.
  double length_envelope_fraction = 0.0;
  double lhs_mean = 0.0;
  double rhs_mean = 0.0;
  double lhs_lo = 0.0, lhs_hi = 0.0;
  double rhs_lo = 0.0, rhs_hi = 0.0;
  // Queue drift N_{k+1} - N_k with its bootstrap interval.
  double drift_mean = 0.0;
  double drift_lo = 0.0, drift_hi = 0.0;
  // lhs interval does not sit above the rhs interval.
  bool envelope_consistent = false;
  // Drift interval is strictly positive, i.e. the queue is growing.
  bool growth_detected = false;
};

struct EnvelopeConfig {
  double lambda = 0.0;
  double eta = 0.0;
  double rho = 0.0;
  double max_task_time = 0.0;
  double beta = 1.0;
  double kappa = 0.5;
  // First fraction of epochs discarded as transient.
  double steady_fraction = 0.5;
  int batches = 20;

  void validate() const;
};

// Throws InsufficientDataError when fewer than 50 steady epochs remain.
EnvelopeReport check_recursion_envelope(const SimulationTrace& trace, const EnvelopeConfig& cfg);

// Least-squares fit of beta in l ~ beta * n^kappa over the first
// `fit_fraction` of the epochs (callers then test the envelope on the rest).
double fit_length_coefficient(const SimulationTrace& trace, double kappa,
                              double fit_fraction = 0.5);

std::string envelope_report_json(const EnvelopeReport& report);

}  // namespace dvrp
