#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include "dvrp/environment.hpp"

namespace dvrp {

struct Objective {
  enum class Mode { PNorm, PathLength, MaxWait };
  Mode mode = Mode::PNorm;
  double p = 1.0;             // PNorm only
  bool include_latent = true; // ignored by PathLength

  static Objective p_norm(double p, bool include_latent = true) {
    return Objective{Mode::PNorm, p, include_latent};
  }
  static Objective path_length() {
    return Objective{Mode::PathLength, 1.0, false};
  }
  static Objective max_wait(bool include_latent = true) {
    return Objective{Mode::MaxWait, 1.0, include_latent};
  }

  void validate() const {
    if (mode == Mode::PNorm && !(p >= 1.0))
      throw std::invalid_argument("p-norm exponent must be >= 1");
  }
};

// An open tour from a fixed start pose. Entry i of visits is served i-th;
// leg_times[i] is the travel time into visit i from the previous stop.
// The planned wait of visit i is
//   latent_waits[i] + sum_{j<=i} (leg_times[j] + s_bar),
// which charges the expected service time s_bar for every stop up to and
// including i.
struct TourPlan {
  Pose start{};
  std::vector<int> visits;
  std::vector<double> latent_waits;
  std::vector<double> leg_times;
  double s_bar = 0.0;

  std::size_t size() const { return visits.size(); }
};

// Structural sanity: aligned sizes, no duplicate visits, non-negative times.
void validate_plan(const TourPlan& plan);

std::vector<double> planned_waits(const TourPlan& plan, bool include_latent);

double evaluate(const TourPlan& plan, const Objective& obj);

// Plan edits. Leg values are supplied by the caller (who owns the metric);
// indices refer to positions in the pre-edit plan unless noted.
//
// Relocate moves the block visits[from..from+count-1], in order, so it
// starts at index `to` of the edited plan. leg_bridge closes the gap left
// behind (unused when the block ends the plan); leg_in enters the block
// head; leg_out leaves the block tail (unused when the block lands at the
// end). Interior block legs are reused unchanged.
struct RelocateEdit {
  int from = 0;
  int to = 0;
  int count = 1;
  double leg_bridge = 0.0;
  double leg_in = 0.0;
  double leg_out = 0.0;
};

// Reverses visits[first..last] inclusive. Interior legs are reused in
// reverse order, which assumes a symmetric travel metric. leg_in enters the
// segment's new head; leg_out leaves its new tail (unused when last is the
// final visit).
struct ReverseEdit {
  int first = 0;
  int last = 0;
  double leg_in = 0.0;
  double leg_out = 0.0;
};

// Inserts a new visit so it lands at index `pos` (0 <= pos <= n). leg_out is
// unused when pos == n.
struct InsertEdit {
  int pos = 0;
  int task_id = 0;
  double latent = 0.0;
  double leg_in = 0.0;
  double leg_out = 0.0;
};

// Removes the visit at `pos`. leg_bridge joins its old neighbours (unused
// when pos is the last visit).
struct RemoveEdit {
  int pos = 0;
  double leg_bridge = 0.0;
};

using PlanEdit = std::variant<RelocateEdit, ReverseEdit, InsertEdit, RemoveEdit>;

struct InvalidEditError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

TourPlan apply_edit(const TourPlan& plan, const PlanEdit& edit);

// evaluate(apply_edit(plan, edit), obj) - evaluate(plan, obj), computed from
// cached prefix aggregates in O(n) worst case without materializing the
// edited plan.
double evaluate_suffix_delta(const TourPlan& plan, const Objective& obj,
                             const PlanEdit& edit);

// x^p for x >= 0 with direct forms for the common exponents.
inline double pow_wait(double x, double p) {
  if (p == 1.0) return x;
  if (p == 1.5) return x * std::sqrt(x);
  if (p == 2.0) return x * x;
  if (p == 3.0) return x * x * x;
  if (p == 4.0) {
    double x2 = x * x;
    return x2 * x2;
  }
  return std::pow(x, p);
}

// Caches prefix aggregates of one plan so many candidate edits can be scored
// cheaply against it. Rebuild (assign a fresh instance) after accepting an
// edit.
class PlanEvaluator {
 public:
  PlanEvaluator() = default;
  PlanEvaluator(const TourPlan& plan, const Objective& obj);

  double cost() const { return cost_; }
  double delta(const PlanEdit& edit) const;
  double edited_cost(const PlanEdit& edit) const;

 private:
  template <typename EditedView>
  double edited_cost_from(int first_changed, int new_size,
                          const EditedView& view) const;
  double relocate_cost(const RelocateEdit& e) const;
  double reverse_cost(const ReverseEdit& e) const;
  double insert_cost(const InsertEdit& e) const;
  double remove_cost(const RemoveEdit& e) const;

  const TourPlan* plan_ = nullptr;
  Objective obj_{};
  int n_ = 0;
  double cost_ = 0.0;
  double leg_sum_ = 0.0;
  std::vector<double> cum_;         // cum_[i] = sum_{j<=i} (leg_j + s_bar)
  std::vector<double> pow_prefix_;  // pow_prefix_[i] = sum_{j<i} w_j^p
  std::vector<double> max_prefix_;  // max_prefix_[i] = max_{j<i} w_j
};

}  // namespace dvrp
