#include "dvrp/cost.hpp"

#include <algorithm>

namespace dvrp {

namespace {

double norm_root(double pow_sum, double p) {
  if (pow_sum <= 0.0) return 0.0;
  if (p == 1.0) return pow_sum;
  if (p == 2.0) return std::sqrt(pow_sum);
  return std::pow(pow_sum, 1.0 / p);
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidEditError(what);
}

}  // namespace

void validate_plan(const TourPlan& plan) {
  std::size_t n = plan.visits.size();
  if (plan.latent_waits.size() != n || plan.leg_times.size() != n)
    throw std::invalid_argument("plan arrays have mismatched sizes");
  if (plan.s_bar < 0.0) throw std::invalid_argument("plan s_bar negative");
  for (double t : plan.latent_waits)
    if (!(t >= 0.0)) throw std::invalid_argument("negative latent wait");
  for (double l : plan.leg_times)
    if (!(l >= 0.0)) throw std::invalid_argument("negative leg time");
  std::vector<int> ids = plan.visits;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw std::invalid_argument("duplicate visit in plan");
}

std::vector<double> planned_waits(const TourPlan& plan, bool include_latent) {
  std::vector<double> waits(plan.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    cum += plan.leg_times[i] + plan.s_bar;
    waits[i] = (include_latent ? plan.latent_waits[i] : 0.0) + cum;
  }
  return waits;
}

double evaluate(const TourPlan& plan, const Objective& obj) {
  return PlanEvaluator(plan, obj).cost();
}

PlanEvaluator::PlanEvaluator(const TourPlan& plan, const Objective& obj)
    : plan_(&plan), obj_(obj), n_(static_cast<int>(plan.size())) {
  obj.validate();
  if (plan.latent_waits.size() != plan.visits.size() ||
      plan.leg_times.size() != plan.visits.size())
    throw std::invalid_argument("plan arrays have mismatched sizes");

  cum_.resize(n_);
  pow_prefix_.assign(n_ + 1, 0.0);
  max_prefix_.assign(n_ + 1, 0.0);
  double cum = 0.0;
  double acc = 0.0;
  double mx = 0.0;
  bool pnorm = obj_.mode == Objective::Mode::PNorm;
  for (int i = 0; i < n_; ++i) {
    leg_sum_ += plan.leg_times[i];
    cum += plan.leg_times[i] + plan.s_bar;
    cum_[i] = cum;
    double w = (obj_.include_latent ? plan.latent_waits[i] : 0.0) + cum;
    if (pnorm) acc += pow_wait(w, obj_.p);
    mx = std::max(mx, w);
    pow_prefix_[i + 1] = acc;
    max_prefix_[i + 1] = mx;
  }
  switch (obj_.mode) {
    case Objective::Mode::PNorm:
      cost_ = n_ > 0 ? norm_root(acc, obj_.p) : 0.0;
      break;
    case Objective::Mode::PathLength:
      cost_ = leg_sum_;
      break;
    case Objective::Mode::MaxWait:
      cost_ = mx;
      break;
  }
}

template <typename EditedView>
double PlanEvaluator::edited_cost_from(int first_changed, int new_size,
                                       const EditedView& view) const {
  const double s_bar = plan_->s_bar;
  double cum = first_changed > 0 ? cum_[first_changed - 1] : 0.0;
  if (obj_.mode == Objective::Mode::PNorm) {
    double acc = pow_prefix_[first_changed];
    for (int q = first_changed; q < new_size; ++q) {
      auto [leg, latent] = view(q);
      cum += leg + s_bar;
      double w = (obj_.include_latent ? latent : 0.0) + cum;
      acc += pow_wait(w, obj_.p);
    }
    return new_size > 0 ? norm_root(acc, obj_.p) : 0.0;
  }
  double mx = max_prefix_[first_changed];
  for (int q = first_changed; q < new_size; ++q) {
    auto [leg, latent] = view(q);
    cum += leg + s_bar;
    double w = (obj_.include_latent ? latent : 0.0) + cum;
    mx = std::max(mx, w);
  }
  return mx;
}

double PlanEvaluator::relocate_cost(const RelocateEdit& e) const {
  require(e.count >= 1 && e.from >= 0 && e.from + e.count <= n_ && e.to >= 0 &&
              e.to + e.count <= n_,
          "relocate block out of range");
  if (e.from == e.to) return cost_;
  const auto& leg = plan_->leg_times;
  const auto& lat = plan_->latent_waits;
  int tail_from = e.from + e.count - 1;  // block tail, pre-edit
  int tail_to = e.to + e.count - 1;      // block tail, post-edit

  if (obj_.mode == Objective::Mode::PathLength) {
    double removed = leg[e.from] + (tail_from < n_ - 1 ? leg[tail_from + 1] : 0.0);
    double added = e.leg_in;
    if (tail_from < n_ - 1) added += e.leg_bridge;
    if (e.to < e.from) {
      removed += leg[e.to];
      added += e.leg_out;
    } else if (tail_to < n_ - 1) {
      removed += leg[e.to + e.count];
      added += e.leg_out;
    }
    return leg_sum_ - removed + added;
  }

  if (e.to < e.from) {
    auto view = [&](int q) -> std::pair<double, double> {
      if (q <= tail_to) {
        int o = e.from + (q - e.to);
        return {q == e.to ? e.leg_in : leg[o], lat[o]};
      }
      if (q == tail_to + 1) return {e.leg_out, lat[e.to]};
      if (q <= tail_from) return {leg[q - e.count], lat[q - e.count]};
      if (q == tail_from + 1) return {e.leg_bridge, lat[q]};
      return {leg[q], lat[q]};
    };
    return edited_cost_from(e.to, n_, view);
  }
  auto view = [&](int q) -> std::pair<double, double> {
    if (q == e.from) return {e.leg_bridge, lat[e.from + e.count]};
    if (q < e.to) return {leg[q + e.count], lat[q + e.count]};
    if (q <= tail_to) {
      int o = e.from + (q - e.to);
      return {q == e.to ? e.leg_in : leg[o], lat[o]};
    }
    if (q == tail_to + 1) return {e.leg_out, lat[q]};
    return {leg[q], lat[q]};
  };
  return edited_cost_from(e.from, n_, view);
}

double PlanEvaluator::reverse_cost(const ReverseEdit& e) const {
  require(e.first >= 0 && e.first <= e.last && e.last < n_,
          "reverse segment out of range");
  if (e.first == e.last) return cost_;
  const auto& leg = plan_->leg_times;
  const auto& lat = plan_->latent_waits;

  if (obj_.mode == Objective::Mode::PathLength) {
    double removed = leg[e.first] + (e.last < n_ - 1 ? leg[e.last + 1] : 0.0);
    double added = e.leg_in + (e.last < n_ - 1 ? e.leg_out : 0.0);
    return leg_sum_ - removed + added;
  }

  auto view = [&](int q) -> std::pair<double, double> {
    if (q <= e.last) {
      int o = e.last - (q - e.first);
      return {q == e.first ? e.leg_in : leg[o + 1], lat[o]};
    }
    if (q == e.last + 1) return {e.leg_out, lat[q]};
    return {leg[q], lat[q]};
  };
  return edited_cost_from(e.first, n_, view);
}

double PlanEvaluator::insert_cost(const InsertEdit& e) const {
  require(e.pos >= 0 && e.pos <= n_, "insert position out of range");
  const auto& leg = plan_->leg_times;
  const auto& lat = plan_->latent_waits;

  if (obj_.mode == Objective::Mode::PathLength) {
    double removed = e.pos < n_ ? leg[e.pos] : 0.0;
    double added = e.leg_in + (e.pos < n_ ? e.leg_out : 0.0);
    return leg_sum_ - removed + added;
  }

  auto view = [&](int q) -> std::pair<double, double> {
    if (q == e.pos) return {e.leg_in, e.latent};
    if (q == e.pos + 1) return {e.leg_out, lat[e.pos]};
    return {leg[q - 1], lat[q - 1]};
  };
  return edited_cost_from(e.pos, n_ + 1, view);
}

double PlanEvaluator::remove_cost(const RemoveEdit& e) const {
  require(e.pos >= 0 && e.pos < n_, "remove position out of range");
  const auto& leg = plan_->leg_times;
  const auto& lat = plan_->latent_waits;

  if (obj_.mode == Objective::Mode::PathLength) {
    double removed = leg[e.pos] + (e.pos < n_ - 1 ? leg[e.pos + 1] : 0.0);
    double added = e.pos < n_ - 1 ? e.leg_bridge : 0.0;
    return leg_sum_ - removed + added;
  }

  auto view = [&](int q) -> std::pair<double, double> {
    if (q == e.pos) return {e.leg_bridge, lat[e.pos + 1]};
    return {leg[q + 1], lat[q + 1]};
  };
  return edited_cost_from(e.pos, n_ - 1, view);
}

double PlanEvaluator::edited_cost(const PlanEdit& edit) const {
  return std::visit(
      [&](const auto& e) -> double {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, RelocateEdit>) return relocate_cost(e);
        if constexpr (std::is_same_v<T, ReverseEdit>) return reverse_cost(e);
        if constexpr (std::is_same_v<T, InsertEdit>) return insert_cost(e);
        if constexpr (std::is_same_v<T, RemoveEdit>) return remove_cost(e);
      },
      edit);
}

double PlanEvaluator::delta(const PlanEdit& edit) const {
  return edited_cost(edit) - cost_;
}

double evaluate_suffix_delta(const TourPlan& plan, const Objective& obj,
                             const PlanEdit& edit) {
  return PlanEvaluator(plan, obj).delta(edit);
}

TourPlan apply_edit(const TourPlan& plan, const PlanEdit& edit) {
  int n = static_cast<int>(plan.size());
  TourPlan out = plan;
  auto& visits = out.visits;
  auto& lat = out.latent_waits;
  auto& leg = out.leg_times;

  if (const auto* e = std::get_if<RelocateEdit>(&edit)) {
    require(e->count >= 1 && e->from >= 0 && e->from + e->count <= n &&
                e->to >= 0 && e->to + e->count <= n,
            "relocate block out of range");
    if (e->from == e->to) return out;
    std::vector<int> block_ids(visits.begin() + e->from,
                               visits.begin() + e->from + e->count);
    std::vector<double> block_lat(lat.begin() + e->from,
                                  lat.begin() + e->from + e->count);
    std::vector<double> block_leg(leg.begin() + e->from,
                                  leg.begin() + e->from + e->count);
    visits.erase(visits.begin() + e->from, visits.begin() + e->from + e->count);
    lat.erase(lat.begin() + e->from, lat.begin() + e->from + e->count);
    leg.erase(leg.begin() + e->from, leg.begin() + e->from + e->count);
    if (e->from < static_cast<int>(leg.size())) leg[e->from] = e->leg_bridge;
    block_leg[0] = e->leg_in;
    visits.insert(visits.begin() + e->to, block_ids.begin(), block_ids.end());
    lat.insert(lat.begin() + e->to, block_lat.begin(), block_lat.end());
    leg.insert(leg.begin() + e->to, block_leg.begin(), block_leg.end());
    if (e->to + e->count < n) leg[e->to + e->count] = e->leg_out;
    return out;
  }
  if (const auto* e = std::get_if<ReverseEdit>(&edit)) {
    require(e->first >= 0 && e->first <= e->last && e->last < n,
            "reverse segment out of range");
    if (e->first == e->last) return out;
    std::reverse(visits.begin() + e->first, visits.begin() + e->last + 1);
    std::reverse(lat.begin() + e->first, lat.begin() + e->last + 1);
    std::vector<double> seg(leg.begin() + e->first, leg.begin() + e->last + 1);
    leg[e->first] = e->leg_in;
    // seg[i] is the old leg into visit first+i; symmetric metric lets the
    // reversed segment reuse it between the same endpoints.
    for (int q = e->first + 1; q <= e->last; ++q) leg[q] = seg[e->last + 1 - q];
    if (e->last + 1 < n) leg[e->last + 1] = e->leg_out;
    return out;
  }
  if (const auto* e = std::get_if<InsertEdit>(&edit)) {
    require(e->pos >= 0 && e->pos <= n, "insert position out of range");
    visits.insert(visits.begin() + e->pos, e->task_id);
    lat.insert(lat.begin() + e->pos, e->latent);
    leg.insert(leg.begin() + e->pos, e->leg_in);
    if (e->pos + 1 < n + 1) leg[e->pos + 1] = e->leg_out;
    return out;
  }
  const auto& e = std::get<RemoveEdit>(edit);
  require(e.pos >= 0 && e.pos < n, "remove position out of range");
  visits.erase(visits.begin() + e.pos);
  lat.erase(lat.begin() + e.pos);
  leg.erase(leg.begin() + e.pos);
  if (e.pos < static_cast<int>(leg.size())) leg[e.pos] = e.leg_bridge;
  return out;
}

}  // namespace dvrp
