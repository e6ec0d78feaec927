#include "dvrp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include "dvrp/csv.hpp"
#include "dvrp/errors.hpp"

namespace dvrp {

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("percentile rank outside [0, 1]");
  if (sorted.size() == 1) return sorted[0];
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

WaitStats summarize_values(std::vector<double> values) {
  WaitStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std_dev = std::sqrt(ss / n);
  s.median = percentile_sorted(values, 0.5);
  s.q25 = percentile_sorted(values, 0.25);
  s.q75 = percentile_sorted(values, 0.75);
  s.p95 = percentile_sorted(values, 0.95);
  s.max = values.back();
  return s;
}

std::vector<double> wait_values(const SimulationTrace& trace, double warmup_fraction) {
  if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
    throw std::invalid_argument("warmup_fraction outside [0, 1)");
  std::vector<const WaitRecord*> by_arrival;
  by_arrival.reserve(trace.waits.size());
  for (const auto& w : trace.waits) by_arrival.push_back(&w);
  std::stable_sort(by_arrival.begin(), by_arrival.end(),
                   [](const WaitRecord* a, const WaitRecord* b) {
                     return a->arrival_time < b->arrival_time;
                   });
  const auto drop =
      static_cast<std::size_t>(warmup_fraction * static_cast<double>(by_arrival.size()));
  std::vector<double> out;
  out.reserve(by_arrival.size() - drop);
  for (std::size_t i = drop; i < by_arrival.size(); ++i) out.push_back(by_arrival[i]->wait());
  return out;
}

WaitStats summarize(const SimulationTrace& trace, double warmup_fraction) {
  return summarize_values(wait_values(trace, warmup_fraction));
}

Comparison compare(const std::vector<PolicyTraces>& groups, const std::string& reference,
                   double warmup_fraction) {
  if (groups.empty()) throw std::invalid_argument("compare needs at least one policy");
  const std::size_t runs = groups.front().traces.size();
  if (runs == 0) throw std::invalid_argument("compare needs at least one trace per policy");
  for (const auto& g : groups) {
    if (g.traces.size() != runs)
      throw std::invalid_argument("unpaired comparison: policy " + g.policy + " has " +
                                  std::to_string(g.traces.size()) + " traces, expected " +
                                  std::to_string(runs));
  }
  // Aligned traces must come from the same workload; task counts are a cheap
  // proxy that catches seed misalignment.
  for (std::size_t i = 0; i < runs; ++i) {
    const std::size_t n0 = groups.front().traces[i]->waits.size();
    for (const auto& g : groups) {
      if (g.traces[i]->waits.size() != n0)
        throw std::invalid_argument("unpaired comparison: trace " + std::to_string(i) +
                                    " task counts differ between policies");
    }
  }

  Comparison out;
  out.reference = reference;
  double ref_mean = -1.0;
  for (const auto& g : groups) {
    std::vector<double> pooled;
    for (const auto* t : g.traces) {
      auto w = wait_values(*t, warmup_fraction);
      pooled.insert(pooled.end(), w.begin(), w.end());
    }
    PolicyComparisonRow row;
    row.policy = g.policy;
    row.stats = summarize_values(std::move(pooled));
    out.rows.push_back(std::move(row));
    if (g.policy == reference) ref_mean = out.rows.back().stats.mean;
  }
  if (ref_mean < 0.0) throw std::invalid_argument("reference policy not present: " + reference);
  if (ref_mean == 0.0) throw std::invalid_argument("reference policy has zero mean wait");
  for (auto& row : out.rows) row.mean_ratio = row.stats.mean / ref_mean;
  return out;
}

std::vector<double> batch_means(std::span<const double> values, int batches) {
  if (batches < 1) throw std::invalid_argument("batch count must be positive");
  if (values.size() < static_cast<std::size_t>(batches))
    throw InsufficientDataError("fewer values than batches");
  const std::size_t size = values.size() / static_cast<std::size_t>(batches);
  const std::size_t skip = values.size() - size * static_cast<std::size_t>(batches);
  std::vector<double> means(static_cast<std::size_t>(batches), 0.0);
  for (std::size_t b = 0; b < means.size(); ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < size; ++i) sum += values[skip + b * size + i];
    means[b] = sum / static_cast<double>(size);
  }
  return means;
}

namespace {

// Two-sided 95% t critical values: exact table for small df, standard
// asymptotic steps beyond it.
double t_critical_95(int df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                 2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                 2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df < 1) throw std::invalid_argument("t test needs at least one degree of freedom");
  if (df <= 30) return table[df - 1];
  if (df <= 40) return 2.021;
  if (df <= 60) return 2.000;
  if (df <= 120) return 1.980;
  return 1.960;
}

}  // namespace

SlopeTest batch_slope_test(std::span<const double> values, int batches) {
  if (batches < 3) throw std::invalid_argument("slope test needs at least 3 batches");
  const auto means = batch_means(values, batches);
  const double n = static_cast<double>(means.size());
  const double x_mean = (n - 1.0) / 2.0;
  double y_mean = 0.0;
  for (double m : means) y_mean += m;
  y_mean /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxx += dx * dx;
    sxy += dx * (means[i] - y_mean);
  }
  SlopeTest t;
  t.slope = sxy / sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double fit = y_mean + t.slope * (static_cast<double>(i) - x_mean);
    sse += (means[i] - fit) * (means[i] - fit);
  }
  const int df = batches - 2;
  t.t_critical = t_critical_95(df);
  const double resid_var = sse / static_cast<double>(df);
  t.std_error = std::sqrt(resid_var / sxx);
  if (t.std_error == 0.0) {
    t.t_stat = t.slope == 0.0 ? 0.0 : std::copysign(1e12, t.slope);
  } else {
    t.t_stat = t.slope / t.std_error;
  }
  t.significant = std::abs(t.t_stat) > t.t_critical;
  return t;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman needs equal-length samples");
  if (x.size() < 2) throw std::invalid_argument("spearman needs at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double ks_exponential(std::vector<double> sample, double rate) {
  if (sample.empty()) throw std::invalid_argument("ks test on empty sample");
  if (rate <= 0.0) throw std::invalid_argument("ks test needs a positive rate");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = 1.0 - std::exp(-rate * sample[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

std::string summary_csv_header() {
  return "policy,rho,seed,mean,std,median,q25,q75,p95,max,count";
}

std::string summary_csv_row(const std::string& policy, double rho, std::uint64_t seed,
                            const WaitStats& s) {
  std::string row = policy;
  row += ',';
  row += format_double(rho);
  row += ',';
  row += std::to_string(seed);
  for (double v : {s.mean, s.std_dev, s.median, s.q25, s.q75, s.p95, s.max}) {
    row += ',';
    row += format_double(v);
  }
  row += ',';
  row += format_int(static_cast<long long>(s.count));
  return row;
}

}  // namespace dvrp
