#pragma once

#include <span>
#include <string>
#include <vector>

#include "dvrp/sim.hpp"

namespace dvrp {

struct WaitStats {
  double mean = 0.0;
  double std_dev = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

// Inclusive linear-interpolation percentile over an ascending-sorted sample:
// rank h = (n - 1) * q, value interpolated between floor(h) and ceil(h).
double percentile_sorted(std::span<const double> sorted, double q);

// Population statistics (std divides by n, not n - 1).
WaitStats summarize_values(std::vector<double> values);

// Wait statistics of a trace. warmup_fraction drops the earliest-arriving
// share of tasks before summarizing.
WaitStats summarize(const SimulationTrace& trace, double warmup_fraction = 0.0);

std::vector<double> wait_values(const SimulationTrace& trace, double warmup_fraction = 0.0);

// Per-policy pooled stats over seed-aligned traces plus mean ratios against a
// reference policy. Every policy must supply the same number of traces, and
// aligned traces must describe the same workload (matching task counts);
// anything else indicates an unpaired comparison and throws.
struct PolicyComparisonRow {
  std::string policy;
  WaitStats stats;
  double mean_ratio = 1.0;
};

struct Comparison {
  std::string reference;
  std::vector<PolicyComparisonRow> rows;
};

struct PolicyTraces {
  std::string policy;
  std::vector<const SimulationTrace*> traces;
};

Comparison compare(const std::vector<PolicyTraces>& groups, const std::string& reference,
                   double warmup_fraction = 0.0);

// Equal-size batch means; a remainder is dropped from the front so the
// batches cover the most recent data. Throws InsufficientDataError when
// fewer than `batches` values are supplied.
std::vector<double> batch_means(std::span<const double> values, int batches);

// Two-sided t-test on the least-squares slope of batch means against batch
// index, at 95% confidence.
struct SlopeTest {
  double slope = 0.0;
  double std_error = 0.0;
  double t_stat = 0.0;
  double t_critical = 0.0;
  bool significant = false;
};

SlopeTest batch_slope_test(std::span<const double> values, int batches = 20);

// Spearman rank correlation with average ranks on ties.
double spearman(std::span<const double> x, std::span<const double> y);

// Kolmogorov-Smirnov distance between a sample and the exponential
// distribution with the given rate.
double ks_exponential(std::vector<double> sample, double rate);

std::string summary_csv_header();
std::string summary_csv_row(const std::string& policy, double rho, std::uint64_t seed,
                            const WaitStats& s);

}  // namespace dvrp
