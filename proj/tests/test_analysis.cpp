#include "dvrp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dvrp/errors.hpp"
#include "dvrp/rng.hpp"

using namespace dvrp;

namespace {

// Trace whose task k arrives at time k and waits `waits[k]`.
SimulationTrace trace_with_waits(const std::vector<double>& waits) {
  SimulationTrace trace;
  for (std::size_t k = 0; k < waits.size(); ++k) {
    WaitRecord w;
    w.task_id = static_cast<int>(k);
    w.arrival_time = static_cast<double>(k);
    w.service_start = w.arrival_time + waits[k];
    w.service_end = w.service_start + 1.0;
    trace.waits.push_back(w);
  }
  // completion order differs from arrival order; warmup must sort by arrival
  std::reverse(trace.waits.begin(), trace.waits.end());
  return trace;
}

}  // namespace

TEST_CASE("summary statistics hand cases") {
  WaitStats s = summarize_values({5.0, 1.0, 4.0, 2.0, 3.0});
  CHECK(s.count == 5);
  CHECK(s.mean == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.std_dev == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.median == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.q25 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.q75 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s.p95 == doctest::Approx(4.8).epsilon(1e-12));
  CHECK(s.max == 5.0);

  CHECK(summarize_values({2.0, 2.0, 2.0}).std_dev == 0.0);
  // population variance, not sample variance
  CHECK(summarize_values({1.0, 2.0, 3.0, 4.0}).std_dev ==
        doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));

  WaitStats empty = summarize_values({});
  CHECK(empty.count == 0);
  CHECK(empty.mean == 0.0);
}

TEST_CASE("percentiles interpolate linearly over the sorted sample") {
  std::vector<double> v{10.0, 20.0, 30.0, 40.0};
  CHECK(percentile_sorted(v, 0.0) == 10.0);
  CHECK(percentile_sorted(v, 1.0) == 40.0);
  CHECK(percentile_sorted(v, 0.5) == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(percentile_sorted(v, 0.25) == doctest::Approx(17.5).epsilon(1e-12));
  CHECK(percentile_sorted(std::vector<double>{7.0}, 0.9) == 7.0);
  CHECK_THROWS_AS(percentile_sorted(std::vector<double>{}, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(percentile_sorted(v, 1.5), std::invalid_argument);

  RngStream rng(3);
  std::vector<double> sample;
  for (int i = 0; i < 200; ++i) sample.push_back(rng.exponential(1.0));
  WaitStats s = summarize_values(sample);
  CHECK(s.q25 <= s.median);
  CHECK(s.median <= s.q75);
  CHECK(s.q75 <= s.p95);
  CHECK(s.p95 <= s.max);
}

TEST_CASE("warmup drops the earliest arrivals regardless of record order") {
  SimulationTrace trace =
      trace_with_waits({10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0});
  WaitStats full = summarize(trace, 0.0);
  CHECK(full.count == 10);
  CHECK(full.mean == doctest::Approx(55.0).epsilon(1e-12));

  WaitStats tail = summarize(trace, 0.3);
  CHECK(tail.count == 7);
  CHECK(tail.mean == doctest::Approx((40.0 + 100.0) / 2.0).epsilon(1e-12));

  CHECK_THROWS_AS(summarize(trace, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(summarize(trace, -0.1), std::invalid_argument);
}

TEST_CASE("policy comparison pools waits and scales by the reference") {
  SimulationTrace a1 = trace_with_waits({2.0, 4.0});
  SimulationTrace a2 = trace_with_waits({6.0, 8.0});
  SimulationTrace b1 = trace_with_waits({1.0, 3.0});
  SimulationTrace b2 = trace_with_waits({3.0, 3.0});

  std::vector<PolicyTraces> groups{{"slow", {&a1, &a2}}, {"fast", {&b1, &b2}}};
  Comparison cmp = compare(groups, "fast");
  REQUIRE(cmp.rows.size() == 2);
  CHECK(cmp.reference == "fast");
  CHECK(cmp.rows[0].policy == "slow");
  CHECK(cmp.rows[0].stats.mean == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(cmp.rows[1].stats.mean == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(cmp.rows[0].mean_ratio == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cmp.rows[1].mean_ratio == doctest::Approx(1.0).epsilon(1e-12));

  // swapping the reference inverts the ratio exactly
  Comparison inv = compare(groups, "slow");
  CHECK(cmp.rows[0].mean_ratio * inv.rows[1].mean_ratio ==
        doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("trace count mismatch is unpaired") {
    std::vector<PolicyTraces> bad{{"slow", {&a1, &a2}}, {"fast", {&b1}}};
    CHECK_THROWS_WITH_AS(compare(bad, "fast"),
                         doctest::Contains("unpaired comparison"),
                         std::invalid_argument);
  }
  SUBCASE("task count mismatch is unpaired") {
    SimulationTrace b3 = trace_with_waits({1.0, 2.0, 3.0});
    std::vector<PolicyTraces> bad{{"slow", {&a1}}, {"fast", {&b3}}};
    CHECK_THROWS_WITH_AS(compare(bad, "fast"),
                         doctest::Contains("unpaired comparison"),
                         std::invalid_argument);
  }
  SUBCASE("missing reference") {
    CHECK_THROWS_AS(compare(groups, "other"), std::invalid_argument);
  }
}

TEST_CASE("batch means drop the remainder from the front") {
  std::vector<double> ten{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(batch_means(ten, 5) == std::vector<double>{1.5, 3.5, 5.5, 7.5, 9.5});
  std::vector<double> eleven{0, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  CHECK(batch_means(eleven, 5) == std::vector<double>{2.5, 4.5, 6.5, 8.5, 10.5});
  CHECK(batch_means(ten, 10) == ten);
  CHECK_THROWS_AS(batch_means(std::vector<double>{1.0, 2.0}, 3),
                  InsufficientDataError);
  CHECK_THROWS_AS(batch_means(ten, 0), std::invalid_argument);
}

TEST_CASE("slope test separates trends from flat noise") {
  std::vector<double> rising, flat;
  for (int i = 0; i < 200; ++i) {
    rising.push_back(static_cast<double>(i) + (i % 2 == 0 ? 0.3 : -0.3));
    flat.push_back(5.0 + (i % 7 == 0 ? 0.2 : -0.1));
  }
  SlopeTest up = batch_slope_test(rising);
  CHECK(up.slope > 0.0);
  CHECK(up.significant);
  CHECK(up.t_critical == doctest::Approx(2.101).epsilon(1e-12));  // df 18

  SlopeTest level = batch_slope_test(flat);
  CHECK_FALSE(level.significant);
  CHECK(std::fabs(level.slope) < 0.01);

  // constant series has zero error and zero slope
  SlopeTest constant = batch_slope_test(std::vector<double>(100, 3.0));
  CHECK(constant.t_stat == 0.0);
  CHECK_FALSE(constant.significant);

  CHECK_THROWS_AS(batch_slope_test(rising, 2), std::invalid_argument);
}

TEST_CASE("spearman rank correlation") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> up{10.0, 100.0, 101.0, 500.0, 501.0};
  std::vector<double> down{9.0, 7.0, 5.0, 3.0, 1.0};
  CHECK(spearman(x, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman(x, down) == doctest::Approx(-1.0).epsilon(1e-12));

  std::vector<double> tx{1.0, 1.0, 2.0};
  std::vector<double> ty{5.0, 5.0, 9.0};
  CHECK(spearman(tx, ty) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(spearman(std::vector<double>{1.0, 1.0, 1.0}, x.begin() != x.end()
                     ? std::vector<double>{1.0, 2.0, 3.0}
                     : std::vector<double>{}) == 0.0);
  CHECK_THROWS_AS(spearman(x, tx), std::invalid_argument);
  CHECK_THROWS_AS(spearman(std::vector<double>{1.0}, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("ks distance accepts the true rate and rejects a wrong one") {
  // quantile grid at (i + 0.5)/n makes the exact distance 0.5/n
  const int n = 400;
  std::vector<double> grid;
  for (int i = 0; i < n; ++i) {
    double u = (static_cast<double>(i) + 0.5) / n;
    grid.push_back(-std::log(1.0 - u) / 2.0);
  }
  CHECK(ks_exponential(grid, 2.0) == doctest::Approx(0.5 / n).epsilon(1e-9));
  // against rate 1 the gap peaks at |e^{-2x} - e^{-x}| = 1/4
  CHECK(ks_exponential(grid, 1.0) > 0.2);

  RngStream rng(101);
  std::vector<double> sample;
  for (int i = 0; i < 2000; ++i) sample.push_back(rng.exponential(2.0));
  CHECK(ks_exponential(sample, 2.0) < 1.949 / std::sqrt(2000.0));
  CHECK(ks_exponential(sample, 1.0) > 0.15);
  CHECK_THROWS_AS(ks_exponential({}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ks_exponential({1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("summary csv layout is pinned") {
  CHECK(summary_csv_header() == "policy,rho,seed,mean,std,median,q25,q75,p95,max,count");
  WaitStats s;
  s.mean = 2.5;
  s.std_dev = 0.5;
  s.median = 2.0;
  s.q25 = 1.5;
  s.q75 = 3.0;
  s.p95 = 4.5;
  s.max = 5.0;
  s.count = 7;
  CHECK(summary_csv_row("batch", 0.9, 3, s) == "batch,0.9,3,2.5,0.5,2,1.5,3,4.5,5,7");
}
