#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "uavplan/errors.hpp"
#include "uavplan/queueing.hpp"
#include "uavplan/scheduler.hpp"

using namespace uavplan;

namespace {

ClusterScenario two_clusters(int m0, int m1, double p) {
  ClusterScenario s;
  s.p_tx = p;
  s.clusters = {{0, {10.0, 10.0}, m0}, {1, {200.0, 300.0}, m1}};
  s.fleet.ids = {0, 1, 2};
  s.fleet.altitudes = {400.0, 500.0, 600.0};
  return s;
}

// log-space binomial pmf, independent of the implementation's evaluation
double lgamma_pmf(int m, double p, int n) {
  if (p == 0.0) return n == 0 ? 1.0 : 0.0;
  if (p == 1.0) return n == m ? 1.0 : 0.0;
  return std::exp(std::lgamma(m + 1.0) - std::lgamma(n + 1.0) - std::lgamma(m - n + 1.0) + n * std::log(p) +
                  (m - n) * std::log1p(-p));
}

}  // namespace

TEST_CASE("arrival_pmf examples") {
  CHECK(arrival_pmf(2, 0.5, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(arrival_pmf(10, 0.1, 0) == doctest::Approx(0.3486784401).epsilon(1e-12));
  CHECK(arrival_pmf(3, 0.0, 0) == 1.0);
  CHECK(arrival_pmf(3, 0.0, 2) == 0.0);
  CHECK(arrival_pmf(3, 1.0, 3) == 1.0);
  CHECK(arrival_pmf(0, 0.3, 0) == 1.0);
}

TEST_CASE("arrival_pmf matches a log-gamma oracle and normalizes") {
  for (int m = 0; m <= 64; ++m) {
    for (double p : {0.01, 0.1, 0.37, 0.5, 0.99}) {
      double sum = 0.0;
      for (int n = 0; n <= m; ++n) {
        const double v = arrival_pmf(m, p, n);
        CHECK(v == doctest::Approx(lgamma_pmf(m, p, n)).epsilon(1e-9));
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("arrival_pmf rejects bad arguments") {
  CHECK_THROWS_AS(arrival_pmf(3, 0.5, 4), ParameterError);
  CHECK_THROWS_AS(arrival_pmf(3, 0.5, -1), ParameterError);
  CHECK_THROWS_AS(arrival_pmf(-1, 0.5, 0), ParameterError);
  CHECK_THROWS_AS(arrival_pmf(3, 1.2, 0), ParameterError);
}

TEST_CASE("mean_arrival examples and summation oracle") {
  CHECK(mean_arrival(10, 0.1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mean_arrival(5, 0.0) == 0.0);
  for (int m = 0; m <= 64; m += 3) {
    for (double p : {0.01, 0.1, 0.5, 0.99}) {
      double mean = 0.0;
      for (int n = 0; n <= m; ++n) mean += n * arrival_pmf(m, p, n);
      CHECK(std::abs(mean_arrival(m, p) - mean) <= 1e-10);
    }
  }
}

TEST_CASE("arrival_rates follows scenario order") {
  const auto s = two_clusters(4, 9, 0.25);
  const auto rates = arrival_rates(s);
  REQUIRE(rates.size() == 2);
  CHECK(rates[0] == 1.0);
  CHECK(rates[1] == 2.25);
}

TEST_CASE("step_queue examples") {
  CHECK(step_queue(5, 7, 2) == 2.0);
  CHECK(step_queue(5, 3, 0) == 2.0);
  CHECK(step_queue(0, 0, 4) == 4.0);
  CHECK_THROWS_AS(step_queue(-1, 0, 0), ParameterError);
  CHECK_THROWS_AS(step_queue(0, -1, 0), ParameterError);
  CHECK_THROWS_AS(step_queue(0, 0, -1), ParameterError);
}

TEST_CASE("zero plan accumulates every arrival") {
  const auto s = two_clusters(6, 3, 0.4);
  SimulationOptions opt;
  opt.horizon = 100;
  opt.seed = 5;
  const auto trace = simulate(s, DwellMatrix(1, 2), opt);
  REQUIRE(trace.backlog.size() == 2);
  for (const auto& q : trace.backlog) {
    REQUIRE(q.size() == 101);
    CHECK(q[0] == 0.0);
    for (std::size_t t = 1; t < q.size(); ++t) {
      const double a = q[t] - q[t - 1];
      CHECK(a >= 0.0);
      CHECK(a == std::floor(a));
    }
  }
  CHECK(trace.backlog[0][100] <= 600.0);
  CHECK(trace.backlog[1][100] <= 300.0);
  CHECK(trace.backlog[0][100] > 0.0);
}

TEST_CASE("p = 0 gives an all-zero trace") {
  const auto s = two_clusters(6, 3, 0.0);
  SimulationOptions opt;
  opt.horizon = 5000;
  const auto trace = simulate(s, DwellMatrix(2, 2), opt);
  for (const auto& q : trace.backlog) {
    for (double v : q) CHECK(v == 0.0);
  }
  CHECK(is_rate_stable(trace, 1e-12));
}

TEST_CASE("simulate is deterministic and seed dependent") {
  const auto s = two_clusters(6, 3, 0.3);
  DwellMatrix plan(1, 2);
  plan(0, 0) = 0.5;
  plan(0, 1) = 0.3;
  SimulationOptions opt;
  opt.horizon = 10000;
  opt.seed = 17;
  const auto a = simulate(s, plan, opt);
  const auto b = simulate(s, plan, opt);
  CHECK(a.backlog == b.backlog);
  opt.seed = 18;
  CHECK(simulate(s, plan, opt).backlog != a.backlog);
}

TEST_CASE("backlog stays nonnegative in both service modes") {
  const auto s = two_clusters(8, 2, 0.5);
  DwellMatrix plan(2, 2);
  plan(0, 0) = 1.0;
  plan(1, 0) = 0.2;
  plan(1, 1) = 0.8;
  for (ServiceMode mode : {ServiceMode::fluid, ServiceMode::integer}) {
    SimulationOptions opt;
    opt.horizon = 20000;
    opt.seed = 3;
    opt.mode = mode;
    const auto trace = simulate(s, plan, opt);
    for (const auto& q : trace.backlog) {
      for (double v : q) REQUIRE(v >= 0.0);
    }
    if (mode == ServiceMode::integer) {
      for (const auto& q : trace.backlog) {
        for (double v : q) REQUIRE(v == std::floor(v));
      }
    }
  }
}

TEST_CASE("empirical mean arrival within 3 standard errors") {
  for (double p : {0.1, 0.5, 0.9}) {
    const auto s = two_clusters(7, 1, p);
    SimulationOptions opt;
    opt.horizon = 100000;
    opt.seed = 99;
    const auto trace = simulate(s, DwellMatrix(1, 2), opt);
    for (std::size_t g = 0; g < 2; ++g) {
      const int m = s.clusters[g].members;
      const double mean = trace.backlog[g].back() / static_cast<double>(opt.horizon);
      const double se = std::sqrt(m * p * (1 - p) / static_cast<double>(opt.horizon));
      CHECK(std::abs(mean - m * p) <= 3.0 * se);
    }
  }
}

TEST_CASE("stable plan keeps Q_T / T small") {
  const auto s = two_clusters(6, 3, 0.1);
  DwellOptions dopt;
  dopt.slack_target = 0.02;
  const auto rates = arrival_rates(s);
  const auto plan = find_dwell(rates, min_uavs(rates, dopt), dopt);
  REQUIRE(plan);
  SimulationOptions opt;
  opt.seed = 7;
  CHECK(is_rate_stable(simulate(s, plan->dwell, opt), 0.01));
}

TEST_CASE("under-served CH grows linearly") {
  const auto s = two_clusters(6, 3, 0.5);
  DwellMatrix plan(3, 2);
  plan(0, 0) = 1.0;
  plan(1, 0) = 1.0;
  plan(2, 0) = 0.9;  // 2.9 < 3.0 arrivals per slot
  plan(2, 1) = 0.1;
  SimulationOptions opt;
  opt.seed = 7;
  const auto trace = simulate(s, plan, opt);
  CHECK(trace.backlog[0].back() / static_cast<double>(opt.horizon) > 0.05);
  CHECK_FALSE(is_rate_stable(trace, 0.01));
}

TEST_CASE("is_rate_stable on synthetic traces") {
  QueueTrace zero;
  zero.horizon = 1000;
  zero.backlog.assign(2, std::vector<double>(1001, 0.0));
  CHECK(is_rate_stable(zero, 0.01));

  QueueTrace linear = zero;
  for (std::size_t t = 0; t <= 1000; ++t) linear.backlog[1][t] = static_cast<double>(t);
  CHECK(linear.max_final_ratio() == 1.0);
  CHECK_FALSE(is_rate_stable(linear, 0.5));
  CHECK_FALSE(is_rate_stable(linear, 0.999));

  QueueTrace short_trace = zero;
  short_trace.horizon = 999;
  CHECK_THROWS_AS(is_rate_stable(short_trace, 0.01), ParameterError);
}

TEST_CASE("simulate rejects mismatched inputs") {
  const auto s = two_clusters(6, 3, 0.1);
  SimulationOptions opt;
  CHECK_THROWS_AS(simulate(s, DwellMatrix(1, 3), opt), ParameterError);
  CHECK_THROWS_AS(simulate(s, DwellMatrix(4, 2), opt), ParameterError);
  opt.horizon = 0;
  CHECK_THROWS_AS(simulate(s, DwellMatrix(1, 2), opt), ParameterError);
}

TEST_CASE("trace CSV") {
  const auto s = two_clusters(1, 1, 0.0);
  SimulationOptions opt;
  opt.horizon = 4;
  const auto trace = simulate(s, DwellMatrix(1, 2), opt);
  std::ostringstream os;
  write_trace_csv(os, trace, 2);
  CHECK(os.str() == "slot,ch_id,backlog\n0,0,0\n0,1,0\n2,0,0\n2,1,0\n4,0,0\n4,1,0\n");
  CHECK_THROWS_AS(write_trace_csv(os, trace, 0), ParameterError);
}
