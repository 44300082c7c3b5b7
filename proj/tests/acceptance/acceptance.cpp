#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "uavplan/channel.hpp"
#include "uavplan/errors.hpp"
#include "uavplan/harness.hpp"
#include "uavplan/queueing.hpp"
#include "uavplan/ra_opt.hpp"
#include "uavplan/rng.hpp"
#include "uavplan/scheduler.hpp"

using namespace uavplan;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

// Smallest z at which every link of UAV u meets pmax, by bisection on the
// decreasing link power; infinity if even Z RBs do not suffice.
double pmax_rbs(const RaInstance& inst, std::size_t u) {
  auto ok = [&](double z) {
    for (std::size_t g = 0; g < inst.ch_count(); ++g) {
      if (inst.is_link(u, g) && inst.link_power(u, g, z) > inst.pmax_w) return false;
    }
    return true;
  };
  double lo = inst.z_min, hi = inst.total_rbs;
  if (!ok(hi)) return std::numeric_limits<double>::infinity();
  if (ok(lo)) return lo;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Whether some RB split meets pmax; with `integer`, a split into whole RBs.
bool pmax_feasible(const RaInstance& inst, bool integer) {
  double need = 0.0;
  for (std::size_t u : inst.active_uavs()) {
    const double z = pmax_rbs(inst, u);
    need += integer ? std::max(1.0, std::ceil(z - 1e-12)) : z;
  }
  return need <= inst.total_rbs;
}

// Random pmax-feasible RA instance: a greedy dwell plan for random rates on u
// UAVs with per-UAV altitude gains.
RaInstance random_instance(std::mt19937_64& rng, int max_u, int max_g, int max_z, bool integer) {
  std::uniform_int_distribution<int> ud(1, max_u), gd(1, max_g);
  std::uniform_real_distribution<double> rate(0.05, 1.0), alt(400.0, 600.0);
  for (;;) {
    const int u = ud(rng), g = gd(rng);
    const int z = std::uniform_int_distribution<int>(integer ? std::max(u, 2) : 2, max_z)(rng);
    std::vector<double> rates(static_cast<std::size_t>(g));
    for (double& r : rates) r = rate(rng);
    const double total = std::accumulate(rates.begin(), rates.end(), 0.0);
    if (total > u) {
      for (double& r : rates) r *= 0.999 * u / total;
    }
    const auto plan = find_dwell(rates, u);
    if (!plan) continue;
    RaInstance inst;
    inst.dwell = plan->dwell;
    inst.gains = UavChMatrix(static_cast<std::size_t>(u), static_cast<std::size_t>(g));
    for (int i = 0; i < u; ++i) {
      const double h = path_gain(alt(rng), kSpeedOfLight / 2e9, 2.5);
      for (int j = 0; j < g; ++j) inst.gains(i, j) = h;
    }
    inst.total_rbs = z;
    inst.beta = snr_gap(1e-7);
    if (pmax_feasible(inst, integer)) return inst;
  }
}

// Accepted-norm histories of every LMA solve, checked in criterion 8.
std::vector<std::vector<double>> g_lma_histories;

// Binomial pmf through log-gamma, independent of the library's evaluation.
double binomial_oracle(int m, double p, int n) {
  const double log_choose = std::lgamma(m + 1.0) - std::lgamma(n + 1.0) - std::lgamma(m - n + 1.0);
  return std::exp(log_choose + n * std::log(p) + (m - n) * std::log1p(-p));
}

Outcome arrival_statistics() {
  Outcome out;
  double worst_sum = 0.0, worst_mean = 0.0, worst_oracle = 0.0;
  for (double p : {0.01, 0.1, 0.5, 0.99}) {
    for (int m = 1; m <= 64; ++m) {
      double sum = 0.0, mean = 0.0;
      for (int n = 0; n <= m; ++n) {
        const double f = arrival_pmf(m, p, n);
        sum += f;
        mean += n * f;
        worst_oracle = std::max(worst_oracle, std::abs(f - binomial_oracle(m, p, n)));
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      worst_mean = std::max(worst_mean, std::abs(mean - p * m));
      worst_mean = std::max(worst_mean, std::abs(mean_arrival(m, p) - p * m));
    }
  }
  out.pass = worst_sum <= 1e-12 && worst_mean <= 1e-10 && worst_oracle <= 1e-12;
  out.detail = fmt("max |sum-1| = %.2e, max |mean-p|G|| = %.2e, max |pmf-oracle| = %.2e", worst_sum, worst_mean,
                   worst_oracle);
  return out;
}

Outcome rate_stability() {
  constexpr int kScenarios = 100;
  int stable = 0, unstable = 0;
  for (int s = 0; s < kScenarios; ++s) {
    const std::uint64_t seed = mix_seed(2, {static_cast<std::uint64_t>(s)});
    const int clusters = 1 + static_cast<int>(seed % 20);
    const auto scenario = generate_scenario(seed, clusters, 1, 10);
    const auto rates = arrival_rates(scenario);
    const DwellOptions opts{1.0, 0.02};
    const auto plan = find_dwell(rates, min_uavs(rates, opts), opts);
    SimulationOptions sim;
    sim.horizon = 100000;
    sim.seed = seed;
    if (is_rate_stable(simulate(scenario, plan->dwell, sim), 0.01)) ++stable;

    // Under-serve the busiest CH by 0.1 packets/slot.
    const auto g = static_cast<std::size_t>(std::max_element(rates.begin(), rates.end()) - rates.begin());
    DwellMatrix starved = plan->dwell;
    const double capacity = starved.col_sum(g);
    const double scale = std::max(0.0, rates[g] - 0.1) / capacity;
    for (std::size_t u = 0; u < starved.uav_count(); ++u) starved(u, g) *= scale;
    if (!is_rate_stable(simulate(scenario, starved, sim), 0.01)) ++unstable;
  }
  Outcome out;
  out.pass = stable >= 95 && unstable >= 95;
  out.detail = fmt("stable %d/%d, under-served unstable %d/%d", stable, kScenarios, unstable, kScenarios);
  return out;
}

Outcome scheduler_minimality() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> gd(1, 40), md(1, 10);
  const std::vector<double> probs{0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
  int minimal_fail = 0, p_fail = 0, g_fail = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<int> members(static_cast<std::size_t>(gd(rng)));
    for (int& m : members) m = md(rng);
    std::uniform_real_distribution<double> pd(0.01, 1.0);
    const double p = pd(rng);
    auto rates_for = [&](double prob, std::size_t count) {
      std::vector<double> r;
      for (std::size_t i = 0; i < count; ++i) r.push_back(prob * members[i]);
      return r;
    };
    const auto rates = rates_for(p, members.size());
    const int u = min_uavs(rates);
    const bool total_positive = std::accumulate(rates.begin(), rates.end(), 0.0) > 0.0;
    if (!find_dwell(rates, u) || (total_positive && u > 1 && find_dwell(rates, u - 1))) ++minimal_fail;

    int previous = 0;
    for (double q : probs) {
      const int v = min_uavs(rates_for(q, members.size()));
      if (v < previous) ++p_fail;
      previous = v;
    }
    previous = 0;
    for (std::size_t n = 1; n <= members.size(); ++n) {
      const int v = min_uavs(rates_for(p, n));
      if (v < previous) ++g_fail;
      previous = v;
    }
  }
  Outcome out;
  out.pass = minimal_fail == 0 && p_fail == 0 && g_fail == 0;
  out.detail = fmt("minimality violations %d, p-monotonicity violations %d, cluster-monotonicity violations %d",
                   minimal_fail, p_fail, g_fail);
  return out;
}

Outcome solver_cross_validation() {
  std::mt19937_64 rng(4);
  double worst_gap = 0.0, worst_residual = 0.0;
  int infeasible = 0, errors = 0;
  for (int t = 0; t < 200; ++t) {
    const auto inst = random_instance(rng, 3, 6, 24, false);
    try {
      const auto reduced = solve_reduced(inst);
      const auto kkt = solve_kkt(inst);
      g_lma_histories.push_back(kkt.lma.accepted_sq_norms);
      worst_gap = std::max(worst_gap, std::abs(kkt.solution.objective - reduced.objective) / reduced.objective);
      worst_residual = std::max(worst_residual, norm(kkt_residuals(kkt.point, inst)));
      if (!is_feasible(inst, kkt.solution, 1e-9) || !is_feasible(inst, reduced, 1e-9)) {
        std::fprintf(stderr, "  instance %d: infeasible (kkt %d, reduced %d)\n", t, is_feasible(inst, kkt.solution, 1e-9),
                     is_feasible(inst, reduced, 1e-9));
        ++infeasible;
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "  instance %d: %s\n", t, e.what());
      ++errors;
    }
  }
  Outcome out;
  out.pass = errors == 0 && infeasible == 0 && worst_gap <= 1e-6 && worst_residual < 1e-8;
  out.detail = fmt("200 instances, max relative gap %.2e, max KKT residual %.2e, infeasible %d, errors %d", worst_gap,
                   worst_residual, infeasible, errors);
  return out;
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(5);
  int below_fail = 0, errors = 0;
  double worst_rounding = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto inst = random_instance(rng, 3, 6, 12, true);
    try {
      const auto continuous = solve_reduced(inst);
      const auto brute = brute_force(inst);
      const auto rounded = round_rbs(continuous, inst);
      if (continuous.objective > brute.objective * (1.0 + 1e-12)) ++below_fail;
      worst_rounding = std::max(worst_rounding, rounded.objective / brute.objective - 1.0);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "  instance %d: %s\n", t, e.what());
      ++errors;
    }
  }
  Outcome out;
  out.pass = errors == 0 && below_fail == 0 && worst_rounding <= 0.05;
  out.detail = fmt("1000 instances, continuous above brute force %d, worst rounding excess %.3f%%, errors %d",
                   below_fail, 100.0 * worst_rounding, errors);
  return out;
}

Outcome channel_closed_form() {
  const double beta = snr_gap(1e-7);
  const double gain = path_gain(500.0, 0.15, 2.5);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> bits(10.0, 2000.0), z(0.05, 64.0), dwell(1e-3, 1.0), lg(-14.0, -8.0);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    LinkParams link;
    link.packet_bits = bits(rng);
    link.rb_bandwidth_hz = 15e3;
    link.beta = beta;
    link.gain = std::pow(10.0, lg(rng));
    link.noise_psd = 1e-20;
    link.slot_seconds = 1.0;
    const double zz = z(rng), dd = dwell(rng);
    const double p = required_power(link, zz, dd);
    worst = std::max(worst, std::abs(achievable_bits(link, p, zz, dd) / link.packet_bits - 1.0));
  }
  Outcome out;
  out.pass = std::abs(beta - 0.103386) <= 1e-6 && std::abs(gain / 2.7845e-12 - 1.0) <= 1e-3 && worst <= 1e-9;
  out.detail = fmt("snr_gap = %.9f, path_gain = %.6e, max inverse error %.2e", beta, gain, worst);
  return out;
}

std::vector<SweepAggregate> sweep(SweepVariable variable, std::vector<double> values, int reps, std::uint64_t seed) {
  SweepSpec spec;
  spec.variable = variable;
  spec.values = std::move(values);
  spec.replications = reps;
  spec.base_seed = seed;
  const auto result = run_sweep(spec);
  for (const auto& row : result.rows) {
    if (!row.error.empty()) throw SolverError("sweep cell failed: " + row.error, 0.0);
  }
  return result.aggregates;
}

Outcome figure_trends() {
  Outcome out;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) out.pass = false;
    out.detail += (out.detail.empty() ? "" : "; ") + what + (ok ? "" : " [FAILED]");
  };

  // Cluster-count trends. The power increase with clusters is second order, so
  // many replications are needed to resolve it.
  const auto by_clusters = sweep(SweepVariable::num_clusters, {5, 10, 15, 20}, 20000, 2024);
  bool power_up = true, rbs_down = true, energy_up = true;
  std::string powers;
  for (std::size_t i = 0; i < by_clusters.size(); ++i) {
    powers += fmt("%s%.4g", i ? "/" : "", by_clusters[i].avg_power_w * 1e6);
    if (i == 0) continue;
    power_up = power_up && by_clusters[i].avg_power_w >= by_clusters[i - 1].avg_power_w;
    rbs_down = rbs_down && by_clusters[i].avg_rbs_per_uav < by_clusters[i - 1].avg_rbs_per_uav;
    energy_up = energy_up && by_clusters[i].total_energy_j >= by_clusters[i - 1].total_energy_j;
  }
  check(power_up, "power vs clusters " + powers + " uW");
  check(rbs_down, fmt("RBs/UAV vs clusters %.3f..%.3f", by_clusters.front().avg_rbs_per_uav,
                      by_clusters.back().avg_rbs_per_uav));
  check(energy_up, "energy nondecreasing in clusters");

  // Z = 24 against Z = 6 on the same scenarios.
  double p6 = 0.0, p24 = 0.0;
  constexpr int kPaired = 200;
  for (int r = 0; r < kPaired; ++r) {
    RadioParams radio;
    const std::uint64_t seed = mix_seed(24, {static_cast<std::uint64_t>(r)});
    radio.total_rbs = 6;
    p6 += run_pipeline(generate_scenario(seed, 20, 1, 10, radio)).summary.avg_power_w;
    radio.total_rbs = 24;
    p24 += run_pipeline(generate_scenario(seed, 20, 1, 10, radio)).summary.avg_power_w;
  }
  check(p24 < p6, fmt("power Z=24 %.4g uW < Z=6 %.4g uW", p24 / kPaired * 1e6, p6 / kPaired * 1e6));

  const auto by_bits = sweep(SweepVariable::packet_bits, {50, 100, 200, 400}, 200, 7);
  bool bits_up = true;
  for (std::size_t i = 1; i < by_bits.size(); ++i) {
    bits_up = bits_up && by_bits[i].total_energy_j >= by_bits[i - 1].total_energy_j;
  }
  check(bits_up, "energy nondecreasing in packet_bits");

  int uav_below = 0;
  constexpr int kBaseline = 200;
  for (int r = 0; r < kBaseline; ++r) {
    const auto scenario = generate_scenario(mix_seed(8, {static_cast<std::uint64_t>(r)}), 20, 1, 10);
    const auto res = run_baseline_comparison(scenario, BaselineSpec{});
    if (res.uav_avg_power_w < res.terrestrial_avg_power_w) ++uav_below;
  }
  check(uav_below == kBaseline, fmt("UAV below default terrestrial %d/%d", uav_below, kBaseline));

  double uav = 0.0, ground = 0.0;
  for (int r = 0; r < 300; ++r) {
    const auto scenario = generate_scenario(mix_seed(42, {static_cast<std::uint64_t>(r)}), 20, 1, 10);
    const auto res = run_baseline_comparison(scenario, calibrated_baseline());
    uav += res.uav_avg_power_w;
    ground += res.terrestrial_avg_power_w;
  }
  const double reduction = 1.0 - uav / ground;
  check(reduction >= 0.63 && reduction <= 0.73, fmt("calibrated reduction %.3f", reduction));
  return out;
}

Outcome numerical_hygiene() {
  Outcome out;
  double worst_d1 = 0.0;
  for (double c : {0.001, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    for (double z = 0.5; z <= 64.0; z *= 1.25) {
      const double h = 1e-5 * z;
      const double fd = (rate_cost(c, z + h) - rate_cost(c, z - h)) / (2.0 * h);
      worst_d1 = std::max(worst_d1, std::abs(rate_cost_dz(c, z) / fd - 1.0));
    }
  }

  // Pipeline instances add LMA runs on generated scenarios.
  for (int r = 0; r < 30; ++r) {
    const auto scenario = generate_scenario(mix_seed(9, {static_cast<std::uint64_t>(r)}), 5 + r, 1, 10);
    const auto inst = run_pipeline(scenario).instance;
    g_lma_histories.push_back(solve_kkt(inst).lma.accepted_sq_norms);
  }
  int non_monotone = 0;
  for (const auto& h : g_lma_histories) {
    if (!strictly_decreasing(h)) ++non_monotone;
  }

  SweepSpec spec;
  spec.variable = SweepVariable::p_tx;
  spec.values = {0.1, 0.3, 0.5};
  spec.replications = 10;
  spec.base_seed = 11;
  auto csv = [&] {
    std::ostringstream os;
    write_sweep_csv(os, run_sweep(spec));
    return os.str();
  };
  const bool identical = csv() == csv();

  out.pass = worst_d1 <= 1e-6 && non_monotone == 0 && identical && !g_lma_histories.empty();
  out.detail = fmt("derivative max rel error %.2e, non-monotone LMA runs %d/%zu, sweep CSV %s", worst_d1,
                   non_monotone, g_lma_histories.size(), identical ? "identical" : "differs");
  return out;
}

}  // namespace

// Optional arguments select criteria by number; default runs all.
int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"arrival statistics", arrival_statistics},
      {"rate stability", rate_stability},
      {"scheduler minimality", scheduler_minimality},
      {"solver cross-validation", solver_cross_validation},
      {"oracle equivalence", oracle_equivalence},
      {"channel closed form", channel_closed_form},
      {"figure trends", figure_trends},
      {"numerical hygiene", numerical_hygiene},
  };
  int failed = 0;
  std::vector<bool> selected(criteria.size(), argc <= 1);
  for (int a = 1; a < argc; ++a) {
    const int n = std::atoi(argv[a]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[a]);
      return 2;
    }
    selected[static_cast<std::size_t>(n - 1)] = true;
  }
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("criterion %zu (%s): %s (%.1f s) %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
