#include "uavplan/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "uavplan/channel.hpp"
#include "uavplan/csv.hpp"
#include "uavplan/errors.hpp"
#include "uavplan/queueing.hpp"
#include "uavplan/rng.hpp"

namespace uavplan {
namespace {

template <class Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

RaSolution solve_ra(const RaInstance& inst, const PipelineOptions& options, double& gap) {
  gap = 0.0;
  switch (options.solver) {
    case RaSolver::reduced:
      return in_stage("ra-reduced", [&] { return solve_reduced(inst); });
    case RaSolver::kkt:
      return in_stage("ra-kkt", [&] { return solve_kkt(inst).solution; });
    case RaSolver::both: {
      RaSolution reduced = in_stage("ra-reduced", [&] { return solve_reduced(inst); });
      const RaSolution kkt = in_stage("ra-kkt", [&] { return solve_kkt(inst).solution; });
      if (reduced.objective > 0.0) gap = std::abs(kkt.objective - reduced.objective) / reduced.objective;
      return reduced;
    }
  }
  throw ParameterError("unknown solver");
}

/// Runs fn(i) for i in [0, n) on `threads` workers.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
}

}  // namespace

double average_ch_power(const RaInstance& inst, const RaSolution& sol) {
  double sum = 0.0;
  int served = 0;
  for (std::size_t g = 0; g < inst.ch_count(); ++g) {
    const double dwell = inst.dwell.col_sum(g);
    if (dwell <= 0.0) continue;
    double weighted = 0.0;
    for (std::size_t u = 0; u < inst.uav_count(); ++u) weighted += inst.dwell(u, g) * sol.power(u, g);
    sum += weighted / dwell;
    ++served;
  }
  return served ? sum / served : 0.0;
}

PipelineResult run_pipeline(const ClusterScenario& scenario, const PipelineOptions& options) {
  in_stage("scenario", [&] { scenario.validate(); });
  PipelineResult out;
  const auto rates = arrival_rates(scenario);
  const DwellOptions dwell_opts{options.mu, options.slack_target};

  out.plan = in_stage("schedule", [&] {
    const int u = min_uavs(rates, dwell_opts);
    return *find_dwell(rates, u, dwell_opts);
  });
  if (static_cast<std::size_t>(out.plan.uav_count) > scenario.fleet.count()) {
    throw StageError("fleet", "plan needs " + std::to_string(out.plan.uav_count) + " UAVs, fleet has " +
                                  std::to_string(scenario.fleet.count()));
  }
  out.instance = in_stage("ra-setup", [&] { return make_instance(scenario, out.plan.dwell); });
  out.solution = solve_ra(out.instance, options, out.summary.solver_gap);

  PipelineSummary& s = out.summary;
  s.u_min = out.plan.uav_count;
  s.objective_w = out.solution.objective;
  s.avg_power_w = average_ch_power(out.instance, out.solution);
  double rbs = 0.0;
  for (double z : out.solution.z) rbs += z;
  s.avg_rbs_per_uav = rbs / s.u_min;
  s.total_energy_j = out.solution.objective * scenario.slot_seconds * options.energy_slots;
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::num_clusters: return "num_clusters";
    case SweepVariable::p_tx: return "p_tx";
    case SweepVariable::total_rbs: return "total_rbs";
    case SweepVariable::packet_bits: return "packet_bits";
  }
  return "unknown";
}

SweepVariable parse_sweep_variable(const std::string& name) {
  for (auto v : {SweepVariable::num_clusters, SweepVariable::p_tx, SweepVariable::total_rbs, SweepVariable::packet_bits}) {
    if (to_string(v) == name) return v;
  }
  throw ParameterError("unknown sweep variable '" + name + "'");
}

std::vector<double> parse_sweep_values(const std::string& text) {
  auto number = [](std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ParameterError("bad sweep value '" + std::string(s) + "'");
    }
    return v;
  };
  std::vector<double> out;
  const std::string_view sv(text);
  if (sv.find(':') != std::string_view::npos) {
    const auto c1 = sv.find(':');
    const auto c2 = sv.find(':', c1 + 1);
    if (c2 == std::string_view::npos) throw ParameterError("range needs start:stop:step");
    const double start = number(sv.substr(0, c1));
    const double stop = number(sv.substr(c1 + 1, c2 - c1 - 1));
    const double step = number(sv.substr(c2 + 1));
    if (!(step > 0.0) || stop < start) throw ParameterError("range needs step > 0 and stop >= start");
    for (long k = 0;; ++k) {
      const double v = start + static_cast<double>(k) * step;
      if (v > stop + 1e-9 * step) break;
      out.push_back(v);
    }
  } else {
    std::size_t pos = 0;
    while (pos <= sv.size()) {
      const auto comma = sv.find(',', pos);
      out.push_back(number(sv.substr(pos, comma - pos)));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }
  if (out.empty()) throw ParameterError("no sweep values");
  return out;
}

std::uint64_t sweep_cell_seed(std::uint64_t base_seed, std::size_t value_index, int replication) {
  return mix_seed(base_seed, {static_cast<std::uint64_t>(value_index), static_cast<std::uint64_t>(replication)});
}

ClusterScenario sweep_cell_scenario(const SweepSpec& spec, double value, std::uint64_t seed) {
  RadioParams radio = spec.radio;
  int clusters = spec.num_clusters;
  switch (spec.variable) {
    case SweepVariable::num_clusters: clusters = static_cast<int>(std::lround(value)); break;
    case SweepVariable::p_tx: radio.p_tx = value; break;
    case SweepVariable::total_rbs: radio.total_rbs = static_cast<int>(std::lround(value)); break;
    case SweepVariable::packet_bits: radio.packet_bits = value; break;
  }
  return generate_scenario(seed, clusters, spec.member_min, spec.member_max, radio);
}

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.values.empty()) throw ParameterError("sweep needs at least one value");
  if (spec.replications < 1) throw ParameterError("replications must be >= 1");

  SweepResult result;
  result.variable = spec.variable;
  const std::size_t reps = static_cast<std::size_t>(spec.replications);
  result.rows.resize(spec.values.size() * reps);

  parallel_for(result.rows.size(), spec.threads, [&](std::size_t cell) {
    SweepRow& row = result.rows[cell];
    row.value_index = cell / reps;
    row.value = spec.values[row.value_index];
    row.replication = static_cast<int>(cell % reps);
    row.seed = sweep_cell_seed(spec.base_seed, row.value_index, row.replication);
    try {
      row.summary = run_pipeline(sweep_cell_scenario(spec, row.value, row.seed), spec.pipeline).summary;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });

  for (std::size_t v = 0; v < spec.values.size(); ++v) {
    SweepAggregate agg;
    agg.value = spec.values[v];
    for (std::size_t r = 0; r < reps; ++r) {
      const SweepRow& row = result.rows[v * reps + r];
      if (!row.error.empty()) continue;
      ++agg.ok;
      agg.u_min += row.summary.u_min;
      agg.avg_power_w += row.summary.avg_power_w;
      agg.avg_rbs_per_uav += row.summary.avg_rbs_per_uav;
      agg.total_energy_j += row.summary.total_energy_j;
    }
    if (agg.ok > 0) {
      agg.u_min /= agg.ok;
      agg.avg_power_w /= agg.ok;
      agg.avg_rbs_per_uav /= agg.ok;
      agg.total_energy_j /= agg.ok;
    }
    result.aggregates.push_back(agg);
  }
  return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  const std::string var = to_string(result.variable);
  os << "kind,variable,value,replication,seed,n_ok,u_min,avg_power_w,avg_rbs_per_uav,total_energy_j,error\n";
  for (const SweepRow& row : result.rows) {
    std::string error = row.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    os << "cell," << var << ',' << csv_float(row.value) << ',' << row.replication << ',' << row.seed << ',';
    if (row.error.empty()) {
      os << "1," << row.summary.u_min << ',' << csv_float(row.summary.avg_power_w) << ','
         << csv_float(row.summary.avg_rbs_per_uav) << ',' << csv_float(row.summary.total_energy_j) << ",\n";
    } else {
      os << "0,,,,," << error << '\n';
    }
  }
  for (const SweepAggregate& agg : result.aggregates) {
    os << "mean," << var << ',' << csv_float(agg.value) << ",,," << agg.ok << ',' << csv_float(agg.u_min) << ','
       << csv_float(agg.avg_power_w) << ',' << csv_float(agg.avg_rbs_per_uav) << ','
       << csv_float(agg.total_energy_j) << ",\n";
  }
}

// ---------------------------------------------------------------------------
// Terrestrial baseline

BaselineSpec calibrated_baseline() {
  BaselineSpec spec;
  spec.bs_height_m = 25.0;
  spec.pathloss_exp_terrestrial = 3.14;
  spec.placement = BsPlacement::grid;
  return spec;
}

std::vector<Point2> baseline_stations(const ClusterScenario& scenario, const BaselineSpec& spec, int uav_count) {
  std::vector<Point2> out;
  if (spec.placement == BsPlacement::at_ch) {
    for (const Cluster& c : scenario.clusters) out.push_back(c.position);
    return out;
  }
  const int n = spec.bs_count > 0 ? spec.bs_count : uav_count;
  if (n < 1) throw ParameterError("baseline needs at least one station");
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  const double w = scenario.area_side / cols;
  const double h = scenario.area_side / rows;
  for (int i = 0; i < n; ++i) out.push_back({(i % cols + 0.5) * w, (i / cols + 0.5) * h});
  return out;
}

BaselineResult run_baseline_comparison(const ClusterScenario& scenario, const BaselineSpec& baseline,
                                       const PipelineOptions& options) {
  if (!(baseline.bs_height_m > 0.0)) throw ParameterError("bs_height_m must be positive");
  if (!(baseline.pathloss_exp_terrestrial >= 2.0)) throw ParameterError("terrestrial exponent must be >= 2");

  const PipelineResult uav = run_pipeline(scenario, options);
  const auto stations = baseline_stations(scenario, baseline, uav.plan.uav_count);

  RaInstance ground = uav.instance;
  for (std::size_t g = 0; g < scenario.clusters.size(); ++g) {
    const Point2 ch = scenario.clusters[g].position;
    double nearest = std::numeric_limits<double>::infinity();
    for (const Point2& bs : stations) {
      const double dx = bs.x - ch.x, dy = bs.y - ch.y;
      nearest = std::min(nearest, std::sqrt(dx * dx + dy * dy + baseline.bs_height_m * baseline.bs_height_m));
    }
    const double gain = path_gain(nearest, scenario.wavelength(), baseline.pathloss_exp_terrestrial);
    for (std::size_t u = 0; u < ground.uav_count(); ++u) ground.gains(u, g) = gain;
  }
  double gap = 0.0;
  const RaSolution ground_sol = in_stage("baseline", [&] { return solve_ra(ground, options, gap); });

  BaselineResult r;
  r.u_min = uav.plan.uav_count;
  r.uav_avg_power_w = uav.summary.avg_power_w;
  r.terrestrial_avg_power_w = average_ch_power(ground, ground_sol);
  r.reduction = r.terrestrial_avg_power_w > 0.0 ? 1.0 - r.uav_avg_power_w / r.terrestrial_avg_power_w : 0.0;
  return r;
}

void write_baseline_csv(std::ostream& os, const std::vector<BaselineResult>& results,
                        const std::vector<std::uint64_t>& seeds) {
  os << "replication,seed,u_min,uav_avg_power_w,terrestrial_avg_power_w,reduction\n";
  double uav = 0.0, ground = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const BaselineResult& r = results[i];
    os << i << ',' << (i < seeds.size() ? seeds[i] : 0) << ',' << r.u_min << ',' << csv_float(r.uav_avg_power_w)
       << ',' << csv_float(r.terrestrial_avg_power_w) << ',' << csv_float(r.reduction) << '\n';
    uav += r.uav_avg_power_w;
    ground += r.terrestrial_avg_power_w;
  }
  if (results.size() > 1) {
    os << "mean,," << ',' << csv_float(uav / results.size()) << ',' << csv_float(ground / results.size()) << ','
       << csv_float(ground > 0.0 ? 1.0 - uav / ground : 0.0) << '\n';
  }
}

}  // namespace uavplan
