#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "uavplan/errors.hpp"
#include "uavplan/harness.hpp"
#include "uavplan/queueing.hpp"
#include "uavplan/ra_opt.hpp"
#include "uavplan/rng.hpp"
#include "uavplan/scenario_io.hpp"
#include "uavplan/scheduler.hpp"

using namespace uavplan;

namespace {

/// Opens --out, or stdout when it is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ParameterError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct Common {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  double mu = 1.0;
  double slack = 0.0;
  std::optional<int> rbs;
  std::string solver = "reduced";
};

const std::map<std::string, RaSolver> kSolvers{
    {"reduced", RaSolver::reduced}, {"kkt", RaSolver::kkt}, {"both", RaSolver::both}};

ClusterScenario load(const Common& c) {
  ClusterScenario s = read_scenario_file(c.scenario);
  if (c.rbs) s.total_rbs = *c.rbs;
  return s;
}

PipelineOptions pipeline_options(const Common& c) {
  PipelineOptions opt;
  opt.mu = c.mu;
  opt.slack_target = c.slack;
  opt.solver = kSolvers.at(c.solver);
  return opt;
}

std::vector<int> first_ids(const ClusterScenario& s, int count) {
  return {s.fleet.ids.begin(), s.fleet.ids.begin() + std::min<std::size_t>(count, s.fleet.ids.size())};
}

std::vector<int> ch_ids(const ClusterScenario& s) {
  std::vector<int> ids;
  for (const Cluster& c : s.clusters) ids.push_back(c.id);
  return ids;
}

StabilityPlan make_plan(const ClusterScenario& s, const Common& c) {
  const auto rates = arrival_rates(s);
  const DwellOptions opt{c.mu, c.slack};
  return *find_dwell(rates, min_uavs(rates, opt), opt);
}

void add_scenario_flags(CLI::App* app, Common& c) {
  app->add_option("--scenario", c.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "Output path (default stdout)");
}

void add_plan_flags(CLI::App* app, Common& c) {
  app->add_option("--mu", c.mu, "Packets served per full slot of dwelling")->check(CLI::PositiveNumber);
  app->add_option("--slack", c.slack, "Extra capacity per CH in packets/slot")->check(CLI::NonNegativeNumber);
}

void add_solver_flag(CLI::App* app, Common& c) {
  app->add_option("--solver", c.solver, "RA solver")->check(CLI::IsMember({"kkt", "reduced", "both"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV dwell planning and uplink resource allocation for clustered M2M networks"};
  app.require_subcommand(1);
  Common c;

  // gen
  int clusters = 20, member_min = 1, member_max = 10;
  RadioParams radio;
  auto* gen = app.add_subcommand("gen", "Generate a random scenario file");
  gen->add_option("--clusters", clusters, "Number of clusters")->check(CLI::PositiveNumber);
  gen->add_option("--members-min", member_min, "Smallest cluster size")->check(CLI::NonNegativeNumber);
  gen->add_option("--members-max", member_max, "Largest cluster size")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", c.seed, "Random seed");
  gen->add_option("--p", radio.p_tx, "Transmission probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--rbs", radio.total_rbs, "Total resource blocks")->check(CLI::PositiveNumber);
  gen->add_option("--packet-bits", radio.packet_bits, "Bits per packet")->check(CLI::PositiveNumber);
  gen->add_option("--fleet", radio.fleet_size, "Fleet size (0 = total member count)")->check(CLI::NonNegativeNumber);
  gen->add_option("--out", c.out, "Output path (default stdout)");

  // plan
  auto* plan = app.add_subcommand("plan", "Minimum UAV count and dwell plan as CSV");
  add_scenario_flags(plan, c);
  add_plan_flags(plan, c);

  // simulate
  std::int64_t horizon = 100000, stride = 1;
  double epsilon = 0.01;
  std::string mode = "fluid";
  auto* sim = app.add_subcommand("simulate", "Queue backlog trace under the dwell plan as CSV");
  add_scenario_flags(sim, c);
  add_plan_flags(sim, c);
  sim->add_option("--seed", c.seed, "Random seed");
  sim->add_option("--horizon", horizon, "Slots to simulate")->check(CLI::PositiveNumber);
  sim->add_option("--stride", stride, "Write every n-th slot")->check(CLI::PositiveNumber);
  sim->add_option("--epsilon", epsilon, "Rate-stability threshold on max Q_T/T")->check(CLI::PositiveNumber);
  sim->add_option("--mode", mode, "Service mode")->check(CLI::IsMember({"fluid", "integer"}));

  // solve-ra
  bool integer = false;
  auto* solve = app.add_subcommand("solve-ra", "RB and power allocation for the dwell plan as CSV");
  add_scenario_flags(solve, c);
  add_plan_flags(solve, c);
  add_solver_flag(solve, c);
  solve->add_option("--rbs", c.rbs, "Override total resource blocks")->check(CLI::PositiveNumber);
  solve->add_flag("--integer", integer, "Round the RB split to integers");

  // sweep
  std::string variable = "num_clusters", values;
  int replications = 1;
  unsigned threads = 0;
  double p_tx = 0.1;
  int rbs = 6;
  auto* sw = app.add_subcommand("sweep", "Parameter sweep over generated scenarios as CSV");
  sw->add_option("--variable", variable, "Swept variable")
      ->check(CLI::IsMember({"num_clusters", "p_tx", "total_rbs", "packet_bits"}));
  sw->add_option("--values", values, "a,b,c or start:stop:step")->required();
  sw->add_option("--replications", replications, "Replications per value")->check(CLI::PositiveNumber);
  sw->add_option("--seed", c.seed, "Base seed");
  sw->add_option("--clusters", clusters, "Clusters when not swept")->check(CLI::PositiveNumber);
  sw->add_option("--p", p_tx, "Transmission probability when not swept")->check(CLI::Range(0.0, 1.0));
  sw->add_option("--rbs", rbs, "Total RBs when not swept")->check(CLI::PositiveNumber);
  sw->add_option("--threads", threads, "Worker threads (0 = all cores)");
  sw->add_option("--out", c.out, "Output path (default stdout)");
  add_plan_flags(sw, c);
  add_solver_flag(sw, c);

  // baseline
  BaselineSpec baseline;
  bool calibrated = false;
  std::string placement = "grid";
  auto* base = app.add_subcommand("baseline", "UAV vs fixed terrestrial stations as CSV");
  base->add_option("--scenario", c.scenario, "Scenario file (default: generate from --seed)")
      ->check(CLI::ExistingFile);
  base->add_option("--seed", c.seed, "Base seed for generated scenarios");
  base->add_option("--replications", replications, "Generated scenarios")->check(CLI::PositiveNumber);
  base->add_option("--clusters", clusters, "Clusters of generated scenarios")->check(CLI::PositiveNumber);
  base->add_option("--bs-count", baseline.bs_count, "Stations (0 = UAV count)")->check(CLI::NonNegativeNumber);
  base->add_option("--bs-height", baseline.bs_height_m, "Station height in m")->check(CLI::PositiveNumber);
  base->add_option("--bs-exponent", baseline.pathloss_exp_terrestrial, "Terrestrial path-loss exponent");
  base->add_option("--placement", placement, "Station placement")->check(CLI::IsMember({"grid", "at_ch"}));
  base->add_flag("--calibrated", calibrated, "Use the calibrated terrestrial setting");
  base->add_option("--out", c.out, "Output path (default stdout)");
  add_plan_flags(base, c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto s = generate_scenario(c.seed, clusters, member_min, member_max, radio);
      Output out(c.out);
      out.stream() << save_scenario(s);
    } else if (*plan) {
      const auto s = load(c);
      const auto p = make_plan(s, c);
      if (static_cast<std::size_t>(p.uav_count) > s.fleet.count()) {
        throw StageError("fleet", "plan needs " + std::to_string(p.uav_count) + " UAVs, fleet has " +
                                      std::to_string(s.fleet.count()));
      }
      Output out(c.out);
      write_plan_csv(out.stream(), p.dwell, first_ids(s, p.uav_count), ch_ids(s));
      std::cerr << "u_min=" << p.uav_count << '\n';
    } else if (*sim) {
      const auto s = load(c);
      const auto p = make_plan(s, c);
      SimulationOptions opt;
      opt.service_rate = c.mu;
      opt.horizon = horizon;
      opt.seed = c.seed;
      opt.mode = mode == "integer" ? ServiceMode::integer : ServiceMode::fluid;
      const auto trace = simulate(s, p.dwell, opt);
      Output out(c.out);
      write_trace_csv(out.stream(), trace, stride);
      std::cerr << "max_final_ratio=" << trace.max_final_ratio();
      if (horizon >= 1000) std::cerr << " rate_stable=" << (is_rate_stable(trace, epsilon) ? "yes" : "no");
      std::cerr << '\n';
    } else if (*solve) {
      const auto s = load(c);
      const auto result = run_pipeline(s, pipeline_options(c));
      RaSolution sol = result.solution;
      if (integer) sol = round_rbs(sol, result.instance);
      Output out(c.out);
      write_solution_csv(out.stream(), sol, result.instance, first_ids(s, result.plan.uav_count), ch_ids(s));
      if (kSolvers.at(c.solver) == RaSolver::both) std::cerr << "solver_gap=" << result.summary.solver_gap << '\n';
    } else if (*sw) {
      SweepSpec spec;
      spec.variable = parse_sweep_variable(variable);
      spec.values = parse_sweep_values(values);
      spec.replications = replications;
      spec.base_seed = c.seed;
      spec.num_clusters = clusters;
      spec.radio.p_tx = p_tx;
      spec.radio.total_rbs = rbs;
      spec.pipeline = pipeline_options(c);
      spec.threads = threads;
      const auto result = run_sweep(spec);
      Output out(c.out);
      write_sweep_csv(out.stream(), result);
    } else if (*base) {
      if (calibrated) baseline = calibrated_baseline();
      baseline.placement = placement == "at_ch" ? BsPlacement::at_ch : BsPlacement::grid;
      const auto options = pipeline_options(c);
      std::vector<BaselineResult> results;
      std::vector<std::uint64_t> seeds;
      if (!c.scenario.empty()) {
        results.push_back(run_baseline_comparison(load(c), baseline, options));
        seeds.push_back(0);
      } else {
        for (int r = 0; r < replications; ++r) {
          const std::uint64_t seed = mix_seed(c.seed, {static_cast<std::uint64_t>(r)});
          results.push_back(run_baseline_comparison(generate_scenario(seed, clusters, 1, 10), baseline, options));
          seeds.push_back(seed);
        }
      }
      Output out(c.out);
      write_baseline_csv(out.stream(), results, seeds);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << c.scenario << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
