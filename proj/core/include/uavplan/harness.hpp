#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "uavplan/model.hpp"
#include "uavplan/ra_opt.hpp"
#include "uavplan/scheduler.hpp"

namespace uavplan {

enum class RaSolver { reduced, kkt, both };

struct PipelineOptions {
  double mu = 1.0;
  double slack_target = 0.0;
  RaSolver solver = RaSolver::reduced;
  double energy_slots = 1.0;  ///< slots accumulated into total_energy_j
};

struct PipelineSummary {
  int u_min = 0;
  double avg_power_w = 0.0;      ///< mean over served CHs of their dwell-weighted link power
  double avg_rbs_per_uav = 0.0;
  double total_energy_j = 0.0;   ///< sum d P * slot_seconds * energy_slots
  double objective_w = 0.0;
  double solver_gap = 0.0;       ///< |kkt - reduced| / reduced when both solvers ran
};

struct PipelineResult {
  StabilityPlan plan;
  RaInstance instance;
  RaSolution solution;
  PipelineSummary summary;
};

/// min_uavs -> find_dwell -> RA solve. Failures are rethrown as StageError naming
/// the stage ("schedule", "fleet", "ra-reduced", "ra-kkt").
PipelineResult run_pipeline(const ClusterScenario& scenario, const PipelineOptions& options = {});

/// Average CH power of a solution, as reported in PipelineSummary.
double average_ch_power(const RaInstance& inst, const RaSolution& sol);

enum class SweepVariable { num_clusters, p_tx, total_rbs, packet_bits };

std::string to_string(SweepVariable v);
SweepVariable parse_sweep_variable(const std::string& name);

/// Parses `a,b,c` or `start:stop:step` (inclusive of stop within 1e-9 of a step).
std::vector<double> parse_sweep_values(const std::string& text);

struct SweepSpec {
  SweepVariable variable = SweepVariable::num_clusters;
  std::vector<double> values;
  int replications = 1;
  std::uint64_t base_seed = 0;
  RadioParams radio;
  int num_clusters = 20;
  int member_min = 1;
  int member_max = 10;
  PipelineOptions pipeline;
  unsigned threads = 0;  ///< 0 = hardware concurrency
};

struct SweepRow {
  std::size_t value_index = 0;
  double value = 0.0;
  int replication = 0;
  std::uint64_t seed = 0;
  PipelineSummary summary;
  std::string error;  ///< empty on success
};

struct SweepAggregate {
  double value = 0.0;
  int ok = 0;  ///< replications that succeeded
  double u_min = 0.0;
  double avg_power_w = 0.0;
  double avg_rbs_per_uav = 0.0;
  double total_energy_j = 0.0;
};

struct SweepResult {
  SweepVariable variable = SweepVariable::num_clusters;
  std::vector<SweepRow> rows;  ///< (value, replication) order
  std::vector<SweepAggregate> aggregates;
};

/// Seed of replication r at value index v: mix_seed(base_seed, {v, r}).
std::uint64_t sweep_cell_seed(std::uint64_t base_seed, std::size_t value_index, int replication);

/// Scenario for one sweep cell: the fixed parameters with the swept variable applied.
ClusterScenario sweep_cell_scenario(const SweepSpec& spec, double value, std::uint64_t seed);

/// Runs every cell (in parallel), recording failures in the row's error column.
SweepResult run_sweep(const SweepSpec& spec);

/// Header `kind,variable,value,replication,seed,n_ok,u_min,avg_power_w,avg_rbs_per_uav,total_energy_j,error`;
/// `cell` rows first, then one `mean` row per value averaged over its n_ok successful cells.
void write_sweep_csv(std::ostream& os, const SweepResult& result);

enum class BsPlacement {
  grid,    ///< uniform grid of bs_count stations over the area
  at_ch,   ///< one station above every CH
};

struct BaselineSpec {
  int bs_count = 0;  ///< 0 = same as the UAV count
  double bs_height_m = 25.0;
  double pathloss_exp_terrestrial = 3.5;
  BsPlacement placement = BsPlacement::grid;
};

/// Terrestrial setting under which the mean UAV CH power over default 20-cluster
/// scenarios is about 68% below the mean terrestrial CH power: grid stations,
/// 25 m masts, path-loss exponent 3.14.
BaselineSpec calibrated_baseline();

struct BaselineResult {
  int u_min = 0;
  double uav_avg_power_w = 0.0;
  double terrestrial_avg_power_w = 0.0;
  double reduction = 0.0;  ///< 1 - uav / terrestrial
};

/// Station positions for the baseline (x, y); height is bs_height_m.
std::vector<Point2> baseline_stations(const ClusterScenario& scenario, const BaselineSpec& spec, int uav_count);

/// Solves the RA problem twice on the same dwell plan: UAVs overhead (distance =
/// altitude) and fixed stations (3-D distance to the nearest station, terrestrial
/// exponent). Reports both average powers.
BaselineResult run_baseline_comparison(const ClusterScenario& scenario, const BaselineSpec& baseline,
                                       const PipelineOptions& options = {});

/// One row per replication; with several, a `mean` row with the mean powers and
/// the reduction of the mean powers.
void write_baseline_csv(std::ostream& os, const std::vector<BaselineResult>& results,
                        const std::vector<std::uint64_t>& seeds);

}  // namespace uavplan
