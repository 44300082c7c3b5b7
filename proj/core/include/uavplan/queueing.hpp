#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "uavplan/model.hpp"

namespace uavplan {

/// Binomial probability that `n` of `members` devices transmit in a slot.
double arrival_pmf(int members, double p, int n);

/// Expected arrivals per slot, p * members.
double mean_arrival(int members, double p);

/// Per-CH mean arrival rates in scenario order.
std::vector<double> arrival_rates(const ClusterScenario& scenario);

/// One slot of the CH queue: max(q - departures, 0) + arrivals.
double step_queue(double q, double departures, double arrivals);

enum class ServiceMode {
  fluid,    ///< fractional departures each slot
  integer,  ///< whole packets; the fractional part of the capacity is carried forward
};

struct SimulationOptions {
  double service_rate = 1.0;  ///< packets per slot for a full slot of dwelling (mu)
  std::int64_t horizon = 100000;
  std::uint64_t seed = 0;
  ServiceMode mode = ServiceMode::fluid;
};

struct QueueTrace {
  std::vector<int> ch_ids;
  std::vector<std::vector<double>> backlog;  ///< [ch][t], t = 0..horizon
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;

  /// max_g Q_{g,T} / T
  double max_final_ratio() const;
};

/// Slots drawn from one RNG substream. Substreams are keyed by (seed, ch, block),
/// so results do not depend on how replications are scheduled.
inline constexpr std::int64_t kSlotsPerBlock = 4096;

/// Monte Carlo run of every CH queue under the dwell plan. Each slot CH g receives
/// Binomial(members, p) packets and departure capacity mu * sum_u d_u^g.
QueueTrace simulate(const ClusterScenario& scenario, const DwellMatrix& plan, const SimulationOptions& options);

/// True iff max_g Q_{g,T}/T < epsilon. Requires horizon >= 1000.
bool is_rate_stable(const QueueTrace& trace, double epsilon);

/// CSV `slot,ch_id,backlog`, one row per (slot, CH). `stride` thins the slots written.
void write_trace_csv(std::ostream& os, const QueueTrace& trace, std::int64_t stride = 1);

}  // namespace uavplan
