#include "uavplan/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "uavplan/csv.hpp"
#include "uavplan/errors.hpp"
#include "uavplan/rng.hpp"

namespace uavplan {

double arrival_pmf(int members, double p, int n) {
  if (members < 0) throw ParameterError("members must be >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p must be in [0, 1]");
  if (n < 0 || n > members) throw ParameterError("n must be in [0, members]");
  if (p == 0.0) return n == 0 ? 1.0 : 0.0;
  if (p == 1.0) return n == members ? 1.0 : 0.0;
  // log C(m, n) via lgamma keeps large member counts finite.
  const double log_choose = std::lgamma(members + 1.0) - std::lgamma(n + 1.0) - std::lgamma(members - n + 1.0);
  return std::exp(log_choose + n * std::log(p) + (members - n) * std::log1p(-p));
}

double mean_arrival(int members, double p) { return p * members; }

std::vector<double> arrival_rates(const ClusterScenario& scenario) {
  std::vector<double> rates;
  rates.reserve(scenario.clusters.size());
  for (const Cluster& c : scenario.clusters) rates.push_back(mean_arrival(c.members, scenario.p_tx));
  return rates;
}

double step_queue(double q, double departures, double arrivals) {
  if (q < 0.0 || departures < 0.0 || arrivals < 0.0) throw ParameterError("queue inputs must be nonnegative");
  return std::max(q - departures, 0.0) + arrivals;
}

double QueueTrace::max_final_ratio() const {
  double worst = 0.0;
  for (const auto& q : backlog) worst = std::max(worst, q.back() / static_cast<double>(horizon));
  return worst;
}

QueueTrace simulate(const ClusterScenario& scenario, const DwellMatrix& plan, const SimulationOptions& options) {
  const std::size_t chs = scenario.clusters.size();
  if (plan.ch_count() != chs) throw ParameterError("plan has " + std::to_string(plan.ch_count()) +
                                                   " CH columns, scenario has " + std::to_string(chs));
  if (scenario.fleet.count() > 0 && plan.uav_count() > scenario.fleet.count()) {
    throw ParameterError("plan uses more UAVs than the fleet provides");
  }
  if (options.horizon < 1) throw ParameterError("horizon must be >= 1");
  if (!(options.service_rate >= 0.0)) throw ParameterError("service rate must be nonnegative");

  QueueTrace trace;
  trace.horizon = options.horizon;
  trace.seed = options.seed;
  trace.backlog.assign(chs, std::vector<double>(static_cast<std::size_t>(options.horizon) + 1, 0.0));

  for (std::size_t g = 0; g < chs; ++g) {
    const Cluster& cluster = scenario.clusters[g];
    trace.ch_ids.push_back(cluster.id);
    const double capacity = options.service_rate * plan.col_sum(g);
    auto& q = trace.backlog[g];
    double credit = 0.0;

    for (std::int64_t block = 0; block * kSlotsPerBlock < options.horizon; ++block) {
      std::mt19937_64 rng(mix_seed(options.seed, {static_cast<std::uint64_t>(cluster.id),
                                                  static_cast<std::uint64_t>(block)}));
      std::binomial_distribution<int> arrivals(cluster.members, scenario.p_tx);
      const std::int64_t end = std::min(options.horizon, (block + 1) * kSlotsPerBlock);
      for (std::int64_t t = block * kSlotsPerBlock; t < end; ++t) {
        double departures = capacity;
        if (options.mode == ServiceMode::integer) {
          credit += capacity;
          departures = std::floor(credit);
          credit -= departures;
        }
        const auto ti = static_cast<std::size_t>(t);
        q[ti + 1] = step_queue(q[ti], departures, arrivals(rng));
      }
    }
  }
  return trace;
}

bool is_rate_stable(const QueueTrace& trace, double epsilon) {
  if (trace.horizon < 1000) throw ParameterError("rate stability needs a horizon of at least 1000 slots");
  return trace.max_final_ratio() < epsilon;
}

void write_trace_csv(std::ostream& os, const QueueTrace& trace, std::int64_t stride) {
  if (stride < 1) throw ParameterError("stride must be >= 1");
  os << "slot,ch_id,backlog\n";
  for (std::int64_t t = 0; t <= trace.horizon; t += stride) {
    for (std::size_t g = 0; g < trace.backlog.size(); ++g) {
      os << t << ',' << trace.ch_ids[g] << ',' << csv_float(trace.backlog[g][static_cast<std::size_t>(t)]) << '\n';
    }
  }
}

}  // namespace uavplan
