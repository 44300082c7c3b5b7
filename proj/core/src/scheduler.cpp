#include "uavplan/scheduler.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include "uavplan/csv.hpp"
#include "uavplan/errors.hpp"

namespace uavplan {
namespace {

// Demand left below kDemandEps is rounding residue. A UAV whose budget drops below
// kBudgetEps moves on, so no CH gets a sliver of dwell it cannot use.
constexpr double kDemandEps = 1e-12;
constexpr double kBudgetEps = 1e-9;

void check_inputs(std::span<const double> rates, const DwellOptions& options) {
  if (!(options.mu > 0.0)) throw ParameterError("mu must be positive");
  if (!(options.slack_target >= 0.0)) throw ParameterError("slack_target must be nonnegative");
  for (double r : rates) {
    if (!(r >= 0.0)) throw ParameterError("arrival rates must be nonnegative");
  }
}

double demand_of(double rate, const DwellOptions& options) {
  return rate > 0.0 ? (rate + options.slack_target) / options.mu : 0.0;
}

}  // namespace

std::optional<StabilityPlan> find_dwell(std::span<const double> arrival_rates, int uav_count,
                                        const DwellOptions& options) {
  check_inputs(arrival_rates, options);
  if (uav_count < 1) throw ParameterError("uav_count must be >= 1");

  const std::size_t chs = arrival_rates.size();
  StabilityPlan plan;
  plan.uav_count = uav_count;
  plan.dwell = DwellMatrix(static_cast<std::size_t>(uav_count), chs);

  std::size_t u = 0;
  double budget = 1.0;
  for (std::size_t g = 0; g < chs; ++g) {
    double remaining = demand_of(arrival_rates[g], options);
    while (remaining > kDemandEps) {
      if (budget <= kBudgetEps) {
        if (++u == static_cast<std::size_t>(uav_count)) return std::nullopt;
        budget = 1.0;
      }
      const double pour = std::min(remaining, budget);
      plan.dwell(u, g) += pour;
      remaining -= pour;
      budget -= pour;
    }
  }

  plan.slack.resize(chs);
  for (std::size_t g = 0; g < chs; ++g) {
    plan.slack[g] = options.mu * plan.dwell.col_sum(g) - arrival_rates[g];
  }
  return plan;
}

int min_uavs(std::span<const double> arrival_rates, const DwellOptions& options) {
  check_inputs(arrival_rates, options);
  double total = 0.0;
  for (double r : arrival_rates) total += demand_of(r, options);
  int u = std::max(1, static_cast<int>(std::ceil(total - 1e-9)));
  // The closed form can be off by one when the total sits within rounding of an integer.
  while (u > 1 && find_dwell(arrival_rates, u - 1, options)) --u;
  while (!find_dwell(arrival_rates, u, options)) ++u;
  return u;
}

bool verify_plan(const StabilityPlan& plan, std::span<const double> arrival_rates, double mu) {
  constexpr double tol = 1e-9;
  const DwellMatrix& d = plan.dwell;
  if (d.ch_count() != arrival_rates.size()) throw ParameterError("plan and rate vector differ in CH count");
  if (!is_valid_dwell(d, tol)) return false;
  for (std::size_t g = 0; g < d.ch_count(); ++g) {
    if (mu * d.col_sum(g) < arrival_rates[g] - tol) return false;
  }
  return true;
}

void write_plan_csv(std::ostream& os, const DwellMatrix& dwell, std::span<const int> uav_ids,
                    std::span<const int> ch_ids) {
  os << "uav_id,ch_id,dwell_fraction\n";
  for (std::size_t u = 0; u < dwell.uav_count(); ++u) {
    for (std::size_t g = 0; g < dwell.ch_count(); ++g) {
      if (dwell(u, g) > 0.0) os << uav_ids[u] << ',' << ch_ids[g] << ',' << csv_float(dwell(u, g)) << '\n';
    }
  }
}

}  // namespace uavplan
