#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "uavplan/model.hpp"

namespace uavplan {

struct StabilityPlan {
  DwellMatrix dwell;
  int uav_count = 0;
  std::vector<double> slack;  ///< per CH: mu * sum_u d_u^g - arrival rate
};

struct DwellOptions {
  double mu = 1.0;            ///< packets served per full slot of dwelling
  double slack_target = 0.0;  ///< extra packets/slot of capacity demanded for every CH
};

/// Greedy sequential fill: CHs in index order pour their demand (rate + slack) / mu
/// into the current UAV until its unit budget is used, spilling the rest onward.
/// Returns nullopt when the fleet cannot cover the total demand.
std::optional<StabilityPlan> find_dwell(std::span<const double> arrival_rates, int uav_count,
                                        const DwellOptions& options = {});

/// Smallest U for which find_dwell succeeds. All-zero demand still needs one UAV.
int min_uavs(std::span<const double> arrival_rates, const DwellOptions& options = {});

/// Membership test for the stability set: nonnegative entries, per-UAV budget <= 1,
/// and mu * sum_u d_u^g >= rate_g, all within 1e-9.
bool verify_plan(const StabilityPlan& plan, std::span<const double> arrival_rates, double mu);

/// CSV `uav_id,ch_id,dwell_fraction` for the nonzero entries.
void write_plan_csv(std::ostream& os, const DwellMatrix& dwell, std::span<const int> uav_ids,
                    std::span<const int> ch_ids);

}  // namespace uavplan
