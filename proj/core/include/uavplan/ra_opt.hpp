#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "uavplan/lma.hpp"
#include "uavplan/model.hpp"

namespace uavplan {

/// Joint RB-allocation / power-control problem for a fixed dwell plan.
///
/// For every link (g, u) with d_u^g > 0 the CH needs power
/// P_g^u >= K_gu * g_c(z_u), K_gu = B N0 / (beta H_gu), c = bits / (B d_u^g T),
/// and the objective sum_{g,u} d_u^g P_g^u is minimized subject to
/// sum_u z_u <= Z and P_g^u <= pmax. RB counts are continuous here.
struct RaInstance {
  DwellMatrix dwell;
  UavChMatrix gains;  ///< H_gu, (uav, ch)
  double packet_bits = 100.0;
  double rb_bandwidth_hz = 15e3;
  int total_rbs = 6;
  double noise_psd = 1e-20;
  double beta = 1.0;
  double pmax_w = 1.0;
  double slot_seconds = 1.0;
  double z_min = 1e-3;  ///< lower bound on RBs of a UAV that serves anyone

  std::size_t uav_count() const noexcept { return dwell.uav_count(); }
  std::size_t ch_count() const noexcept { return dwell.ch_count(); }

  bool is_link(std::size_t u, std::size_t g) const { return dwell(u, g) > 0.0; }
  /// UAVs with at least one link.
  std::vector<std::size_t> active_uavs() const;

  /// K_gu = B N0 / (beta H_gu)
  double power_scale(std::size_t u, std::size_t g) const;
  /// c_gu = bits / (B d_u^g T)
  double rate_exponent(std::size_t u, std::size_t g) const;
  /// Tight power of link (u, g) at z RBs.
  double link_power(std::size_t u, std::size_t g, double z) const;

  void validate() const;
};

/// Builds the instance for UAVs hovering over their CHs: H_gu uses the UAV altitude.
RaInstance make_instance(const ClusterScenario& scenario, const DwellMatrix& dwell);

struct RaSolution {
  std::vector<double> z;  ///< RBs per UAV, 0 for idle UAVs
  UavChMatrix power;      ///< P_g^u, 0 where d_u^g = 0
  double objective = 0.0; ///< sum d_u^g P_g^u in W
};

/// Tight powers and objective for a given RB split. Throws InfeasibleError naming the
/// first link that would exceed pmax or that has a nonpositive z.
RaSolution evaluate_allocation(const RaInstance& inst, std::span<const double> z);

/// Checks sum z <= Z, z <= Z, z > 0 on active UAVs, 0 <= P <= pmax, and the rate
/// constraint on every link, each within `tol`.
bool is_feasible(const RaInstance& inst, const RaSolution& sol, double tol = 1e-9);

/// Primal-dual point of the relaxed problem. The lower-bound multipliers on z and P
/// are identically zero at any solution (z, P > 0) and are not represented.
struct KktPoint {
  std::vector<double> z;
  UavChMatrix power;
  std::vector<double> lambda_rb_cap;  ///< per UAV, for z_u <= Z
  UavChMatrix lambda_pmax;            ///< per link, for P_g^u <= pmax
  double lambda_rb_budget = 0.0;      ///< for sum_u z_u <= Z
  UavChMatrix lambda_rate;            ///< per link, for the rate constraint
  std::vector<double> residuals;

  static KktPoint zeros(std::size_t uavs, std::size_t chs);
};

/// Raw KKT residuals, stacked in this order (u over active UAVs, l over links in
/// (u, g) row-major order):
///   1. lambda_rb_cap[u] * (z_u - Z)
///   2. lambda_pmax[l] * (P_l - pmax)
///   3. lambda_rb_budget * (sum_u z_u - Z)
///   4. d_l + lambda_pmax[l] - lambda_rate[l]                        (stationarity in P)
///   5. lambda_rb_cap[u] + lambda_rb_budget
///        + sum_{l in u} lambda_rate[l] K_l g_c'(z_u)                (stationarity in z)
///   6. lambda_rate[l] * (K_l g_c(z_u) - P_l)
/// Throws ParameterError if an active UAV has z <= 0.
std::vector<double> kkt_residuals(const KktPoint& point, const RaInstance& inst);

struct KktSolveResult {
  RaSolution solution;
  KktPoint point;
  lma::Result lma;
};

/// Solves the KKT system with Levenberg-Marquardt. Complementarity is written with the
/// Fischer-Burmeister function, so roots are primal and dual feasible; returned
/// multipliers are clipped at zero. Unless `init` is given, starts
/// each active UAV at the smallest z meeting pmax plus an even share of the spare
/// RBs, with tight powers. Throws InfeasibleError if pmax cannot be met within Z,
/// SolverError if the raw residual norm stays above 1e-8 or the scaled system's
/// residual above config.residual_tol.
KktSolveResult solve_kkt(const RaInstance& inst, const std::optional<KktPoint>& init = std::nullopt,
                         const lma::Config& config = {});

/// Independent route: eliminate P through the tight rate constraint and split the RBs
/// by bisection on the shared multiplier that equalizes marginal costs.
RaSolution solve_reduced(const RaInstance& inst);

/// Floors each z_u (at least 1), then hands out leftover RBs one at a time to the
/// UAV whose objective drops most (ties to the lower index). If the 1-RB minimum
/// overshoots Z, RBs are first taken back one at a time where the objective rises
/// least. Throws InfeasibleError if no integer split reachable this way meets pmax.
RaSolution round_rbs(const RaSolution& continuous, const RaInstance& inst);

/// Exhaustive search over integer splits with z_u >= 1 on active UAVs and sum <= Z.
/// Limited to Z <= 16 and at most 4 UAVs.
RaSolution brute_force(const RaInstance& inst);

/// CSV `uav_id,rbs`, blank line, `ch_id,uav_id,power_w`, blank line, `objective_w=<value>`.
void write_solution_csv(std::ostream& os, const RaSolution& sol, const RaInstance& inst,
                        std::span<const int> uav_ids, std::span<const int> ch_ids);

}  // namespace uavplan
