#include "uavplan/ra_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include <Eigen/LU>

#include "uavplan/channel.hpp"
#include "uavplan/csv.hpp"
#include "uavplan/errors.hpp"

namespace uavplan {

// ---------------------------------------------------------------------------
// Instance

std::vector<std::size_t> RaInstance::active_uavs() const {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < uav_count(); ++u) {
    for (std::size_t g = 0; g < ch_count(); ++g) {
      if (is_link(u, g)) {
        out.push_back(u);
        break;
      }
    }
  }
  return out;
}

double RaInstance::power_scale(std::size_t u, std::size_t g) const {
  return rb_bandwidth_hz * noise_psd / (beta * gains(u, g));
}

double RaInstance::rate_exponent(std::size_t u, std::size_t g) const {
  return packet_bits / (rb_bandwidth_hz * dwell(u, g) * slot_seconds);
}

double RaInstance::link_power(std::size_t u, std::size_t g, double z) const {
  return power_scale(u, g) * rate_cost(rate_exponent(u, g), z);
}

void RaInstance::validate() const {
  if (gains.uav_count() != uav_count() || gains.ch_count() != ch_count()) {
    throw ParameterError("gain and dwell matrices differ in shape");
  }
  if (uav_count() == 0) throw ParameterError("instance needs at least one UAV");
  if (!is_valid_dwell(dwell)) throw ParameterError("dwell matrix violates the per-UAV time budget");
  if (!(packet_bits > 0.0 && rb_bandwidth_hz > 0.0 && noise_psd > 0.0 && beta > 0.0 && pmax_w > 0.0 &&
        slot_seconds > 0.0 && z_min > 0.0)) {
    throw ParameterError("instance parameters must be positive");
  }
  if (total_rbs < 1) throw ParameterError("total_rbs must be >= 1");
  for (std::size_t u = 0; u < uav_count(); ++u) {
    for (std::size_t g = 0; g < ch_count(); ++g) {
      if (is_link(u, g) && !(gains(u, g) > 0.0)) throw ParameterError("link gains must be positive");
    }
  }
}

RaInstance make_instance(const ClusterScenario& scenario, const DwellMatrix& dwell) {
  if (dwell.ch_count() != scenario.clusters.size()) throw ParameterError("dwell matrix does not match the scenario");
  if (dwell.uav_count() > scenario.fleet.count()) {
    throw ParameterError("plan needs " + std::to_string(dwell.uav_count()) + " UAVs, fleet has " +
                         std::to_string(scenario.fleet.count()));
  }
  RaInstance inst;
  inst.dwell = dwell;
  inst.gains = UavChMatrix(dwell.uav_count(), dwell.ch_count());
  for (std::size_t u = 0; u < dwell.uav_count(); ++u) {
    const double h = path_gain(scenario.fleet.altitudes[u], scenario.wavelength(), scenario.pathloss_exp);
    for (std::size_t g = 0; g < dwell.ch_count(); ++g) inst.gains(u, g) = h;
  }
  inst.packet_bits = scenario.packet_bits;
  inst.rb_bandwidth_hz = scenario.rb_bandwidth_hz;
  inst.total_rbs = scenario.total_rbs;
  inst.noise_psd = scenario.noise_psd;
  inst.beta = snr_gap(scenario.ber_target);
  inst.pmax_w = scenario.pmax_w;
  inst.slot_seconds = scenario.slot_seconds;
  inst.validate();
  return inst;
}

// ---------------------------------------------------------------------------
// Allocation helpers

namespace {

std::string link_name(std::size_t u, std::size_t g) {
  return "link (ch " + std::to_string(g) + ", uav " + std::to_string(u) + ")";
}

/// Sum over the UAV's links of d P at z RBs; +inf if a link exceeds pmax.
double uav_cost(const RaInstance& inst, std::size_t u, double z) {
  double cost = 0.0;
  for (std::size_t g = 0; g < inst.ch_count(); ++g) {
    if (!inst.is_link(u, g)) continue;
    const double p = inst.link_power(u, g, z);
    if (!(p <= inst.pmax_w)) return std::numeric_limits<double>::infinity();
    cost += inst.dwell(u, g) * p;
  }
  return cost;
}

/// d/dz of uav_cost (ignoring the pmax cap).
double uav_marginal(const RaInstance& inst, std::size_t u, double z) {
  double m = 0.0;
  for (std::size_t g = 0; g < inst.ch_count(); ++g) {
    if (inst.is_link(u, g)) m += inst.dwell(u, g) * inst.power_scale(u, g) * rate_cost_dz(inst.rate_exponent(u, g), z);
  }
  return m;
}

RaSolution idle_solution(const RaInstance& inst, bool integral) {
  RaSolution sol;
  const std::size_t n = inst.uav_count();
  sol.power = UavChMatrix(n, inst.ch_count());
  if (integral) {
    sol.z.assign(n, static_cast<double>(inst.total_rbs / static_cast<int>(n)));
    for (std::size_t u = 0; u < static_cast<std::size_t>(inst.total_rbs) % n; ++u) sol.z[u] += 1.0;
  } else {
    sol.z.assign(n, static_cast<double>(inst.total_rbs) / static_cast<double>(n));
  }
  return sol;
}

/// Smallest z in [z_min, Z] keeping link (u, g) within pmax. Throws when even Z is not enough.
double pmax_floor(const RaInstance& inst, std::size_t u, std::size_t g) {
  const double zmax = inst.total_rbs;
  if (!(inst.link_power(u, g, zmax) <= inst.pmax_w)) {
    throw InfeasibleError(link_name(u, g) + " exceeds pmax even with all " + std::to_string(inst.total_rbs) + " RBs");
  }
  if (inst.link_power(u, g, inst.z_min) <= inst.pmax_w) return inst.z_min;
  double lo = inst.z_min, hi = zmax;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (inst.link_power(u, g, mid) <= inst.pmax_w ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

RaSolution evaluate_allocation(const RaInstance& inst, std::span<const double> z) {
  if (z.size() != inst.uav_count()) throw ParameterError("RB vector length differs from the UAV count");
  RaSolution sol;
  sol.z.assign(z.begin(), z.end());
  sol.power = UavChMatrix(inst.uav_count(), inst.ch_count());
  for (std::size_t u = 0; u < inst.uav_count(); ++u) {
    for (std::size_t g = 0; g < inst.ch_count(); ++g) {
      if (!inst.is_link(u, g)) continue;
      if (!(z[u] > 0.0)) throw InfeasibleError(link_name(u, g) + " has no resource blocks");
      const double p = inst.link_power(u, g, z[u]);
      if (!(p <= inst.pmax_w)) {
        throw InfeasibleError(link_name(u, g) + " needs " + csv_float(p) + " W > pmax " + csv_float(inst.pmax_w) + " W");
      }
      sol.power(u, g) = p;
      sol.objective += inst.dwell(u, g) * p;
    }
  }
  return sol;
}

bool is_feasible(const RaInstance& inst, const RaSolution& sol, double tol) {
  if (sol.z.size() != inst.uav_count()) return false;
  if (sol.power.uav_count() != inst.uav_count() || sol.power.ch_count() != inst.ch_count()) return false;
  double total = 0.0;
  for (double z : sol.z) {
    if (!(z >= -tol && z <= inst.total_rbs + tol)) return false;
    total += z;
  }
  if (total > inst.total_rbs + tol) return false;
  for (std::size_t u = 0; u < inst.uav_count(); ++u) {
    for (std::size_t g = 0; g < inst.ch_count(); ++g) {
      const double p = sol.power(u, g);
      if (!inst.is_link(u, g)) {
        if (std::abs(p) > tol) return false;
        continue;
      }
      if (!(sol.z[u] > 0.0)) return false;
      if (!(p > 0.0 && p <= inst.pmax_w + tol)) return false;
      const double need = inst.link_power(u, g, sol.z[u]);
      if (need - p > tol * need) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// KKT system

KktPoint KktPoint::zeros(std::size_t uavs, std::size_t chs) {
  KktPoint p;
  p.z.assign(uavs, 0.0);
  p.power = UavChMatrix(uavs, chs);
  p.lambda_rb_cap.assign(uavs, 0.0);
  p.lambda_pmax = UavChMatrix(uavs, chs);
  p.lambda_rate = UavChMatrix(uavs, chs);
  return p;
}

namespace {

struct Link {
  std::size_t u;
  std::size_t g;
  std::size_t a;  ///< position of u among the active UAVs
};

std::vector<Link> links_of(const RaInstance& inst, const std::vector<std::size_t>& active) {
  std::vector<Link> links;
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t g = 0; g < inst.ch_count(); ++g) {
      if (inst.is_link(active[a], g)) links.push_back({active[a], g, a});
    }
  }
  return links;
}

void check_point_shape(const KktPoint& p, const RaInstance& inst) {
  const std::size_t U = inst.uav_count(), G = inst.ch_count();
  auto shaped = [&](const UavChMatrix& m) { return m.uav_count() == U && m.ch_count() == G; };
  if (p.z.size() != U || p.lambda_rb_cap.size() != U || !shaped(p.power) || !shaped(p.lambda_pmax) ||
      !shaped(p.lambda_rate)) {
    throw ParameterError("KKT point dimensions do not match the instance");
  }
}

}  // namespace

std::vector<double> kkt_residuals(const KktPoint& point, const RaInstance& inst) {
  check_point_shape(point, inst);
  const auto active = inst.active_uavs();
  const auto links = links_of(inst, active);
  const double Z = inst.total_rbs;

  for (std::size_t u : active) {
    if (!(point.z[u] > 0.0)) throw ParameterError("z of active UAV " + std::to_string(u) + " must be positive");
  }

  std::vector<double> r;
  r.reserve(2 * active.size() + 3 * links.size() + 1);
  double zsum = 0.0;
  for (std::size_t u : active) {
    r.push_back(point.lambda_rb_cap[u] * (point.z[u] - Z));
    zsum += point.z[u];
  }
  for (const Link& l : links) r.push_back(point.lambda_pmax(l.u, l.g) * (point.power(l.u, l.g) - inst.pmax_w));
  r.push_back(point.lambda_rb_budget * (zsum - Z));
  for (const Link& l : links) {
    r.push_back(inst.dwell(l.u, l.g) + point.lambda_pmax(l.u, l.g) - point.lambda_rate(l.u, l.g));
  }
  for (std::size_t u : active) {
    double s = point.lambda_rb_cap[u] + point.lambda_rb_budget;
    for (const Link& l : links) {
      if (l.u == u) {
        s += point.lambda_rate(u, l.g) * inst.power_scale(u, l.g) * rate_cost_dz(inst.rate_exponent(u, l.g), point.z[u]);
      }
    }
    r.push_back(s);
  }
  for (const Link& l : links) {
    const double need = inst.link_power(l.u, l.g, point.z[l.u]);
    r.push_back(point.lambda_rate(l.u, l.g) * (need - point.power(l.u, l.g)));
  }
  return r;
}

namespace {

// Scaled KKT system solved by LMA. Each complementarity pair (multiplier,
// constraint slack) is one Fischer-Burmeister row, so roots are primal and dual
// feasible. Link powers are in units of their start values, link multipliers in
// units of dwell, UAV z-multipliers and stationarity rows in units of the
// starting marginal cost, the budget multiplier in the largest of those.
//
// Unknowns: [z (A)] [p (L)] [m_cap (A)] [m_pmax (L)] [m_budget] [m_rate (L)]
// Rows:     fb(m_cap, 1 - z/Z), fb(m_pmax, 1 - p rho), fb(m_budget, 1 - sum z/Z),
//           stationarity in P and z, tight rate constraint.
class ScaledKkt {
 public:
  ScaledKkt(const RaInstance& inst, std::vector<std::size_t> active, std::vector<Link> links,
            const std::vector<double>& z0)
      : inst_(inst), active_(std::move(active)), links_(std::move(links)) {
    A_ = active_.size();
    L_ = links_.size();
    nu_.assign(A_, 0.0);
    for (const Link& l : links_) {
      const double k = inst_.power_scale(l.u, l.g);
      const double c = inst_.rate_exponent(l.u, l.g);
      const double d = inst_.dwell(l.u, l.g);
      const double p0 = k * rate_cost(c, z0[l.a]);
      c_.push_back(c);
      d_.push_back(d);
      p_ref_.push_back(p0);
      rho_.push_back(p0 / inst_.pmax_w);
      k_power_.push_back(k / p0);
      nu_[l.a] += d * k * rate_cost_dz(c, z0[l.a]);
    }
    for (double& nu : nu_) nu = std::abs(nu);
    nu_budget_ = *std::max_element(nu_.begin(), nu_.end());
    for (std::size_t l = 0; l < L_; ++l) {
      k_marginal_.push_back(d_[l] * inst_.power_scale(links_[l].u, links_[l].g) / nu_[links_[l].a]);
    }
  }

  std::size_t size() const { return 2 * A_ + 3 * L_ + 1; }

  std::size_t iz(std::size_t a) const { return a; }
  std::size_t ip(std::size_t l) const { return A_ + l; }
  std::size_t icap(std::size_t a) const { return A_ + L_ + a; }
  std::size_t ipmax(std::size_t l) const { return 2 * A_ + L_ + l; }
  std::size_t ibudget() const { return 2 * A_ + 2 * L_; }
  std::size_t irate(std::size_t l) const { return 2 * A_ + 2 * L_ + 1 + l; }

  lma::Vector residual(const lma::Vector& x) const {
    lma::Vector r(static_cast<Eigen::Index>(size()));
    const double Z = inst_.total_rbs;
    double zsum = 0.0;
    for (std::size_t a = 0; a < A_; ++a) {
      if (!(x[iz(a)] > 0.0)) {
        r.setConstant(std::numeric_limits<double>::quiet_NaN());
        return r;
      }
      zsum += x[iz(a)];
    }
    std::size_t row = 0;
    for (std::size_t a = 0; a < A_; ++a) r[row++] = fb(x[icap(a)], 1.0 - x[iz(a)] / Z).value;
    for (std::size_t l = 0; l < L_; ++l) r[row++] = fb(x[ipmax(l)], 1.0 - x[ip(l)] * rho_[l]).value;
    r[row++] = fb(x[ibudget()], 1.0 - zsum / Z).value;
    for (std::size_t l = 0; l < L_; ++l) r[row++] = 1.0 + x[ipmax(l)] - x[irate(l)];
    const std::size_t stat_z = row;
    for (std::size_t a = 0; a < A_; ++a) r[row++] = x[icap(a)] + nu_budget_ / nu_[a] * x[ibudget()];
    for (std::size_t l = 0; l < L_; ++l) {
      const std::size_t a = links_[l].a;
      r[stat_z + a] += x[irate(l)] * k_marginal_[l] * rate_cost_dz(c_[l], x[iz(a)]);
    }
    for (std::size_t l = 0; l < L_; ++l) {
      r[row++] = k_power_[l] * rate_cost(c_[l], x[iz(links_[l].a)]) - x[ip(l)];
    }
    return r;
  }

  lma::Matrix jacobian(const lma::Vector& x) const {
    const auto n = static_cast<Eigen::Index>(size());
    lma::Matrix j = lma::Matrix::Zero(n, n);
    const double Z = inst_.total_rbs;
    double zsum = 0.0;
    for (std::size_t a = 0; a < A_; ++a) zsum += x[iz(a)];

    std::size_t row = 0;
    for (std::size_t a = 0; a < A_; ++a, ++row) {
      const Fb f = fb(x[icap(a)], 1.0 - x[iz(a)] / Z);
      j(row, icap(a)) = f.da;
      j(row, iz(a)) = -f.db / Z;
    }
    for (std::size_t l = 0; l < L_; ++l, ++row) {
      const Fb f = fb(x[ipmax(l)], 1.0 - x[ip(l)] * rho_[l]);
      j(row, ipmax(l)) = f.da;
      j(row, ip(l)) = -f.db * rho_[l];
    }
    const Fb fbud = fb(x[ibudget()], 1.0 - zsum / Z);
    j(row, ibudget()) = fbud.da;
    for (std::size_t a = 0; a < A_; ++a) j(row, iz(a)) = -fbud.db / Z;
    ++row;
    for (std::size_t l = 0; l < L_; ++l, ++row) {
      j(row, ipmax(l)) = 1.0;
      j(row, irate(l)) = -1.0;
    }
    const std::size_t stat_z = row;
    for (std::size_t a = 0; a < A_; ++a, ++row) {
      j(row, icap(a)) = 1.0;
      j(row, ibudget()) = nu_budget_ / nu_[a];
    }
    for (std::size_t l = 0; l < L_; ++l) {
      const std::size_t a = links_[l].a;
      const double z = x[iz(a)];
      j(stat_z + a, irate(l)) = k_marginal_[l] * rate_cost_dz(c_[l], z);
      j(stat_z + a, iz(a)) += x[irate(l)] * k_marginal_[l] * rate_cost_dz2(c_[l], z);
    }
    for (std::size_t l = 0; l < L_; ++l, ++row) {
      const std::size_t a = links_[l].a;
      j(row, iz(a)) = k_power_[l] * rate_cost_dz(c_[l], x[iz(a)]);
      j(row, ip(l)) = -1.0;
    }
    return j;
  }

  lma::Vector encode(const KktPoint& p) const {
    lma::Vector x(static_cast<Eigen::Index>(size()));
    for (std::size_t a = 0; a < A_; ++a) {
      x[iz(a)] = std::clamp(p.z[active_[a]], inst_.z_min, static_cast<double>(inst_.total_rbs));
      x[icap(a)] = std::max(p.lambda_rb_cap[active_[a]], 0.0) / nu_[a];
    }
    for (std::size_t l = 0; l < L_; ++l) {
      const auto [u, g, a] = links_[l];
      x[ip(l)] = std::clamp(p.power(u, g), 0.0, inst_.pmax_w) / p_ref_[l];
      x[ipmax(l)] = std::max(p.lambda_pmax(u, g), 0.0) / d_[l];
      x[irate(l)] = std::max(p.lambda_rate(u, g), 0.0) / d_[l];
    }
    x[ibudget()] = std::max(p.lambda_rb_budget, 0.0) / nu_budget_;
    return x;
  }

  /// Multipliers are clipped at zero; at a root they are nonnegative anyway.
  KktPoint decode(const lma::Vector& x) const {
    KktPoint p = KktPoint::zeros(inst_.uav_count(), inst_.ch_count());
    for (std::size_t a = 0; a < A_; ++a) {
      p.z[active_[a]] = x[iz(a)];
      p.lambda_rb_cap[active_[a]] = nu_[a] * std::max(x[icap(a)], 0.0);
    }
    for (std::size_t l = 0; l < L_; ++l) {
      const auto [u, g, a] = links_[l];
      p.power(u, g) = p_ref_[l] * x[ip(l)];
      p.lambda_pmax(u, g) = d_[l] * std::max(x[ipmax(l)], 0.0);
      p.lambda_rate(u, g) = d_[l] * std::max(x[irate(l)], 0.0);
    }
    p.lambda_rb_budget = nu_budget_ * std::max(x[ibudget()], 0.0);
    return p;
  }

 private:
  struct Fb {
    double value, da, db;
  };

  // a + b - sqrt(a^2 + b^2) and its partial derivatives; at the kink the
  // generalized gradient (1 - 1/sqrt 2, 1 - 1/sqrt 2) is used.
  static Fb fb(double a, double b) {
    const double r = std::hypot(a, b);
    if (r == 0.0) return {0.0, 1.0 - std::numbers::sqrt2 / 2.0, 1.0 - std::numbers::sqrt2 / 2.0};
    return {a + b - r, 1.0 - a / r, 1.0 - b / r};
  }

  const RaInstance& inst_;
  std::vector<std::size_t> active_;
  std::vector<Link> links_;
  std::size_t A_ = 0;
  std::size_t L_ = 0;
  double nu_budget_ = 1.0;
  std::vector<double> nu_;
  std::vector<double> c_, d_, p_ref_, rho_, k_power_, k_marginal_;
};

constexpr double kKktResidualTol = 1e-8;
constexpr double kInitialMultiplier = 1e-6;
// LMA restarts from its best point with fresh damping.
constexpr int kLmaRounds = 8;
constexpr int kNewtonSteps = 20;

// Undamped Newton steps from x, halved only to stay in the domain; returns the
// iterate with the smallest residual. Also takes LMA's 1e-10 stopping point to
// machine precision, so budget sums are exact to ~1e-15 RB.
// Near an active pmax bound the first full step can overshoot before converging
// quadratically, which LMA's monotone acceptance rejects.
lma::Vector newton_polish(const lma::ResidualFn& residual, const lma::JacobianFn& jacobian, lma::Vector x) {
  lma::Vector best = x;
  double best_norm = residual(x).norm();
  for (int i = 0; i < kNewtonSteps; ++i) {
    const lma::Vector r = residual(x);
    lma::Vector step = jacobian(x).partialPivLu().solve(r);
    if (!step.allFinite()) break;
    double n = residual(x - step).norm();
    for (int halve = 0; halve < 50 && !std::isfinite(n); ++halve) {
      step *= 0.5;
      n = residual(x - step).norm();
    }
    if (!std::isfinite(n)) break;
    x -= step;
    if (n < best_norm) {
      best = x;
      best_norm = n;
    }
    if (n == 0.0) break;
  }
  return best;
}

}  // namespace

KktSolveResult solve_kkt(const RaInstance& inst, const std::optional<KktPoint>& init, const lma::Config& config) {
  inst.validate();
  const auto active = inst.active_uavs();
  KktSolveResult out;

  if (active.empty()) {
    out.solution = idle_solution(inst, false);
    out.point = KktPoint::zeros(inst.uav_count(), inst.ch_count());
    out.point.z = out.solution.z;
    out.lma.converged = true;
    out.lma.status = lma::Status::residual_converged;
    return out;
  }

  auto links = links_of(inst, active);
  const double Z = inst.total_rbs;
  std::vector<double> z0(active.size(), inst.z_min);
  double floor_sum = 0.0;
  for (const Link& l : links) z0[l.a] = std::max(z0[l.a], pmax_floor(inst, l.u, l.g));
  for (double z : z0) floor_sum += z;
  if (floor_sum > Z) {
    throw InfeasibleError("pmax needs " + csv_float(floor_sum) + " RBs in total, only " +
                          std::to_string(inst.total_rbs) + " available");
  }
  for (double& z : z0) z += (Z - floor_sum) / static_cast<double>(active.size());
  const ScaledKkt system(inst, active, links, z0);

  KktPoint start;
  if (init) {
    check_point_shape(*init, inst);
    start = *init;
  } else {
    start = KktPoint::zeros(inst.uav_count(), inst.ch_count());
    double nu_max = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const double nu = std::abs(uav_marginal(inst, active[a], z0[a]));
      start.z[active[a]] = z0[a];
      start.lambda_rb_cap[active[a]] = kInitialMultiplier * nu;
      nu_max = std::max(nu_max, nu);
    }
    for (const Link& l : links) {
      start.power(l.u, l.g) = inst.link_power(l.u, l.g, z0[l.a]);
      start.lambda_pmax(l.u, l.g) = kInitialMultiplier * inst.dwell(l.u, l.g);
      start.lambda_rate(l.u, l.g) = inst.dwell(l.u, l.g) * (1.0 + kInitialMultiplier);
    }
    start.lambda_rb_budget = kInitialMultiplier * nu_max;
  }

  auto raw_norm = [&](const lma::Vector& x) {
    double sum = 0.0;
    for (double r : kkt_residuals(system.decode(x), inst)) sum += r * r;
    return std::sqrt(sum);
  };
  auto residual = [&](const lma::Vector& v) { return system.residual(v); };
  auto jacobian = [&](const lma::Vector& v) { return system.jacobian(v); };
  lma::Vector x = system.encode(start);
  int iterations = 0;
  std::vector<double> history;
  double norm = 0.0;
  for (int round = 0; round < kLmaRounds; ++round) {
    out.lma = lma::solve(residual, jacobian, x, config);
    iterations += out.lma.iterations;
    const auto& acc = out.lma.accepted_sq_norms;
    history.insert(history.end(), acc.begin() + (round > 0 && !acc.empty() ? 1 : 0), acc.end());
    x = out.lma.solution;
    if (out.lma.status == lma::Status::non_finite) break;
    const lma::Vector polished = newton_polish(residual, jacobian, x);
    const double polished_norm = residual(polished).norm();
    if (polished_norm < out.lma.residual_norm) {
      x = polished;
      out.lma.residual_norm = polished_norm;
      history.push_back(polished_norm * polished_norm);
    }
    norm = raw_norm(x);
    if (norm <= kKktResidualTol && out.lma.residual_norm <= config.residual_tol) break;
  }
  const bool converged = norm <= kKktResidualTol && out.lma.residual_norm <= config.residual_tol;
  out.lma.iterations = iterations;
  out.lma.accepted_sq_norms = std::move(history);
  out.point = system.decode(x);
  out.point.residuals = kkt_residuals(out.point, inst);
  if (!converged) {
    throw SolverError("KKT solve did not converge (" + lma::to_string(out.lma.status) +
                          ", residual norm " + csv_float(norm) + ")",
                      norm);
  }

  out.solution.z = out.point.z;
  out.solution.power = out.point.power;
  for (const Link& l : links) out.solution.objective += inst.dwell(l.u, l.g) * out.point.power(l.u, l.g);
  return out;
}

// ---------------------------------------------------------------------------
// Reduced solver

RaSolution solve_reduced(const RaInstance& inst) {
  inst.validate();
  const auto active = inst.active_uavs();
  if (active.empty()) return idle_solution(inst, false);

  const double Z = inst.total_rbs;
  std::vector<double> floor(active.size());
  double floor_sum = 0.0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    floor[a] = inst.z_min;
    for (std::size_t g = 0; g < inst.ch_count(); ++g) {
      if (inst.is_link(active[a], g)) floor[a] = std::max(floor[a], pmax_floor(inst, active[a], g));
    }
    floor_sum += floor[a];
  }
  if (floor_sum > Z) {
    throw InfeasibleError("pmax needs " + csv_float(floor_sum) + " RBs in total, only " +
                          std::to_string(inst.total_rbs) + " available");
  }

  // Per-UAV marginal cost terms (dwell * power scale, rate exponent).
  std::vector<std::vector<std::pair<double, double>>> terms(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t g = 0; g < inst.ch_count(); ++g) {
      if (inst.is_link(active[a], g)) {
        terms[a].emplace_back(inst.dwell(active[a], g) * inst.power_scale(active[a], g), inst.rate_exponent(active[a], g));
      }
    }
  }
  auto marginal = [&](std::size_t a, double z) {
    double m = 0.0;
    for (const auto& [k, c] : terms[a]) m += k * rate_cost_dz(c, z);
    return m;
  };
  auto curvature = [&](std::size_t a, double z) {
    double m = 0.0;
    for (const auto& [k, c] : terms[a]) m += k * rate_cost_dz2(c, z);
    return m;
  };

  // Minimizer of cost_u(z) + nu z over [floor, Z]; the marginal cost is increasing in z.
  // Newton on marginal(z) = -nu, falling back to bisection outside the bracket.
  auto best_z = [&](std::size_t a, double nu) {
    if (marginal(a, floor[a]) + nu >= 0.0) return floor[a];
    if (marginal(a, Z) + nu <= 0.0) return Z;
    double lo = floor[a], hi = Z, z = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
      const double f = marginal(a, z) + nu;
      if (f == 0.0) return z;
      (f < 0.0 ? lo : hi) = z;
      double next = z - f / curvature(a, z);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - z) <= 1e-15 * z || next == lo || next == hi) return next;
      z = next;
    }
    return z;
  };
  auto total_at = [&](double nu) {
    double s = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) s += best_z(a, nu);
    return s;
  };

  std::vector<double> z(inst.uav_count(), 0.0);
  if (active.size() == 1) {
    z[active[0]] = Z;
  } else {
    double nu_lo = 0.0, nu_hi = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) nu_hi = std::max(nu_hi, -marginal(a, floor[a]));
    for (int i = 0; i < 400; ++i) {
      const double mid = 0.5 * (nu_lo + nu_hi);
      if (mid == nu_lo || mid == nu_hi || nu_hi - nu_lo <= 1e-15 * nu_hi) break;
      (total_at(mid) > Z ? nu_lo : nu_hi) = mid;
    }
    for (std::size_t a = 0; a < active.size(); ++a) z[active[a]] = best_z(a, nu_hi);
  }
  return evaluate_allocation(inst, z);
}

// ---------------------------------------------------------------------------
// Integer allocations

RaSolution round_rbs(const RaSolution& continuous, const RaInstance& inst) {
  inst.validate();
  if (continuous.z.size() != inst.uav_count()) throw ParameterError("RB vector length differs from the UAV count");
  const auto active = inst.active_uavs();
  if (active.empty()) return idle_solution(inst, true);

  std::vector<double> z(inst.uav_count(), 0.0);
  int used = 0;
  for (std::size_t u : active) {
    z[u] = std::max(1.0, std::floor(continuous.z[u] + 1e-9));
    used += static_cast<int>(z[u]);
  }
  // The 1-RB minimum can overshoot Z when several continuous z are below 1; take
  // RBs back where the cost rises least, keeping every UAV within pmax.
  for (; used > inst.total_rbs; --used) {
    std::size_t pick = active.front();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t u : active) {
      if (z[u] < 2.0) continue;
      const double rise = uav_cost(inst, u, z[u] - 1.0) - uav_cost(inst, u, z[u]);
      if (rise < best) {
        best = rise;
        pick = u;
      }
    }
    if (std::isinf(best)) {
      throw InfeasibleError("rounding needs " + std::to_string(used) + " RBs, only " +
                            std::to_string(inst.total_rbs) + " available");
    }
    z[pick] -= 1.0;
  }
  for (int left = inst.total_rbs - used; left > 0; --left) {
    std::size_t pick = active.front();
    double best = -1.0;
    for (std::size_t u : active) {
      const double now = uav_cost(inst, u, z[u]);
      const double drop = std::isinf(now) ? std::numeric_limits<double>::infinity() : now - uav_cost(inst, u, z[u] + 1.0);
      if (drop > best) {
        best = drop;
        pick = u;
      }
    }
    z[pick] += 1.0;
  }
  return evaluate_allocation(inst, z);
}

RaSolution brute_force(const RaInstance& inst) {
  inst.validate();
  if (inst.total_rbs > 16 || inst.uav_count() > 4) {
    throw ParameterError("brute force is limited to Z <= 16 and at most 4 UAVs");
  }
  const auto active = inst.active_uavs();
  if (active.empty()) return idle_solution(inst, true);

  std::vector<double> cost_table(active.size() * (static_cast<std::size_t>(inst.total_rbs) + 1));
  auto cost = [&](std::size_t a, int z) -> double& { return cost_table[a * (inst.total_rbs + 1) + z]; };
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (int z = 1; z <= inst.total_rbs; ++z) cost(a, z) = uav_cost(inst, active[a], z);
  }

  std::vector<int> current(active.size(), 0), best_z;
  double best = std::numeric_limits<double>::infinity();
  auto recurse = [&](auto&& self, std::size_t a, int left, double acc) -> void {
    if (a == active.size()) {
      if (acc < best) {
        best = acc;
        best_z = current;
      }
      return;
    }
    const int reserve = static_cast<int>(active.size() - a - 1);
    for (int z = 1; z <= left - reserve; ++z) {
      current[a] = z;
      self(self, a + 1, left - z, acc + cost(a, z));
    }
  };
  recurse(recurse, 0, inst.total_rbs, 0.0);
  if (best_z.empty() || std::isinf(best)) throw InfeasibleError("no integer RB split meets pmax");

  std::vector<double> z(inst.uav_count(), 0.0);
  for (std::size_t a = 0; a < active.size(); ++a) z[active[a]] = best_z[a];
  return evaluate_allocation(inst, z);
}

void write_solution_csv(std::ostream& os, const RaSolution& sol, const RaInstance& inst,
                        std::span<const int> uav_ids, std::span<const int> ch_ids) {
  os << "uav_id,rbs\n";
  for (std::size_t u = 0; u < inst.uav_count(); ++u) os << uav_ids[u] << ',' << csv_float(sol.z[u]) << '\n';
  os << "\nch_id,uav_id,power_w\n";
  for (std::size_t g = 0; g < inst.ch_count(); ++g) {
    for (std::size_t u = 0; u < inst.uav_count(); ++u) {
      if (inst.is_link(u, g)) os << ch_ids[g] << ',' << uav_ids[u] << ',' << csv_float(sol.power(u, g)) << '\n';
    }
  }
  os << "\nobjective_w=" << csv_float(sol.objective) << '\n';
}

}  // namespace uavplan
