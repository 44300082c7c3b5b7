#include "uavplan/model.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "uavplan/errors.hpp"
#include "uavplan/rng.hpp"

namespace uavplan {

double UavChMatrix::row_sum(std::size_t u) const {
  double s = 0.0;
  for (std::size_t g = 0; g < chs_; ++g) s += (*this)(u, g);
  return s;
}

double UavChMatrix::col_sum(std::size_t g) const {
  double s = 0.0;
  for (std::size_t u = 0; u < uavs_; ++u) s += (*this)(u, g);
  return s;
}

bool is_valid_dwell(const DwellMatrix& dwell, double tol) {
  for (std::size_t u = 0; u < dwell.uav_count(); ++u) {
    for (std::size_t g = 0; g < dwell.ch_count(); ++g) {
      if (!(dwell(u, g) >= -tol)) return false;
    }
    if (dwell.row_sum(u) > 1.0 + tol) return false;
  }
  return true;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

}  // namespace

void ClusterScenario::validate() const {
  require(area_side > 0.0, "area_m must be positive");
  require(p_tx >= 0.0 && p_tx <= 1.0, "p_tx must be in [0, 1]");
  require(packet_bits > 0.0, "packet_bits must be positive");
  require(rb_bandwidth_hz > 0.0, "rb_bandwidth_hz must be positive");
  require(total_rbs >= 1, "total_rbs must be at least 1");
  require(noise_psd > 0.0, "noise_psd_w_per_hz must be positive");
  require(carrier_hz > 0.0, "carrier_hz must be positive");
  require(pathloss_exp >= 2.0, "pathloss_exponent must be >= 2");
  require(ber_target > 0.0 && ber_target < 1.0, "ber_target must be in (0, 1)");
  require(pmax_w > 0.0, "pmax_w must be positive");
  require(slot_seconds > 0.0, "slot_seconds must be positive");
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const Cluster& c = clusters[i];
    const std::string tag = "cluster " + std::to_string(c.id);
    require(c.members >= 1, tag + ": members must be >= 1");
    require(c.position.x >= 0.0 && c.position.x <= area_side && c.position.y >= 0.0 &&
                c.position.y <= area_side,
            tag + ": position outside the area");
    require(i == 0 || clusters[i - 1].id < c.id, tag + ": cluster ids must be strictly ascending");
  }
  require(fleet.ids.size() == fleet.altitudes.size(), "fleet ids and altitudes differ in length");
  for (double h : fleet.altitudes) require(h > 0.0, "UAV altitude must be positive");
}

ClusterScenario generate_scenario(std::uint64_t seed, int num_clusters, int member_min, int member_max,
                                  const RadioParams& radio) {
  require(num_clusters >= 1, "num_clusters must be >= 1");
  require(member_min >= 1 && member_min <= member_max, "member range must satisfy 1 <= min <= max");
  require(radio.altitude_min > 0.0 && radio.altitude_min <= radio.altitude_max, "invalid altitude range");
  require(radio.fleet_size >= 0, "fleet_size must be >= 0");

  ClusterScenario s;
  s.area_side = radio.area_side;
  s.p_tx = radio.p_tx;
  s.packet_bits = radio.packet_bits;
  s.rb_bandwidth_hz = radio.rb_bandwidth_hz;
  s.total_rbs = radio.total_rbs;
  s.noise_psd = radio.noise_psd;
  s.carrier_hz = radio.carrier_hz;
  s.pathloss_exp = radio.pathloss_exp;
  s.ber_target = radio.ber_target;
  s.pmax_w = radio.pmax_w;
  s.slot_seconds = radio.slot_seconds;

  std::mt19937_64 rng(mix_seed(seed, {0}));
  std::uniform_real_distribution<double> coord(0.0, radio.area_side);
  std::uniform_int_distribution<int> members(member_min, member_max);
  s.clusters.reserve(static_cast<std::size_t>(num_clusters));
  for (int g = 0; g < num_clusters; ++g) {
    Cluster c;
    c.id = g;
    c.position.x = coord(rng);
    c.position.y = coord(rng);
    c.members = members(rng);
    s.clusters.push_back(c);
  }

  int fleet = radio.fleet_size;
  if (fleet == 0) {
    fleet = std::accumulate(s.clusters.begin(), s.clusters.end(), 0,
                            [](int acc, const Cluster& c) { return acc + c.members; });
  }
  std::mt19937_64 alt_rng(mix_seed(seed, {1}));
  std::uniform_real_distribution<double> altitude(radio.altitude_min, radio.altitude_max);
  for (int u = 0; u < fleet; ++u) {
    s.fleet.ids.push_back(u);
    s.fleet.altitudes.push_back(radio.altitude_min == radio.altitude_max ? radio.altitude_min
                                                                         : altitude(alt_rng));
  }
  s.validate();
  return s;
}

}  // namespace uavplan
