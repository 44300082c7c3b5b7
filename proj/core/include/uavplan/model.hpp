#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace uavplan {

/// Speed of light in m/s, used to derive the carrier wavelength.
inline constexpr double kSpeedOfLight = 299792458.0;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

/// One M2M cluster, represented by its cluster head (CH).
struct Cluster {
  int id = 0;
  Point2 position;
  int members = 1;  ///< cluster members feeding the CH, excluding the CH itself

  bool operator==(const Cluster&) const = default;
};

/// Available UAVs. Only the altitude matters for the link model since a UAV
/// hovers directly above the CH it serves.
struct UavFleet {
  std::vector<int> ids;
  std::vector<double> altitudes;

  std::size_t count() const noexcept { return altitudes.size(); }
  bool operator==(const UavFleet&) const = default;
};

struct ClusterScenario {
  double area_side = 500.0;          ///< m, side of the square deployment area
  std::vector<Cluster> clusters;     ///< ascending ids
  double p_tx = 0.1;                 ///< per-member transmission probability per slot
  double packet_bits = 100.0;        ///< bits per packet
  double rb_bandwidth_hz = 15e3;     ///< bandwidth of one resource block
  int total_rbs = 6;                 ///< RBs shared by all UAVs
  double noise_psd = 1e-20;          ///< W/Hz (-170 dBm/Hz)
  double carrier_hz = 2e9;
  double pathloss_exp = 2.5;
  double ber_target = 1e-7;
  double pmax_w = 1.0;
  double slot_seconds = 1.0;
  UavFleet fleet;

  double wavelength() const noexcept { return kSpeedOfLight / carrier_hz; }

  /// Throws ParameterError if any field violates its documented range.
  void validate() const;

  bool operator==(const ClusterScenario&) const = default;
};

/// Radio and traffic parameters used when generating scenarios. Defaults are the
/// reference simulation setup (500 m area, 2 GHz, 15 kHz RBs, 100-bit packets).
struct RadioParams {
  double area_side = 500.0;
  double p_tx = 0.1;
  double packet_bits = 100.0;
  double rb_bandwidth_hz = 15e3;
  int total_rbs = 6;
  double noise_psd = 1e-20;
  double carrier_hz = 2e9;
  double pathloss_exp = 2.5;
  double ber_target = 1e-7;
  double pmax_w = 1.0;
  double slot_seconds = 1.0;
  double altitude_min = 400.0;
  double altitude_max = 600.0;
  /// Number of UAVs in the generated fleet; 0 sizes it to the total member count,
  /// which covers any transmission probability at unit service rate.
  int fleet_size = 0;
};

/// Dense U x G matrix indexed (uav, ch). Used for dwell fractions, link gains and powers.
class UavChMatrix {
 public:
  UavChMatrix() = default;
  UavChMatrix(std::size_t uavs, std::size_t chs, double fill = 0.0)
      : uavs_(uavs), chs_(chs), values_(uavs * chs, fill) {}

  std::size_t uav_count() const noexcept { return uavs_; }
  std::size_t ch_count() const noexcept { return chs_; }

  double& operator()(std::size_t u, std::size_t g) { return values_[u * chs_ + g]; }
  double operator()(std::size_t u, std::size_t g) const { return values_[u * chs_ + g]; }

  double row_sum(std::size_t u) const;
  double col_sum(std::size_t g) const;

  bool operator==(const UavChMatrix&) const = default;

 private:
  std::size_t uavs_ = 0;
  std::size_t chs_ = 0;
  std::vector<double> values_;
};

/// Fractions d_u^g of a slot that UAV u dwells over CH g.
using DwellMatrix = UavChMatrix;

/// Checks nonnegative entries and a unit time budget per UAV, within `tol`.
bool is_valid_dwell(const DwellMatrix& dwell, double tol = 1e-9);

/// Uniform CH positions over the square and uniform integer member counts in
/// [member_min, member_max]; UAV altitudes uniform in [altitude_min, altitude_max].
/// Deterministic for a fixed seed.
ClusterScenario generate_scenario(std::uint64_t seed, int num_clusters, int member_min, int member_max,
                                  const RadioParams& radio = {});

}  // namespace uavplan
