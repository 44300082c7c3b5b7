#pragma once

namespace uavplan {

/// SNR gap of M-QAM at target bit error rate: -1.5 / ln(5 * ber). Requires 0 < ber < 0.2.
double snr_gap(double ber);

/// Free-space style gain (4 pi d / lambda)^-nu.
double path_gain(double distance_m, double wavelength_m, double nu);

struct LinkGain {
  double gain = 0.0;
  double distance = 0.0;
};

LinkGain make_link(double distance_m, double wavelength_m, double nu);

/// Per-link constants of the rate constraint. The packet must fit in
/// z * rb_bandwidth * dwell * slot_seconds * log2(1 + P beta H / (z B N0)) bits.
struct LinkParams {
  double packet_bits = 100.0;
  double rb_bandwidth_hz = 15e3;
  double beta = 1.0;
  double gain = 1.0;
  double noise_psd = 1e-20;
  double slot_seconds = 1.0;
};

/// Minimum total power (split equally over z RBs) that carries one packet during
/// `dwell` of a slot. Throws InfeasibleError when dwell is 0.
double required_power(const LinkParams& link, double z, double dwell);

/// Bits deliverable at `power`; inverse of required_power.
double achievable_bits(const LinkParams& link, double power, double z, double dwell);

// Rate cost g_c(z) = (2^(c/z) - 1) z and its z-derivatives. required_power equals
// B N0 / (beta H) * g_c(z) with c = bits / (B * dwell * slot_seconds). g_c is
// convex and decreasing in z for c > 0.
double rate_cost(double c, double z);
double rate_cost_dz(double c, double z);
double rate_cost_dz2(double c, double z);

}  // namespace uavplan
