#include "uavplan/channel.hpp"

#include <cmath>
#include <numbers>

#include "uavplan/errors.hpp"

namespace uavplan {

double snr_gap(double ber) {
  if (!(ber > 0.0)) throw ParameterError("ber must be positive");
  if (!(ber < 0.2)) throw ParameterError("snr_gap needs ber < 0.2 so that ln(5 ber) < 0");
  return -1.5 / std::log(5.0 * ber);
}

double path_gain(double distance_m, double wavelength_m, double nu) {
  if (!(distance_m > 0.0) || !(wavelength_m > 0.0)) throw ParameterError("distance and wavelength must be positive");
  if (!(nu >= 2.0)) throw ParameterError("path loss exponent must be >= 2");
  return std::pow(4.0 * std::numbers::pi * distance_m / wavelength_m, -nu);
}

LinkGain make_link(double distance_m, double wavelength_m, double nu) {
  return {path_gain(distance_m, wavelength_m, nu), distance_m};
}

namespace {

void check_link(const LinkParams& link) {
  if (!(link.packet_bits > 0.0 && link.rb_bandwidth_hz > 0.0 && link.beta > 0.0 && link.gain > 0.0 &&
        link.noise_psd > 0.0 && link.slot_seconds > 0.0)) {
    throw ParameterError("link parameters must be positive");
  }
}

}  // namespace

double required_power(const LinkParams& link, double z, double dwell) {
  check_link(link);
  if (!(z > 0.0)) throw ParameterError("RB count must be positive");
  if (!(dwell >= 0.0)) throw ParameterError("dwell must be nonnegative");
  if (dwell == 0.0) throw InfeasibleError("zero dwell time needs infinite power");
  const double c = link.packet_bits / (link.rb_bandwidth_hz * dwell * link.slot_seconds);
  return link.rb_bandwidth_hz * link.noise_psd / (link.beta * link.gain) * rate_cost(c, z);
}

double achievable_bits(const LinkParams& link, double power, double z, double dwell) {
  check_link(link);
  if (!(power >= 0.0) || !(z > 0.0) || !(dwell >= 0.0)) throw ParameterError("power, z, dwell out of range");
  const double snr = power * link.beta * link.gain / (z * link.rb_bandwidth_hz * link.noise_psd);
  return z * link.rb_bandwidth_hz * dwell * link.slot_seconds * std::log1p(snr) / std::numbers::ln2;
}

double rate_cost(double c, double z) {
  return std::expm1(c / z * std::numbers::ln2) * z;
}

double rate_cost_dz(double c, double z) {
  const double a = c * std::numbers::ln2 / z;
  // 2^(c/z) (1 - a) - 1, written so small a keeps its precision.
  return std::expm1(a) - std::exp(a) * a;
}

double rate_cost_dz2(double c, double z) {
  const double a = c * std::numbers::ln2 / z;
  return std::exp(a) * a * a / z;
}

}  // namespace uavplan
