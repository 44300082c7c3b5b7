#include "doctest.h"

#include <filesystem>
#include <string>

#include "uavplan/errors.hpp"
#include "uavplan/model.hpp"
#include "uavplan/scenario_io.hpp"

using namespace uavplan;

namespace {

const char* kMinimal = R"(# two clusters, one UAV
area_m = 500
carrier_hz = 2e9
rb_bandwidth_hz = 15000
noise_psd_w_per_hz = 1e-20
pathloss_exponent = 2.5
ber_target = 1e-7
packet_bits = 100
p_tx = 0.1
pmax_w = 1
total_rbs = 6

[clusters]
0,100,200,3
4,250.5,1e2,7
[uavs]
0,450
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  text.replace(text.find(from), from.size(), to);
  return text;
}

std::size_t parse_error_line(const std::string& text) {
  try {
    load_scenario(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 9999;
}

}  // namespace

TEST_CASE("load_scenario reads scalars and sections") {
  const auto s = load_scenario(kMinimal);
  CHECK(s.area_side == 500.0);
  CHECK(s.carrier_hz == 2e9);
  CHECK(s.total_rbs == 6);
  CHECK(s.slot_seconds == 1.0);
  REQUIRE(s.clusters.size() == 2);
  CHECK(s.clusters[1].id == 4);
  CHECK(s.clusters[1].position.x == 250.5);
  CHECK(s.clusters[1].position.y == 100.0);
  CHECK(s.clusters[1].members == 7);
  REQUIRE(s.fleet.count() == 1);
  CHECK(s.fleet.altitudes[0] == 450.0);
}

TEST_CASE("save/load round trip is exact") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    RadioParams radio;
    radio.p_tx = 0.1 + 0.03 * static_cast<double>(seed);
    const auto s = generate_scenario(seed, 1 + static_cast<int>(seed % 7) * 5, 1, 10, radio);
    CHECK(load_scenario(save_scenario(s)) == s);
  }
}

TEST_CASE("file round trip") {
  const auto s = generate_scenario(4, 6, 1, 10);
  const auto path = std::filesystem::temp_directory_path() / "uavplan_test_scenario.txt";
  write_scenario_file(path, s);
  CHECK(read_scenario_file(path) == s);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_scenario_file(path), ParameterError);
}

TEST_CASE("missing required key") {
  const std::string text = replace(kMinimal, "p_tx = 0.1\n", "");
  CHECK_THROWS_WITH_AS(load_scenario(text), "missing key p_tx", ParseError);
}

TEST_CASE("errors name the offending line") {
  CHECK(parse_error_line(replace(kMinimal, "pmax_w = 1", "pmax_w = one")) == 10);
  CHECK(parse_error_line(replace(kMinimal, "pmax_w = 1", "pmax_w 1")) == 10);
  CHECK(parse_error_line(replace(kMinimal, "pmax_w = 1", "colour = 1")) == 10);
  CHECK(parse_error_line(replace(kMinimal, "pmax_w = 1", "p_tx = 1")) == 10);
  CHECK(parse_error_line(replace(kMinimal, "0,100,200,3", "0,100,200")) == 14);
  CHECK(parse_error_line(replace(kMinimal, "4,250.5,1e2,7", "0,250.5,1e2,7")) == 15);
  CHECK(parse_error_line(replace(kMinimal, "0,450", "0,-5")) == 17);
  CHECK(parse_error_line(replace(kMinimal, "[uavs]", "[drones]")) == 16);
  CHECK(parse_error_line(replace(kMinimal, "total_rbs = 6", "total_rbs = 6.5")) == 11);
}

TEST_CASE("out-of-range values are parse errors on their line") {
  CHECK(parse_error_line(replace(kMinimal, "p_tx = 0.1", "p_tx = 1.5")) == 9);
  CHECK(parse_error_line(replace(kMinimal, "0,100,200,3", "0,100,200,0")) == 14);
}
