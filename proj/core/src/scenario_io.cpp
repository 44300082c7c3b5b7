#include "uavplan/scenario_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "uavplan/errors.hpp"

namespace uavplan {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, std::size_t line) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(line, "expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

int parse_int(std::string_view text, std::size_t line) {
  text = trim(text);
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(line, "expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view row) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = row.find(',', start);
    out.push_back(trim(row.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

enum class Section { scalars, clusters, uavs };

constexpr std::array kRequiredKeys = {
    "area_m",  "carrier_hz", "rb_bandwidth_hz", "noise_psd_w_per_hz", "pathloss_exponent",
    "ber_target", "packet_bits", "p_tx", "pmax_w", "total_rbs"};

std::string round_trip(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ClusterScenario load_scenario(std::string_view text) {
  ClusterScenario s;
  std::map<std::string, std::pair<double, std::size_t>, std::less<>> scalars;
  Section section = Section::scalars;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line == "[clusters]") {
        section = Section::clusters;
      } else if (line == "[uavs]") {
        section = Section::uavs;
      } else {
        throw ParseError(line_no, "unknown section " + std::string(line));
      }
      continue;
    }

    switch (section) {
      case Section::scalars: {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        if (scalars.contains(key)) throw ParseError(line_no, "duplicate key " + key);
        scalars[key] = {parse_double(line.substr(eq + 1), line_no), line_no};
        break;
      }
      case Section::clusters: {
        const auto f = split_csv(line);
        if (f.size() != 4) throw ParseError(line_no, "cluster row needs id,x_m,y_m,members");
        Cluster c;
        c.id = parse_int(f[0], line_no);
        c.position = {parse_double(f[1], line_no), parse_double(f[2], line_no)};
        c.members = parse_int(f[3], line_no);
        if (c.members < 1) throw ParseError(line_no, "members must be >= 1");
        if (!s.clusters.empty() && s.clusters.back().id >= c.id) {
          throw ParseError(line_no, "cluster ids must be strictly ascending");
        }
        s.clusters.push_back(c);
        break;
      }
      case Section::uavs: {
        const auto f = split_csv(line);
        if (f.size() != 2) throw ParseError(line_no, "uav row needs id,altitude_m");
        s.fleet.ids.push_back(parse_int(f[0], line_no));
        const double h = parse_double(f[1], line_no);
        if (!(h > 0.0)) throw ParseError(line_no, "altitude must be positive");
        s.fleet.altitudes.push_back(h);
        break;
      }
    }
  }

  for (const auto& [key, value] : scalars) {
    bool known = key == "slot_seconds";
    for (const char* k : kRequiredKeys) known = known || key == k;
    if (!known) throw ParseError(value.second, "unknown key " + key);
  }
  for (const char* key : kRequiredKeys) {
    if (!scalars.contains(key)) throw ParseError(0, std::string("missing key ") + key);
  }
  auto take = [&](const char* key) { return scalars.at(key).first; };
  s.area_side = take("area_m");
  s.carrier_hz = take("carrier_hz");
  s.rb_bandwidth_hz = take("rb_bandwidth_hz");
  s.noise_psd = take("noise_psd_w_per_hz");
  s.pathloss_exp = take("pathloss_exponent");
  s.ber_target = take("ber_target");
  s.packet_bits = take("packet_bits");
  s.p_tx = take("p_tx");
  s.pmax_w = take("pmax_w");
  const auto [rbs, rbs_line] = scalars.at("total_rbs");
  if (rbs != static_cast<double>(static_cast<int>(rbs))) throw ParseError(rbs_line, "total_rbs must be an integer");
  s.total_rbs = static_cast<int>(rbs);
  if (auto it = scalars.find("slot_seconds"); it != scalars.end()) s.slot_seconds = it->second.first;


  try {
    s.validate();
  } catch (const ParameterError& e) {
    // Point at the scalar line when the failing field is one we know.
    for (const auto& [key, value] : scalars) {
      if (std::string_view(e.what()).starts_with(key)) throw ParseError(value.second, e.what());
    }
    throw ParseError(0, e.what());
  }
  return s;
}

std::string save_scenario(const ClusterScenario& s) {
  std::ostringstream os;
  os << "# uavplan scenario\n";
  os << "area_m = " << round_trip(s.area_side) << '\n';
  os << "carrier_hz = " << round_trip(s.carrier_hz) << '\n';
  os << "rb_bandwidth_hz = " << round_trip(s.rb_bandwidth_hz) << '\n';
  os << "noise_psd_w_per_hz = " << round_trip(s.noise_psd) << '\n';
  os << "pathloss_exponent = " << round_trip(s.pathloss_exp) << '\n';
  os << "ber_target = " << round_trip(s.ber_target) << '\n';
  os << "packet_bits = " << round_trip(s.packet_bits) << '\n';
  os << "p_tx = " << round_trip(s.p_tx) << '\n';
  os << "pmax_w = " << round_trip(s.pmax_w) << '\n';
  os << "total_rbs = " << s.total_rbs << '\n';
  os << "slot_seconds = " << round_trip(s.slot_seconds) << '\n';
  os << "[clusters]\n# id,x_m,y_m,members\n";
  for (const Cluster& c : s.clusters) {
    os << c.id << ',' << round_trip(c.position.x) << ',' << round_trip(c.position.y) << ',' << c.members << '\n';
  }
  os << "[uavs]\n# id,altitude_m\n";
  for (std::size_t u = 0; u < s.fleet.count(); ++u) {
    os << s.fleet.ids[u] << ',' << round_trip(s.fleet.altitudes[u]) << '\n';
  }
  return os.str();
}

ClusterScenario read_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

void write_scenario_file(const std::filesystem::path& path, const ClusterScenario& scenario) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write scenario file " + path.string());
  out << save_scenario(scenario);
}

}  // namespace uavplan
