#include "grouptrack/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace grouptrack::config {
namespace {

using harness::SweepSpec;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view text) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw std::invalid_argument("expected a number, got '" + std::string(text) + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw std::invalid_argument("value must be finite");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

Disc parse_disc(std::string_view text) {
  double v[3];
  for (int i = 0; i < 3; ++i) {
    const auto comma = text.find(',');
    if ((i < 2) != (comma != std::string_view::npos))
      throw std::invalid_argument("expected x,y,radius");
    v[i] = parse_number<double>(text.substr(0, comma));
    if (i < 2) text.remove_prefix(comma + 1);
  }
  return Disc{{v[0], v[1]}, v[2]};
}

std::string format_disc(const Disc& d) {
  return format_double(d.center.x()) + "," + format_double(d.center.y()) + "," +
         format_double(d.radius);
}

template <typename T, typename Access>
ConfigKey number_key(std::string name, std::string description, Access access) {
  return ConfigKey{
      std::move(name), std::move(description),
      [access](SweepSpec& s, std::string_view v) { access(s) = parse_number<T>(v); },
      [access](const SweepSpec& s) {
        if constexpr (std::is_floating_point_v<T>) {
          return format_double(access(s));
        } else {
          return std::to_string(access(s));
        }
      }};
}

template <typename Access>
ConfigKey disc_key(std::string name, std::string description, Access access) {
  return ConfigKey{std::move(name), std::move(description),
                   [access](SweepSpec& s, std::string_view v) { access(s) = parse_disc(v); },
                   [access](const SweepSpec& s) {
                     return format_disc(access(s));
                   }};
}

template <typename Access>
ConfigKey override_key(std::string name, std::string description, Access access) {
  return ConfigKey{std::move(name), std::move(description),
                   [access](SweepSpec& s, std::string_view v) {
                     const double x = parse_number<double>(v);
                     if (x < 0.0) throw std::invalid_argument("must be non-negative");
                     access(s) = x;
                   },
                   [access](const SweepSpec& s) -> std::string {
                     const auto& v = access(s);
                     return v ? format_double(*v) : "scenario preset";
                   }};
}

Disc& living_area(SweepSpec& s, std::size_t i) {
  auto& areas = s.base.world.living_areas;
  if (areas.size() <= i) areas.resize(i + 1);
  return areas[i];
}

const Disc& living_area(const SweepSpec& s, std::size_t i) { return s.base.world.living_areas.at(i); }

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k;
  // world
  k.push_back(number_key<double>("world.area_side", "side of the square world (m)",
                                 [](auto& s) -> auto& { return s.base.world.area_side; }));
  k.push_back(number_key<std::uint32_t>("world.n_nodes", "number of tracked animals",
                                        [](auto& s) -> auto& { return s.base.world.n_nodes; }));
  k.push_back(number_key<std::int64_t>("world.duration", "simulated time (s)",
                                       [](auto& s) -> auto& { return s.base.world.duration; }));
  k.push_back(disc_key("world.living_area_1", "first living area as x,y,radius (m)",
                       [](auto& s) -> auto& { return living_area(s, 0); }));
  k.push_back(disc_key("world.living_area_2", "second living area as x,y,radius (m)",
                       [](auto& s) -> auto& { return living_area(s, 1); }));
  k.push_back(disc_key("world.foraging_area", "foraging area as x,y,radius (m)",
                       [](auto& s) -> auto& { return s.base.world.foraging_area; }));
  k.push_back(number_key<double>("world.max_speed", "speed cap (m/s)",
                                 [](auto& s) -> auto& { return s.base.world.max_speed; }));
  k.push_back(number_key<double>("world.target_spacing", "typical spacing inside a flock (m)",
                                 [](auto& s) -> auto& { return s.base.world.target_spacing; }));
  k.push_back(number_key<double>("world.start_radius",
                                 "radius of the initial packing disc, 0 = from target_spacing (m)",
                                 [](auto& s) -> auto& { return s.base.world.start_radius; }));
  // flock
  k.push_back(number_key<double>("flock.neighbor_radius", "flocking neighbourhood radius (m)",
                                 [](auto& s) -> auto& { return s.base.flock.neighbor_radius; }));
  k.push_back(number_key<double>("flock.w_separation", "separation weight",
                                 [](auto& s) -> auto& { return s.base.flock.w_separation; }));
  k.push_back(number_key<double>("flock.w_alignment", "alignment weight",
                                 [](auto& s) -> auto& { return s.base.flock.w_alignment; }));
  k.push_back(number_key<double>("flock.w_cohesion", "cohesion weight",
                                 [](auto& s) -> auto& { return s.base.flock.w_cohesion; }));
  k.push_back(number_key<double>("flock.w_goal", "goal-seeking weight",
                                 [](auto& s) -> auto& { return s.base.flock.w_goal; }));
  k.push_back(number_key<double>("flock.separation_distance", "separation kicks in below this (m)",
                                 [](auto& s) -> auto& {
                                   return s.base.flock.separation_distance;
                                 }));
  k.push_back(number_key<double>("flock.rw_step_sigma",
                                 "random-walk step std inside the foraging area (m)",
                                 [](auto& s) -> auto& { return s.base.flock.rw_step_sigma; }));
  k.push_back(number_key<double>("flock.wander_sigma",
                                 "random acceleration std on journeying nodes (m/s^2)",
                                 [](auto& s) -> auto& { return s.base.flock.wander_sigma; }));
  // channel
  k.push_back(number_key<double>("channel.d0", "path-loss reference distance (m)",
                                 [](auto& s) -> auto& { return s.base.path_loss.d0; }));
  k.push_back(number_key<double>("channel.p0", "received power at d0 (dBm)",
                                 [](auto& s) -> auto& { return s.base.path_loss.p0; }));
  k.push_back(number_key<double>("channel.eta", "path-loss exponent",
                                 [](auto& s) -> auto& { return s.base.path_loss.eta; }));
  // energy
  k.push_back(number_key<double>("energy.total_period", "energy accounting period (s)",
                                 [](auto& s) -> auto& { return s.base.energy.total_period; }));
  k.push_back(number_key<double>("energy.gps_power", "GPS receiver power (W)",
                                 [](auto& s) -> auto& { return s.base.energy.gps_power; }));
  k.push_back(number_key<double>("energy.gps_fix_time", "time per GPS fix (s)",
                                 [](auto& s) -> auto& { return s.base.energy.gps_fix_time; }));
  k.push_back(number_key<double>("energy.mcu_power", "microcontroller power (W)",
                                 [](auto& s) -> auto& { return s.base.energy.mcu_power; }));
  k.push_back(number_key<double>("energy.radio_power", "radio power (W)",
                                 [](auto& s) -> auto& { return s.base.energy.radio_power; }));
  k.push_back(number_key<double>("energy.packet_time", "airtime per packet (s)",
                                 [](auto& s) -> auto& { return s.base.energy.packet_time; }));
  k.push_back(number_key<double>("energy.packet_size", "packet size (bits)",
                                 [](auto& s) -> auto& { return s.base.energy.packet_size; }));
  k.push_back(number_key<double>("energy.bit_rate", "radio bit rate (bit/s)",
                                 [](auto& s) -> auto& { return s.base.energy.bit_rate; }));
  k.push_back(number_key<double>("energy.standby_power", "standby power (W)",
                                 [](auto& s) -> auto& { return s.base.energy.standby_power; }));
  k.push_back(number_key<double>("energy.misc_energy", "flat per-node energy for everything else (J)",
                                 [](auto& s) -> auto& { return s.base.energy.misc_energy; }));
  k.push_back(number_key<double>("energy.misc_energy_scale", "multiplier on misc_energy",
                                 [](auto& s) -> auto& {
                                   return s.base.energy.misc_energy_scale;
                                 }));
  k.push_back(number_key<double>("energy.battery_capacity", "battery capacity (J)",
                                 [](auto& s) -> auto& {
                                   return s.base.energy.battery_capacity;
                                 }));
  // tracker
  k.push_back(number_key<std::size_t>("tracker.cluster_threshold",
                                      "census above which clusters multilaterate",
                                      [](auto& s) -> auto& {
                                        return s.base.tracker.cluster_threshold;
                                      }));
  k.push_back(number_key<std::size_t>("tracker.n_anchors", "anchors per multilateration round",
                                      [](auto& s) -> auto& { return s.base.tracker.n_anchors; }));
  k.push_back(number_key<double>("tracker.comm_range", "radio range (m)",
                                 [](auto& s) -> auto& { return s.base.tracker.comm_range; }));
  // scenario
  k.push_back(override_key("scenario.sigma_p", "RSSI noise std (dB), overrides the preset",
                           [](auto& s) -> auto& { return s.sigma_p_override; }));
  k.push_back(override_key("scenario.sigma_a_low",
                           "GPS noise std of high-performance nodes (m), overrides the preset",
                           [](auto& s) -> auto& { return s.sigma_a_low_override; }));
  k.push_back(override_key("scenario.sigma_a_high",
                           "GPS noise std of the other nodes (m), overrides the preset",
                           [](auto& s) -> auto& { return s.sigma_a_high_override; }));
  k.push_back(number_key<double>("scenario.high_perf_fraction",
                                 "fraction of nodes with the better GPS",
                                 [](auto& s) -> auto& { return s.base.high_perf_fraction; }));
  return k;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

harness::SweepSpec default_spec() {
  SweepSpec spec;
  spec.base = harness::ScenarioConfig::preset(harness::ScenarioId::kA);
  return spec;
}

void apply_config_text(harness::SweepSpec& spec, std::string_view text, std::string_view source) {
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;

    const auto where = [&] { return std::string(source) + ":" + std::to_string(line_no); };
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(where() + ": expected 'key = value', got '" + std::string(line) + "'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));

    const auto& keys = config_keys();
    const auto it = std::find_if(keys.begin(), keys.end(),
                                 [&](const ConfigKey& k) { return k.name == key; });
    if (it == keys.end())
      throw ConfigError(where() + ": unknown key '" + std::string(key) + "' (see --help)");
    if (!seen.insert(std::string(key)).second)
      throw ConfigError(where() + ": key '" + std::string(key) + "' given twice");
    try {
      it->set(spec, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where() + ": key '" + std::string(key) + "': " + e.what());
    }
  }
}

void apply_config_file(harness::SweepSpec& spec, const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  apply_config_text(spec, ss.str(), path.string());
}

std::string describe_keys(const harness::SweepSpec& defaults) {
  std::size_t width = 0;
  for (const auto& k : config_keys()) width = std::max(width, k.name.size());
  std::string out;
  for (const auto& k : config_keys()) {
    out += "  " + k.name + std::string(width - k.name.size() + 2, ' ') + "(default: " +
           k.get(defaults) + ")  " + k.description + "\n";
  }
  return out;
}

}  // namespace grouptrack::config
