#include "cteskf/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>

namespace cteskf::config {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double toDouble(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

long long toInteger(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

// Boost's INI reader keeps trailing "; note" text in the value.
std::string stripComment(const std::string& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if ((v[i] == ';' || v[i] == '#') && (i == 0 || v[i - 1] == ' ' || v[i - 1] == '\t')) return trim(v.substr(0, i));
  }
  return v;
}

std::vector<std::string> splitList(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string item = trim(text.substr(pos, end - pos));
    if (!item.empty()) out.push_back(item);
    pos = end + 1;
  }
  return out;
}

constexpr double kDeg = std::numbers::pi / 180.0;

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

Setter number(double sim::ScenarioConfig::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) { c.scenario.*field = toDouble(k, v); };
}

Setter trajectoryNumber(double sim::TrajectoryParams::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) {
    c.scenario.trajectory.*field = toDouble(k, v);
  };
}

Setter imuNumber(double sim::ImuSpec::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) { c.scenario.imu.*field = toDouble(k, v); };
}

Setter sweepNumber(double SweepGrid::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) { c.sweep.*field = toDouble(k, v); };
}

Setter errorAxis(int axis) {
  return [axis](RunConfig& c, const std::string& k, const std::string& v) {
    c.scenario.attitude_error_deg[axis] = toDouble(k, v);
  };
}

Setter originAngle(double ins::Geodetic::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) {
    c.scenario.trajectory.origin.*field = toDouble(k, v) * kDeg;
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"scenario.duration", number(&sim::ScenarioConfig::duration)},
      {"scenario.trajectory",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.scenario.trajectory.kind = sim::parseTrajectoryKind(trim(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError("key '" + k + "': " + e.what());
         }
       }},
      {"scenario.speed", trajectoryNumber(&sim::TrajectoryParams::speed)},
      {"scenario.radius", trajectoryNumber(&sim::TrajectoryParams::radius)},
      {"scenario.length", trajectoryNumber(&sim::TrajectoryParams::length)},
      {"scenario.width", trajectoryNumber(&sim::TrajectoryParams::width)},
      {"scenario.latitude", originAngle(&ins::Geodetic::lat)},
      {"scenario.longitude", originAngle(&ins::Geodetic::lon)},
      {"scenario.height",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.scenario.trajectory.origin.height = toDouble(k, v);
       }},
      {"scenario.roll_error", errorAxis(0)},
      {"scenario.pitch_error", errorAxis(1)},
      {"scenario.yaw_error", errorAxis(2)},
      {"scenario.gnss_rate", number(&sim::ScenarioConfig::gnss_rate)},
      {"scenario.gnss_sigma", number(&sim::ScenarioConfig::gnss_sigma)},
      {"scenario.odo_rate", number(&sim::ScenarioConfig::odo_rate)},
      {"scenario.odo_sigma", number(&sim::ScenarioConfig::odo_sigma)},
      {"scenario.vel_sigma", number(&sim::ScenarioConfig::vel_sigma)},
      {"scenario.pos_sigma", number(&sim::ScenarioConfig::pos_sigma)},
      {"scenario.min_attitude_sigma", number(&sim::ScenarioConfig::min_attitude_sigma_deg)},
      {"scenario.settle", number(&sim::ScenarioConfig::settle)},
      {"scenario.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const long long s = toInteger(k, v);
         if (s < 0) throw ConfigError("key '" + k + "': seed must be non-negative");
         c.scenario.seed = static_cast<std::uint64_t>(s);
       }},
      {"imu.arw", imuNumber(&sim::ImuSpec::arw)},
      {"imu.vrw", imuNumber(&sim::ImuSpec::vrw)},
      {"imu.gyro_bias", imuNumber(&sim::ImuSpec::gyro_bias)},
      {"imu.accel_bias", imuNumber(&sim::ImuSpec::accel_bias)},
      {"imu.rate", imuNumber(&sim::ImuSpec::rate)},
      {"filter.variant",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.variants = splitList(v);
         if (c.variants.empty()) throw ConfigError("key '" + k + "': no variant given");
         for (const auto& name : c.variants) {
           try {
             sim::parseVariant(name);
           } catch (const std::invalid_argument& e) {
             throw ConfigError("key '" + k + "': " + e.what());
           }
         }
       }},
      {"filter.injection",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.injection = parseInjectionMode(trim(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError("key '" + k + "': " + e.what());
         }
       }},
      {"sweep.yaw_min", sweepNumber(&SweepGrid::yaw_min)},
      {"sweep.yaw_max", sweepNumber(&SweepGrid::yaw_max)},
      {"sweep.yaw_step", sweepNumber(&SweepGrid::yaw_step)},
      {"sweep.seeds",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.sweep.seeds = static_cast<int>(toInteger(k, v));
       }},
  };
  return table;
}

sim::ImuSpec grade(const std::string& key, const std::string& value, double rate) {
  const std::string g = trim(value);
  sim::ImuSpec s;
  if (g == "tactical") s = sim::ImuSpec::tactical();
  else if (g == "navigation") s = sim::ImuSpec::navigation();
  else if (g == "ideal") s = sim::ImuSpec::ideal();
  else throw ConfigError("key '" + key + "': unknown IMU grade '" + g + "'");
  s.rate = rate;
  return s;
}

}  // namespace

void validate(const RunConfig& cfg) {
  try {
    cfg.scenario.validate();
    sim::yawGrid(cfg.sweep.yaw_min, cfg.sweep.yaw_max, cfg.sweep.yaw_step);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.sweep.seeds < 1) throw ConfigError("key 'sweep.seeds': need at least one seed");
  if (cfg.variants.empty()) throw ConfigError("key 'filter.variant': no variant given");
}

RunConfig parseConfig(std::istream& in, const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  RunConfig cfg;
  // The grade preset goes first so the individual figures can refine it.
  if (const auto g = tree.get_optional<std::string>("imu.grade")) {
    cfg.scenario.imu = grade("imu.grade", stripComment(*g), cfg.scenario.imu.rate);
  }
  try {
    for (const auto& [section, keys] : tree) {
      if (keys.empty() && !keys.data().empty()) {
        throw ConfigError("key '" + section + "' is outside any section");
      }
      for (const auto& [name, node] : keys) {
        const std::string key = section + "." + name;
        if (key == "imu.grade") continue;
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("unknown key '" + key + "'");
        it->second(cfg, key, stripComment(node.data()));
      }
    }
    validate(cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig loadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parseConfig(in, path.filename().string());
}

}  // namespace cteskf::config
