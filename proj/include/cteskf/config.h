#pragma once

#include "cteskf/sim.h"

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cteskf::config {

/// Malformed or inconsistent configuration. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepGrid {
  double yaw_min = -150.0;  // deg
  double yaw_max = 150.0;
  double yaw_step = 5.0;
  int seeds = 10;
};

/// Everything a command needs besides the command-line overrides.
struct RunConfig {
  sim::ScenarioConfig scenario;
  std::vector<std::string> variants{"ekf", "l-inekf", "r-inekf", "ct-ekf"};
  InjectionMode injection = InjectionMode::Retraction;
  SweepGrid sweep;
};

/**
 * INI-style file with sections and keys, addressed as section.key:
 *
 *   [scenario]  duration trajectory speed radius length width latitude longitude height
 *               roll_error pitch_error yaw_error gnss_rate gnss_sigma odo_rate odo_sigma
 *               vel_sigma pos_sigma min_attitude_sigma settle seed
 *   [imu]       grade (tactical|navigation|ideal) arw vrw gyro_bias accel_bias rate
 *   [filter]    variant (comma-separated list) injection (first-order|retraction)
 *   [sweep]     yaw_min yaw_max yaw_step seeds
 *
 * Angles in degrees. imu.grade is applied before the individual imu figures.
 * A value may be followed by a "; comment" or "# comment".
 * Unknown keys, unparsable values and invalid combinations throw ConfigError.
 */
RunConfig parseConfig(std::istream& in, const std::string& source = "config");
RunConfig loadConfig(const std::filesystem::path& path);

/// Re-checks the semantic constraints; used after command-line overrides.
void validate(const RunConfig& cfg);

}  // namespace cteskf::config
