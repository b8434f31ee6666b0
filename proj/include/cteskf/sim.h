#pragma once

#include "cteskf/filter.h"
#include "cteskf/trajectory.h"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cteskf::sim {

struct ScenarioConfig {
  double duration = 200.0;  // s
  TrajectoryParams trajectory;
  ImuSpec imu = ImuSpec::tactical();
  double gnss_rate = 1.0;   // Hz, 0 disables
  double gnss_sigma = 0.2;  // m/s
  double odo_rate = 0.0;    // Hz, 0 disables
  double odo_sigma = 0.1;   // m/s
  Vec3 attitude_error_deg = Vec3::Zero();  // roll, pitch, yaw in the local NED frame
  double min_attitude_sigma_deg = 1.0;     // floor for the initial attitude sigma per axis
  double vel_sigma = 0.1;   // initial velocity sigma, m/s
  double pos_sigma = 1.0;   // initial position sigma, m
  double settle = 0.0;      // seconds excluded from RMSE
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument for non-positive duration or rates that do not divide the IMU rate.
  void validate() const;
};

/// Sensor data and truth for one scenario. truth[k] is on the IMU grid.
struct Dataset {
  std::vector<ins::NavState> truth;
  SensorStreams streams;
};

Dataset makeDataset(const ScenarioConfig& cfg, const ins::EarthModel& earth);

/// Named filter configurations used by the experiments.
struct Variant {
  std::string name;
  ErrorParameterization param = ErrorParameterization::AdditiveEkf;
  UpdateStrategy strategy = UpdateStrategy::Plain;
  ErrorParameterization gnss_target = ErrorParameterization::LeftInvariant;
  ErrorParameterization odo_target = ErrorParameterization::RightInvariant;
};

/// "ekf", "l-inekf", "r-inekf", "ct-ekf" (transform), "ct-ekf-switch".
Variant parseVariant(std::string_view name);

/**
 * Initial state: truth with the configured Euler attitude error applied in
 * the NED frame. The covariance is diagonal in the additive representation
 * and mapped into the variant's own representation.
 */
FilterState initialFilter(const Variant& v, const ScenarioConfig& cfg, const ins::NavState& truth0,
                          const ins::EarthModel& earth, InjectionMode injection);

/// Additive initial covariance used by initialFilter.
Mat15 initialCovarianceEkf(const ScenarioConfig& cfg, const ins::NavState& truth0);

struct EstimateRecord {
  ins::NavState x;
  std::array<double, 5> trace{};  // att, vel, pos, bg, ba blocks of P
  Vec3 att_err_deg = Vec3::Zero(); // so3Log(C_hat C^T), NED axes
  Vec3 vel_err = Vec3::Zero();
  Vec3 pos_err = Vec3::Zero();
};

struct Rmse {
  Vec3 att_deg = Vec3::Zero();  // roll, pitch, yaw
  Vec3 vel = Vec3::Zero();      // north, east, down
  Vec3 pos = Vec3::Zero();
};

struct ScenarioResult {
  std::string variant;
  std::vector<EstimateRecord> records;  // one per IMU epoch, starting at t0
  Rmse rmse;
  bool diverged = false;
  std::string failure;
};

ScenarioResult runScenario(const ScenarioConfig& cfg, const Dataset& data, const Variant& v,
                           const ins::EarthModel& earth, InjectionMode injection);

Rmse computeRmse(const std::vector<EstimateRecord>& records, double settle);

struct SweepConfig {
  ScenarioConfig base;
  std::vector<double> yaw_grid_deg;
  int seeds = 10;
  std::vector<std::string> variants{"ekf", "l-inekf", "r-inekf", "ct-ekf"};
  InjectionMode injection = InjectionMode::Retraction;
  int jobs = 1;
};

/// Inclusive grid from `lo` to `hi` in steps of `step`. Throws if the grid would be empty.
std::vector<double> yawGrid(double lo, double hi, double step);

struct SweepTable {
  std::vector<double> yaw_deg;
  std::vector<std::string> variants;
  /// Yaw RMSE in degrees, root mean square over seeds. rmse[cell][variant]; NaN if any seed diverged.
  std::vector<std::vector<double>> yaw_rmse;
};

/// Cell (yaw i, seed s) uses seed base ^ (i * seeds + s) for its data and all variants.
SweepTable monteCarloSweep(const SweepConfig& cfg, const ins::EarthModel& earth);

struct CovarianceSample {
  double time = 0.0;
  /// Per filter: traces of the att, vel, pos blocks after conversion to the left-invariant form.
  std::vector<std::array<double, 3>> traces;
};

/// Runs the filters over the streams and converts each P to the left-invariant form every `stride` epochs.
std::vector<CovarianceSample> covarianceComparison(std::span<const FilterState> filters,
                                                   const SensorStreams& streams, int stride = 1);

}  // namespace cteskf::sim
