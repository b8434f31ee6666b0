#pragma once

#include "cteskf/geodesy.h"
#include "cteskf/ins.h"
#include "cteskf/sensors.h"

#include <cstdint>
#include <string_view>
#include <vector>

namespace cteskf::sim {

/// IMU error figures in datasheet units.
struct ImuSpec {
  double arw = 0.0;              // deg/sqrt(h)
  double vrw = 0.0;              // ug/sqrt(Hz)
  double gyro_bias = 0.0;        // deg/h
  double accel_bias = 0.0;       // ug
  double rate = 200.0;           // Hz

  /// Tactical-grade unit: 0.15 deg/sqrt(h), 20 ug/sqrt(Hz), 2 deg/h, 3.6 ug.
  static ImuSpec tactical();
  /// Navigation-grade unit: 0.001 deg/sqrt(h), 5 ug/sqrt(Hz), biases as tactical.
  static ImuSpec navigation();
  static ImuSpec ideal(double rate = 200.0);

  /// Throws std::invalid_argument on negative figures or a non-positive rate.
  void validate() const;

  double gyroPsd() const;         // rad^2/s
  double accelPsd() const;        // m^2/s^3
  double gyroBiasSigma() const;   // rad/s
  double accelBiasSigma() const;  // m/s^2
  /// Continuous densities for the filter. Bias random walks reach their sigma after one hour.
  ProcessNoise processNoise() const;
};

inline constexpr double kStandardGravity = 9.80665;

enum class TrajectoryKind { Stationary, Circle, FigureEight, Waypoint };

std::string_view toString(TrajectoryKind k);
TrajectoryKind parseTrajectoryKind(std::string_view name);

/// Planar ground-vehicle path around an origin; body axes forward-right-down, no roll or pitch.
struct TrajectoryParams {
  TrajectoryKind kind = TrajectoryKind::Circle;
  ins::Geodetic origin{0.5235987755982988, 1.9896753472735356, 20.0};  // 30 N, 114 E
  double speed = 5.0;     // m/s
  double radius = 50.0;   // circle radius, lemniscate half-width, or corner fillet
  double length = 200.0;  // waypoint rectangle side lengths
  double width = 100.0;
  double heading = 0.0;   // rad, stationary heading
};

/// Exact kinematics at one instant, ECEF.
struct Kinematics {
  ins::NavState state;           // att, vel, pos; biases zero
  Vec3 accel = Vec3::Zero();     // d v_eb^e / dt
  Vec3 body_rate = Vec3::Zero(); // w_eb^b
};

class Trajectory {
 public:
  explicit Trajectory(const TrajectoryParams& p);

  Kinematics at(double t) const;
  const TrajectoryParams& params() const { return p_; }
  const Mat3& nedToEcef() const { return c_ne_; }
  const Vec3& originEcef() const { return r0_; }

 private:
  struct Local {
    Vec3 pos, vel, acc;
    double yaw = 0.0;
    double yaw_rate = 0.0;
  };
  Local local(double t) const;

  TrajectoryParams p_;
  Mat3 c_ne_;
  Vec3 r0_;
};

/// Truth on the grid t_k = k / rate, k = 0..round(duration * rate).
std::vector<ins::NavState> sampleTruth(const Trajectory& traj, double duration, double rate);

/// Ideal gyro and specific force for the given kinematics.
ins::ImuSample idealImu(const Kinematics& k, const ins::EarthModel& earth);

struct TrueBiases {
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

struct ImuStream {
  std::vector<ins::ImuSample> samples;
  TrueBiases initial_bias;
  /// Bias value held over [t_k, t_k+1), same length as samples.
  std::vector<TrueBiases> bias;
};

/**
 * Samples on the IMU grid, each evaluated at the midpoint of the interval it
 * drives, plus white noise and random-constant + random-walk biases.
 */
ImuStream synthesizeImu(const Trajectory& traj, double duration, const ImuSpec& spec,
                        const ins::EarthModel& earth, std::uint64_t seed);

/// Observations at k / rate for k >= 1, using the given truth grid (rate must divide its rate).
std::vector<GnssVelObs> synthesizeGnss(const std::vector<ins::NavState>& truth, double truth_rate,
                                       double rate, double sigma, std::uint64_t seed);
std::vector<OdoObs> synthesizeOdo(const std::vector<ins::NavState>& truth, double truth_rate,
                                  double rate, double sigma, std::uint64_t seed);

}  // namespace cteskf::sim
