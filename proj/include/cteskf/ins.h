#pragma once

#include "cteskf/lie.h"
#include "cteskf/types.h"

namespace cteskf::ins {

/// WGS-84 earth rotation rate, rad/s.
inline constexpr double kEarthRate = 7.292115e-5;
/// WGS-84 earth gravitational constant, m^3/s^2.
inline constexpr double kGM = 3.986004418e14;
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;

enum class GravityMode {
  Constant,     // g^e = EarthModel::g_const everywhere
  Spherical,    // point-mass gravitation GM/r^2 plus the centrifugal term
  NormalGravity // WGS-84 Somigliana normal gravity with free-air correction
};

/**
 * Earth rotation and gravity. gravity() returns g^e, the local gravity
 * (gravitation plus centrifugal), so gravitational() = g^e + (w_ie x)^2 r is
 * the pure gravitational acceleration G_ib^e.
 */
struct EarthModel {
  Vec3 omega_ie = Vec3(0.0, 0.0, kEarthRate);
  GravityMode mode = GravityMode::Spherical;
  Vec3 g_const = Vec3(0.0, 0.0, -9.80665);
  double gm = kGM;

  /// Throws std::invalid_argument when |omega_ie| >= 1e-3 rad/s.
  void validate() const;

  Mat3 omegaSkew() const { return lie::skew(omega_ie); }
};

/// g^e at position r. Throws std::invalid_argument for r = 0 outside constant mode.
Vec3 gravity(const Vec3& r, const EarthModel& earth);

/// G_ib^e = g^e + (w_ie x)^2 r.
Vec3 gravitationalAccel(const Vec3& r, const EarthModel& earth);

struct ImuSample {
  double time = 0.0;
  Vec3 gyro = Vec3::Zero();   // rad/s, body frame
  Vec3 accel = Vec3::Zero();  // specific force, m/s^2, body frame
};

/// Navigation state in the ECEF frame.
struct NavState {
  Mat3 att = Mat3::Identity();  // C_b^e
  Vec3 vel = Vec3::Zero();      // v_eb^e
  Vec3 pos = Vec3::Zero();      // r_eb^e
  Vec3 bg = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  double time = 0.0;

  /// Earth-referenced velocity converted to the inertial-referenced v_ib^e.
  Vec3 inertialVel(const EarthModel& earth) const;

  lie::GroupState group(const EarthModel& earth) const;

  /// Rebuilds the navigation part from a group element; biases and time are kept.
  NavState withGroup(const lie::GroupState& chi, const EarthModel& earth) const;
};

/// Throws std::invalid_argument if the attitude is not a rotation, or if
/// `earth_surface` is set and |pos| is outside [6.2e6, 1.2e7] m.
void validate(const NavState& x, bool earth_surface = true);

/// v_ib^e = v_eb^e + w_ie x r.
Vec3 toInertialVel(const Vec3& vel, const Vec3& pos, const EarthModel& earth);
Vec3 fromInertialVel(const Vec3& inertial_vel, const Vec3& pos, const EarthModel& earth);

struct NavDerivative {
  Vec3 att_rate = Vec3::Zero();  // body-frame rotation rate relative to e, rad/s
  Mat3 att_dot = Mat3::Zero();
  Vec3 vel_dot = Vec3::Zero();
  Vec3 pos_dot = Vec3::Zero();
};

/// Classical ECEF mechanization; biases are taken as zero-mean constants.
NavDerivative classicDerivative(const NavState& x, const ImuSample& u, const EarthModel& earth,
                                bool subtract_bias = false);

/// Time derivative of chi for the group-affine model, with G_ib^e frozen at the given value.
Mat5 groupAffineDerivative(const lie::GroupState& chi, const ImuSample& u, const Vec3& omega_ie,
                           const Vec3& gravitational);

/// Same dynamics written as chi W + U chi.
Mat5 groupAffineInputW(const ImuSample& u);
Mat5 groupAffineInputU(const Vec3& omega_ie, const Vec3& gravitational);

/// The classical (Coriolis 2 w x v) velocity equation transplanted onto chi.
/// This is not group affine; it exists as a reference for the property check.
Mat5 classicalFormOnGroup(const lie::GroupState& chi, const ImuSample& u, const Vec3& omega_ie,
                          const Vec3& gravitational);

/// f(a b) - f(a) b - a f(b) + a f(I) b.
template <typename Dynamics>
Mat5 groupAffineResidual(const Dynamics& f, const lie::GroupState& a, const lie::GroupState& b) {
  const lie::GroupState ab = lie::compose(a, b);
  const Mat5 A = a.matrix();
  const Mat5 B = b.matrix();
  return f(ab) - f(a) * B - A * f(b) + A * f(lie::GroupState::identity()) * B;
}

struct PropagationLimits {
  double max_dt = 0.5;
};

/**
 * One strapdown step over [x.time, x.time + dt] using the raw sample u.
 *
 * Biases are subtracted from u. Attitude is advanced by the body increment
 * and the earth-rate rotation, velocity and position by a midpoint rule.
 * Throws std::invalid_argument for dt <= 0 or dt > limits.max_dt.
 */
NavState propagateState(const NavState& x, const ImuSample& u, double dt, const EarthModel& earth,
                        const PropagationLimits& limits = {});

/// The sample with the state's bias estimates removed.
ImuSample correctedImu(const ImuSample& u, const NavState& x);

}  // namespace cteskf::ins
