#include "cteskf/ins.h"

#include "cteskf/geodesy.h"

#include <cmath>
#include <stdexcept>

namespace cteskf::ins {

using lie::skew;

void EarthModel::validate() const {
  if (!(omega_ie.norm() < 1e-3)) {
    throw std::invalid_argument("earth rotation rate must be below 1e-3 rad/s");
  }
}

Vec3 gravity(const Vec3& r, const EarthModel& earth) {
  switch (earth.mode) {
    case GravityMode::Constant:
      return earth.g_const;
    case GravityMode::Spherical: {
      const double n = r.norm();
      if (n == 0.0) throw std::invalid_argument("spherical gravity undefined at r = 0");
      const Vec3 gravitation = -earth.gm / (n * n * n) * r;
      return gravitation - earth.omega_ie.cross(earth.omega_ie.cross(r));
    }
    case GravityMode::NormalGravity: {
      if (r.norm() == 0.0) throw std::invalid_argument("normal gravity undefined at r = 0");
      const Geodetic llh = ecefToGeodetic(r);
      const Mat3 c_ne = nedToEcef(llh.lat, llh.lon);
      return c_ne * Vec3(0.0, 0.0, normalGravity(llh.lat, llh.height));
    }
  }
  return Vec3::Zero();
}

Vec3 gravitationalAccel(const Vec3& r, const EarthModel& earth) {
  const Mat3 W = earth.omegaSkew();
  return gravity(r, earth) + W * W * r;
}

Vec3 toInertialVel(const Vec3& vel, const Vec3& pos, const EarthModel& earth) {
  return vel + earth.omega_ie.cross(pos);
}

Vec3 fromInertialVel(const Vec3& inertial_vel, const Vec3& pos, const EarthModel& earth) {
  return inertial_vel - earth.omega_ie.cross(pos);
}

Vec3 NavState::inertialVel(const EarthModel& earth) const { return toInertialVel(vel, pos, earth); }

lie::GroupState NavState::group(const EarthModel& earth) const {
  return {att, inertialVel(earth), pos};
}

NavState NavState::withGroup(const lie::GroupState& chi, const EarthModel& earth) const {
  NavState out = *this;
  out.att = chi.rot;
  out.pos = chi.rho;
  out.vel = fromInertialVel(chi.nu, chi.rho, earth);
  return out;
}

void validate(const NavState& x, bool earth_surface) {
  if (!x.att.allFinite() || !x.vel.allFinite() || !x.pos.allFinite()) {
    throw std::invalid_argument("navigation state has non-finite entries");
  }
  if (lie::orthonormalityError(x.att) > 1e-10) {
    throw std::invalid_argument("attitude is not a rotation matrix");
  }
  if (earth_surface) {
    const double n = x.pos.norm();
    if (n < 6.2e6 || n > 1.2e7) throw std::invalid_argument("position is not near the earth surface");
  }
}

NavDerivative classicDerivative(const NavState& x, const ImuSample& u, const EarthModel& earth,
                                bool subtract_bias) {
  const Vec3 w = subtract_bias ? Vec3(u.gyro - x.bg) : u.gyro;
  const Vec3 f = subtract_bias ? Vec3(u.accel - x.ba) : u.accel;
  const Mat3 W = earth.omegaSkew();
  NavDerivative d;
  d.att_rate = w - x.att.transpose() * earth.omega_ie;
  d.att_dot = x.att * skew(w) - W * x.att;
  d.vel_dot = x.att * f - 2.0 * W * x.vel + gravity(x.pos, earth);
  d.pos_dot = x.vel;
  return d;
}

Mat5 groupAffineDerivative(const lie::GroupState& chi, const ImuSample& u, const Vec3& omega_ie,
                           const Vec3& gravitational) {
  const Mat3 W = skew(omega_ie);
  Mat5 d = Mat5::Zero();
  d.topLeftCorner<3, 3>() = chi.rot * skew(u.gyro) - W * chi.rot;
  d.block<3, 1>(0, 3) = chi.rot * u.accel - W * chi.nu + gravitational;
  d.block<3, 1>(0, 4) = chi.nu - W * chi.rho;
  return d;
}

Mat5 groupAffineInputW(const ImuSample& u) {
  Mat5 m = Mat5::Zero();
  m.topLeftCorner<3, 3>() = skew(u.gyro);
  m.block<3, 1>(0, 3) = u.accel;
  m(3, 4) = 1.0;
  return m;
}

Mat5 groupAffineInputU(const Vec3& omega_ie, const Vec3& gravitational) {
  Mat5 m = Mat5::Zero();
  m.topLeftCorner<3, 3>() = -skew(omega_ie);
  m.block<3, 1>(0, 3) = gravitational;
  m(3, 4) = -1.0;
  return m;
}

Mat5 classicalFormOnGroup(const lie::GroupState& chi, const ImuSample& u, const Vec3& omega_ie,
                          const Vec3& gravitational) {
  const Mat3 W = skew(omega_ie);
  Mat5 d = Mat5::Zero();
  d.topLeftCorner<3, 3>() = chi.rot * skew(u.gyro) - W * chi.rot;
  d.block<3, 1>(0, 3) = chi.rot * u.accel - 2.0 * W * chi.nu + gravitational;
  d.block<3, 1>(0, 4) = chi.nu;
  return d;
}

ImuSample correctedImu(const ImuSample& u, const NavState& x) {
  return {u.time, u.gyro - x.bg, u.accel - x.ba};
}

NavState propagateState(const NavState& x, const ImuSample& u, double dt, const EarthModel& earth,
                        const PropagationLimits& limits) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagation step must be positive");
  if (dt > limits.max_dt) throw std::invalid_argument("propagation step exceeds the configured cap");

  const ImuSample c = correctedImu(u, x);
  const Mat3 W = earth.omegaSkew();

  const Mat3 att_mid =
      lie::so3Exp(-0.5 * dt * earth.omega_ie) * x.att * lie::so3Exp(0.5 * dt * c.gyro);
  const Mat3 att_end = lie::so3Exp(-dt * earth.omega_ie) * x.att * lie::so3Exp(dt * c.gyro);

  const Vec3 acc0 = x.att * c.accel - 2.0 * W * x.vel + gravity(x.pos, earth);
  const Vec3 vel_mid = x.vel + 0.5 * dt * acc0;
  const Vec3 pos_mid = x.pos + 0.5 * dt * x.vel;
  const Vec3 acc_mid = att_mid * c.accel - 2.0 * W * vel_mid + gravity(pos_mid, earth);

  NavState out = x;
  out.att = lie::orthonormalize(att_end);
  out.vel = x.vel + dt * acc_mid;
  out.pos = x.pos + 0.5 * dt * (x.vel + out.vel);
  out.time = x.time + dt;
  return out;
}

}  // namespace cteskf::ins
