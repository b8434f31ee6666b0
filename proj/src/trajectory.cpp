#include "cteskf/trajectory.h"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace cteskf::sim {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Mat3 rotZ(double a) {
  Mat3 R;
  R << std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0;
  return R;
}

// Number of grid steps in `duration` at `rate`, rejecting non-integral products.
std::size_t gridSteps(double duration, double rate) {
  const double n = duration * rate;
  const double r = std::round(n);
  if (!(duration > 0.0) || !(rate > 0.0)) throw std::invalid_argument("duration and rate must be positive");
  if (std::abs(n - r) > 1e-6) throw std::invalid_argument("duration is not a whole number of sample periods");
  return static_cast<std::size_t>(r);
}

std::size_t rateRatio(double fast, double slow) {
  const double q = fast / slow;
  const double r = std::round(q);
  if (!(slow > 0.0) || r < 1.0 || std::abs(q - r) > 1e-9) {
    throw std::invalid_argument("observation rate must divide the truth rate");
  }
  return static_cast<std::size_t>(r);
}

std::mt19937_64 makeRng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Vec3 gaussian3(std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double a = n(rng), b = n(rng), c = n(rng);
  return sigma * Vec3(a, b, c);
}

}  // namespace

ImuSpec ImuSpec::tactical() { return {0.15, 20.0, 2.0, 3.6, 200.0}; }
ImuSpec ImuSpec::navigation() { return {0.001, 5.0, 2.0, 3.6, 200.0}; }
ImuSpec ImuSpec::ideal(double rate) { return {0.0, 0.0, 0.0, 0.0, rate}; }

void ImuSpec::validate() const {
  if (arw < 0.0 || vrw < 0.0 || gyro_bias < 0.0 || accel_bias < 0.0) {
    throw std::invalid_argument("IMU figures must be non-negative");
  }
  if (!(rate > 0.0)) throw std::invalid_argument("IMU rate must be positive");
}

double ImuSpec::gyroPsd() const {
  const double a = arw * kDeg / 60.0;  // rad/sqrt(s)
  return a * a;
}

double ImuSpec::accelPsd() const {
  const double v = vrw * 1e-6 * kStandardGravity;  // m/s^2/sqrt(Hz)
  return v * v;
}

double ImuSpec::gyroBiasSigma() const { return gyro_bias * kDeg / 3600.0; }
double ImuSpec::accelBiasSigma() const { return accel_bias * 1e-6 * kStandardGravity; }

ProcessNoise ImuSpec::processNoise() const {
  ProcessNoise q;
  q.gyro_psd = gyroPsd();
  q.accel_psd = accelPsd();
  q.gyro_bias_psd = gyroBiasSigma() * gyroBiasSigma() / 3600.0;
  q.accel_bias_psd = accelBiasSigma() * accelBiasSigma() / 3600.0;
  return q;
}

std::string_view toString(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::Stationary: return "stationary";
    case TrajectoryKind::Circle: return "circle";
    case TrajectoryKind::FigureEight: return "figure-eight";
    case TrajectoryKind::Waypoint: return "waypoint";
  }
  return "?";
}

TrajectoryKind parseTrajectoryKind(std::string_view name) {
  if (name == "stationary") return TrajectoryKind::Stationary;
  if (name == "circle") return TrajectoryKind::Circle;
  if (name == "figure-eight" || name == "figure8") return TrajectoryKind::FigureEight;
  if (name == "waypoint") return TrajectoryKind::Waypoint;
  throw std::invalid_argument("unknown trajectory kind '" + std::string(name) + "'");
}

Trajectory::Trajectory(const TrajectoryParams& p) : p_(p) {
  if (p.kind != TrajectoryKind::Stationary && !(p.speed > 0.0)) {
    throw std::invalid_argument("trajectory speed must be positive");
  }
  if (p.kind != TrajectoryKind::Stationary && !(p.radius > 0.0)) {
    throw std::invalid_argument("trajectory radius must be positive");
  }
  if (p.kind == TrajectoryKind::Waypoint && (p.length < 2.0 * p.radius || p.width < 2.0 * p.radius)) {
    throw std::invalid_argument("waypoint rectangle is smaller than its fillets");
  }
  c_ne_ = ins::nedToEcef(p.origin.lat, p.origin.lon);
  r0_ = ins::geodeticToEcef(p.origin);
}

Trajectory::Local Trajectory::local(double t) const {
  Local l;
  const double V = p_.speed;
  switch (p_.kind) {
    case TrajectoryKind::Stationary:
      l.pos = l.vel = l.acc = Vec3::Zero();
      l.yaw = p_.heading;
      break;

    case TrajectoryKind::Circle: {
      const double R = p_.radius, w = V / R, th = w * t;
      l.pos = Vec3(R * std::sin(th), R * (1.0 - std::cos(th)), 0.0);
      l.vel = Vec3(V * std::cos(th), V * std::sin(th), 0.0);
      l.acc = Vec3(-V * w * std::sin(th), V * w * std::cos(th), 0.0);
      l.yaw = th;
      l.yaw_rate = w;
      break;
    }

    case TrajectoryKind::FigureEight: {
      // Lemniscate of Gerono, peak speed V at the crossing point.
      const double A = p_.radius, w = V / (A * std::sqrt(2.0)), u = w * t;
      l.pos = Vec3(A * std::sin(u), A * std::sin(u) * std::cos(u), 0.0);
      l.vel = Vec3(A * w * std::cos(u), A * w * std::cos(2.0 * u), 0.0);
      l.acc = Vec3(-A * w * w * std::sin(u), -2.0 * A * w * w * std::sin(2.0 * u), 0.0);
      const double v2 = l.vel.head<2>().squaredNorm();
      l.yaw = std::atan2(l.vel.y(), l.vel.x());
      l.yaw_rate = (l.vel.x() * l.acc.y() - l.vel.y() * l.acc.x()) / v2;
      break;
    }

    case TrajectoryKind::Waypoint: {
      // Rectangle driven clockwise from the origin, corners replaced by arcs.
      const double rf = p_.radius;
      const double arc = 0.5 * std::numbers::pi * rf;
      const std::array<double, 4> sides{p_.length - 2.0 * rf, p_.width - 2.0 * rf,
                                        p_.length - 2.0 * rf, p_.width - 2.0 * rf};
      double perimeter = 4.0 * arc;
      for (double s : sides) perimeter += s;
      double s = std::fmod(V * t, perimeter);
      if (s < 0.0) s += perimeter;

      Vec3 p0 = Vec3::Zero();
      double psi0 = 0.0;
      // Whole laps leave the vehicle back at the origin heading north.
      for (int seg = 0; seg < 8; ++seg) {
        const bool turn = seg % 2 == 1;
        const double len = turn ? arc : sides[seg / 2];
        const double k = turn ? 1.0 / rf : 0.0;
        const double ds = std::min(s, len);
        const double psi = psi0 + k * ds;
        Vec3 p;
        if (turn) {
          p = p0 + rf * Vec3(std::sin(psi) - std::sin(psi0), -(std::cos(psi) - std::cos(psi0)), 0.0);
        } else {
          p = p0 + ds * Vec3(std::cos(psi0), std::sin(psi0), 0.0);
        }
        if (s <= len || seg == 7) {
          l.pos = p;
          l.vel = V * Vec3(std::cos(psi), std::sin(psi), 0.0);
          l.acc = V * V * k * Vec3(-std::sin(psi), std::cos(psi), 0.0);
          l.yaw = psi;
          l.yaw_rate = V * k;
          break;
        }
        s -= len;
        p0 = p;
        psi0 = psi;
      }
      break;
    }
  }
  return l;
}

Kinematics Trajectory::at(double t) const {
  const Local l = local(t);
  Kinematics k;
  k.state.time = t;
  k.state.att = c_ne_ * rotZ(l.yaw);
  k.state.vel = c_ne_ * l.vel;
  k.state.pos = r0_ + c_ne_ * l.pos;
  k.accel = c_ne_ * l.acc;
  k.body_rate = Vec3(0.0, 0.0, l.yaw_rate);
  return k;
}

std::vector<ins::NavState> sampleTruth(const Trajectory& traj, double duration, double rate) {
  const std::size_t n = gridSteps(duration, rate);
  std::vector<ins::NavState> out;
  out.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) out.push_back(traj.at(static_cast<double>(k) / rate).state);
  return out;
}

ins::ImuSample idealImu(const Kinematics& k, const ins::EarthModel& earth) {
  const Mat3 Ct = k.state.att.transpose();
  ins::ImuSample u;
  u.time = k.state.time;
  u.gyro = k.body_rate + Ct * earth.omega_ie;
  u.accel = Ct * (k.accel + 2.0 * earth.omegaSkew() * k.state.vel - ins::gravity(k.state.pos, earth));
  return u;
}

ImuStream synthesizeImu(const Trajectory& traj, double duration, const ImuSpec& spec,
                        const ins::EarthModel& earth, std::uint64_t seed) {
  spec.validate();
  const std::size_t n = gridSteps(duration, spec.rate);
  const double dt = 1.0 / spec.rate;
  const ProcessNoise q = spec.processNoise();
  auto rng = makeRng(seed, 1);

  ImuStream s;
  s.initial_bias.gyro = gaussian3(rng, spec.gyroBiasSigma());
  s.initial_bias.accel = gaussian3(rng, spec.accelBiasSigma());
  TrueBiases b = s.initial_bias;
  s.samples.reserve(n + 1);
  s.bias.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    ins::ImuSample u = idealImu(traj.at(t + 0.5 * dt), earth);
    u.time = t;
    u.gyro += b.gyro + gaussian3(rng, std::sqrt(q.gyro_psd / dt));
    u.accel += b.accel + gaussian3(rng, std::sqrt(q.accel_psd / dt));
    s.samples.push_back(u);
    s.bias.push_back(b);
    b.gyro += gaussian3(rng, std::sqrt(q.gyro_bias_psd * dt));
    b.accel += gaussian3(rng, std::sqrt(q.accel_bias_psd * dt));
  }
  return s;
}

std::vector<GnssVelObs> synthesizeGnss(const std::vector<ins::NavState>& truth, double truth_rate,
                                       double rate, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  std::vector<GnssVelObs> out;
  if (rate <= 0.0) return out;
  const std::size_t step = rateRatio(truth_rate, rate);
  auto rng = makeRng(seed, 2);
  for (std::size_t i = step; i < truth.size(); i += step) {
    GnssVelObs o;
    o.time = truth[i].time;
    o.vel = truth[i].vel + gaussian3(rng, sigma);
    o.sigma = Vec3::Constant(sigma);
    out.push_back(o);
  }
  return out;
}

std::vector<OdoObs> synthesizeOdo(const std::vector<ins::NavState>& truth, double truth_rate,
                                  double rate, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  std::vector<OdoObs> out;
  if (rate <= 0.0) return out;
  const std::size_t step = rateRatio(truth_rate, rate);
  auto rng = makeRng(seed, 3);
  for (std::size_t i = step; i < truth.size(); i += step) {
    OdoObs o;
    o.time = truth[i].time;
    o.vel_body = truth[i].att.transpose() * truth[i].vel + gaussian3(rng, sigma);
    o.sigma = Vec3::Constant(sigma);
    out.push_back(o);
  }
  return out;
}

}  // namespace cteskf::sim
