#include "cteskf/sensors.h"

#include <cmath>
#include <stdexcept>

namespace cteskf {

using ins::EarthModel;
using ins::NavState;
using lie::skew;

ObservationKind kindOf(const Observation& obs) {
  return std::holds_alternative<GnssVelObs>(obs) ? ObservationKind::GnssVelocity
                                                 : ObservationKind::Odometer;
}

double timeOf(const Observation& obs) {
  return std::visit([](const auto& o) { return o.time; }, obs);
}

void validate(const Observation& obs) {
  const Vec3 sigma = std::visit([](const auto& o) { return o.sigma; }, obs);
  if (!(sigma.minCoeff() > 0.0)) throw std::invalid_argument("observation sigma must be positive");
}

Vec3 predictObservation(const NavState& x, ObservationKind kind) {
  return kind == ObservationKind::GnssVelocity ? x.vel : Vec3(x.att.transpose() * x.vel);
}

Vec3 innovation(const NavState& x, const Observation& obs, const EarthModel&, double time_tolerance) {
  if (std::abs(timeOf(obs) - x.time) > time_tolerance) {
    throw std::invalid_argument("observation time does not match the filter time");
  }
  if (const auto* g = std::get_if<GnssVelObs>(&obs)) {
    return predictObservation(x, ObservationKind::GnssVelocity) - g->vel;
  }
  const auto& o = std::get<OdoObs>(obs);
  return predictObservation(x, ObservationKind::Odometer) - o.vel_body;
}

Mat3x15 observationMatrix(ErrorParameterization param, const NavState& x, ObservationKind kind,
                          const EarthModel& earth) {
  const Mat3 I = Mat3::Identity();
  const Mat3& C = x.att;
  const Mat3 Ct = C.transpose();
  const Mat3 W = earth.omegaSkew();
  Mat3x15 H = Mat3x15::Zero();

  if (kind == ObservationKind::GnssVelocity) {
    switch (param) {
      case ErrorParameterization::AdditiveEkf:
        H.block<3, 3>(0, kVel) = I;
        break;
      case ErrorParameterization::LeftInvariant:
        H.block<3, 3>(0, kVel) = -C;
        H.block<3, 3>(0, kPos) = W * C;
        break;
      case ErrorParameterization::RightInvariant:
        // (nu x) - W (r x), the form consistent with the right Jacobian.
        H.block<3, 3>(0, kAtt) = skew(x.inertialVel(earth)) - W * skew(x.pos);
        H.block<3, 3>(0, kVel) = -I;
        H.block<3, 3>(0, kPos) = W;
        break;
    }
    return H;
  }

  switch (param) {
    case ErrorParameterization::AdditiveEkf:
      H.block<3, 3>(0, kAtt) = Ct * skew(x.vel);
      H.block<3, 3>(0, kVel) = Ct;
      break;
    case ErrorParameterization::LeftInvariant:
      H.block<3, 3>(0, kAtt) = skew(Ct * (-x.inertialVel(earth) + W * x.pos));
      H.block<3, 3>(0, kVel) = -I;
      H.block<3, 3>(0, kPos) = Ct * W * C;
      break;
    case ErrorParameterization::RightInvariant:
      H.block<3, 3>(0, kAtt) = -Ct * skew(x.pos) * W;
      H.block<3, 3>(0, kVel) = -Ct;
      H.block<3, 3>(0, kPos) = Ct * W;
      break;
  }
  return H;
}

Mat3 noiseCovariance(const Observation& obs) {
  const Vec3 sigma = std::visit([](const auto& o) { return o.sigma; }, obs);
  return sigma.cwiseAbs2().asDiagonal();
}

}  // namespace cteskf
