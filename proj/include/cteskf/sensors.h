#pragma once

#include "cteskf/error_state.h"
#include "cteskf/ins.h"

#include <variant>
#include <vector>

namespace cteskf {

/// GNSS velocity in the e frame.
struct GnssVelObs {
  double time = 0.0;
  Vec3 vel = Vec3::Zero();
  Vec3 sigma = Vec3::Constant(0.2);
};

/// Wheel odometer: forward speed plus zero lateral/vertical pseudo-observations, body frame.
struct OdoObs {
  double time = 0.0;
  Vec3 vel_body = Vec3::Zero();
  Vec3 sigma = Vec3::Constant(0.1);
};

enum class ObservationKind { GnssVelocity, Odometer };

using Observation = std::variant<GnssVelObs, OdoObs>;

ObservationKind kindOf(const Observation& obs);
double timeOf(const Observation& obs);

/// Throws std::invalid_argument unless every sigma component is positive.
void validate(const Observation& obs);

/// Predicted minus measured observation. Throws std::invalid_argument if the
/// observation time is further than `time_tolerance` from x.time.
Vec3 innovation(const ins::NavState& x, const Observation& obs, const ins::EarthModel& earth,
                double time_tolerance);

/// Predicted observation y_hat(x).
Vec3 predictObservation(const ins::NavState& x, ObservationKind kind);

/// d(innovation) / d(xi) for the given parameterization.
Mat3x15 observationMatrix(ErrorParameterization param, const ins::NavState& x, ObservationKind kind,
                          const ins::EarthModel& earth);

Mat3 noiseCovariance(const Observation& obs);

/// Time-ordered sensor records for one run.
struct SensorStreams {
  std::vector<ins::ImuSample> imu;
  std::vector<GnssVelObs> gnss;
  std::vector<OdoObs> odo;
};

}  // namespace cteskf
