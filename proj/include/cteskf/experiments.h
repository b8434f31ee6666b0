#pragma once

#include "cteskf/sim.h"

#include <functional>
#include <string>
#include <vector>

namespace cteskf::exp {

/// Outcome of one named property check.
struct PropertyResult {
  std::string name;
  bool pass = false;
  double value = 0.0;      // measured figure compared against the tolerance
  double tolerance = 0.0;
  std::string detail;      // extra measurements, human readable
  double seconds = 0.0;
};

/// Relative covariance relation residual after propagation only, worst ordered pair.
PropertyResult propagationEquivalence(double imu_rate, double duration = 60.0);

/// Equivalent inits with 60/60/120 deg attitude error, one GNSS update at 1 s.
PropertyResult firstUpdateIdentity();

/// Additive filter with the GNSS switch to the left-invariant form against the left-invariant filter.
PropertyResult switchEffectiveness(double duration = 200.0);

/// Backward switch evaluated at the predicted state against the plain additive filter.
/// `target` selects the representation switched to.
PropertyResult switchIneffectiveness(ErrorParameterization target = ErrorParameterization::LeftInvariant,
                                     double duration = 200.0);

/// Transform and switch strategies over a mixed GNSS + odometer run.
PropertyResult transformMatchesSwitch(double duration = 200.0);

/// CT-EKF against L-InEKF (GNSS only) and R-InEKF (odometer only).
PropertyResult ctEkfCoincidence(double imu_rate, double tolerance, double duration = 200.0);

/// Closed-form T against A^-1(x+) A(x-) and det(T) = 1 on random state pairs.
/// `flip_ekf_to_right` negates the coupling blocks of the closed-form T_ekf->r (negative control).
PropertyResult closedFormClosure(int pairs = 100, bool flip_ekf_to_right = false);

/// Group-affine residual of the dynamics; the classical form is the negative control.
PropertyResult groupAffine(int pairs = 100);

struct SweepOrdering {
  sim::SweepTable table;
  int cells = 0;                 // cells with |yaw| >= 90 deg
  int ct_not_worse_than_ekf = 0;
  int ct_not_worse_than_left = 0;
};

/// GNSS + odometer yaw sweep; CT-EKF must not lose to EKF anywhere beyond 90 deg
/// and must not lose to L-InEKF in at least 80 % of those cells.
PropertyResult yawSweepOrdering(int seeds = 10, double step_deg = 5.0, int jobs = 1,
                                double duration = 100.0, SweepOrdering* out = nullptr);

/// H_b = H_a A and G_a = A G_b for every pair on random states.
PropertyResult observationAndNoiseRelations(int states = 50);

enum class VerifyLevel { Fast, Full };

struct VerifyOptions {
  VerifyLevel level = VerifyLevel::Fast;
  int jobs = 1;
  bool flip_ekf_to_right = false;  // test hook for the closure property
};

/// Runs the property suite; `progress` is called after each property.
std::vector<PropertyResult> verifyAll(const VerifyOptions& opt,
                                      const std::function<void(const PropertyResult&)>& progress = {});

}  // namespace cteskf::exp
