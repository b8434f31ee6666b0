#pragma once

#include "cteskf/ins.h"
#include "cteskf/types.h"

#include <array>
#include <string_view>

namespace cteskf {

/**
 * Error-state definitions. Navigation blocks:
 *
 *   AdditiveEkf     C_hat C^T ~ I + phi x, dv = v_hat - v, dr = r_hat - r (e frame)
 *   LeftInvariant   eta = chi_hat^-1 chi ~ I + xi^ (body frame)
 *   RightInvariant  eta = chi chi_hat^-1 ~ I + xi^ (e frame)
 *
 * The bias blocks are common to all three. Their sign follows the printed
 * system matrices, i.e. the estimated bias error is b - b_hat.
 */
enum class ErrorParameterization { AdditiveEkf, LeftInvariant, RightInvariant };

inline constexpr std::array<ErrorParameterization, 3> kAllParameterizations = {
    ErrorParameterization::AdditiveEkf, ErrorParameterization::LeftInvariant,
    ErrorParameterization::RightInvariant};

std::string_view toString(ErrorParameterization p);
/// Accepts "ekf", "left"/"l-inekf", "right"/"r-inekf". Throws std::invalid_argument otherwise.
ErrorParameterization parseParameterization(std::string_view name);

/// White-noise densities of w = [w_g, w_a, w_bg, w_ba].
struct ProcessNoise {
  double gyro_psd = 0.0;        // rad^2/s
  double accel_psd = 0.0;       // m^2/s^3
  double gyro_bias_psd = 0.0;   // rad^2/s^3
  double accel_bias_psd = 0.0;  // m^2/s^5

  /// Diagonal 12x12 Qc; throws std::invalid_argument on negative densities.
  Mat12 continuousCovariance() const;
};

struct SystemMatrices {
  Mat15 F = Mat15::Zero();
  Mat15x12 G = Mat15x12::Zero();
  Mat12 Qc = Mat12::Zero();
};

/**
 * Linearized error dynamics of one parameterization at the estimate x.
 * `corrected` must already have the bias estimates removed.
 */
SystemMatrices systemMatrices(ErrorParameterization param, const ins::NavState& x,
                              const ins::ImuSample& corrected, const ins::EarthModel& earth,
                              const ProcessNoise& noise = {});

/// Jacobians mapping the additive error to the invariant ones (9x9 navigation blocks).
Mat9 leftJacobian(const ins::NavState& x, const ins::EarthModel& earth);
Mat9 leftJacobianInverse(const ins::NavState& x, const ins::EarthModel& earth);
Mat9 rightJacobian(const ins::NavState& x, const ins::EarthModel& earth);
Mat9 rightJacobianInverse(const ins::NavState& x, const ins::EarthModel& earth);

/// A with xi_to = A xi_from, evaluated at x. Biases map through the identity.
Mat15 relationMatrix(ErrorParameterization from, ErrorParameterization to, const ins::NavState& x,
                     const ins::EarthModel& earth);

/// T = A^-1(x_plus) A(x_minus) for A = relationMatrix(original, target, .).
Mat15 transformationMatrix(ErrorParameterization original, ErrorParameterization target,
                           const ins::NavState& x_plus, const ins::NavState& x_minus,
                           const ins::EarthModel& earth);

/// The same matrices written out block by block in closed form.
Mat15 closedFormTransformation(ErrorParameterization original, ErrorParameterization target,
                               const ins::NavState& x_plus, const ins::NavState& x_minus,
                               const ins::EarthModel& earth);

enum class InjectionMode {
  FirstOrder,  // x_hat combined with I + xi^, rotation re-orthonormalized
  Retraction   // group exponential
};

std::string_view toString(InjectionMode m);
InjectionMode parseInjectionMode(std::string_view name);

/**
 * Removes the estimated error xi from x_minus.
 * Throws std::invalid_argument when the attitude error is not below pi.
 */
ins::NavState injectError(ErrorParameterization param, const ins::NavState& x_minus,
                          const Vec15& xi, const ins::EarthModel& earth,
                          InjectionMode mode = InjectionMode::Retraction);

/// injectError without the bound on the attitude part. Kalman corrections
/// under large initial errors can exceed pi and are applied as they are.
ins::NavState applyCorrection(ErrorParameterization param, const ins::NavState& x_minus,
                              const Vec15& xi, const ins::EarthModel& earth,
                              InjectionMode mode = InjectionMode::Retraction);

/**
 * Error of the estimate `x_hat` relative to `truth` under a parameterization,
 * computed from the exact group/vector differences. First-order consistent
 * with injectError in retraction mode.
 */
Vec15 errorBetween(ErrorParameterization param, const ins::NavState& x_hat,
                   const ins::NavState& truth, const ins::EarthModel& earth);

}  // namespace cteskf
