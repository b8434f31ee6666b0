#pragma once

#include "cteskf/types.h"

namespace cteskf::lie {

/// Below this rotation angle the Rodrigues coefficients switch to Taylor series.
inline constexpr double kSmallAngle = 1e-7;

Mat3 skew(const Vec3& v);

/// Inverse of skew(). Reads the antisymmetric part, so it tolerates small asymmetry.
Vec3 unskew(const Mat3& m);

Mat3 so3Exp(const Vec3& phi);

/**
 * Rotation vector of R with norm in [0, pi].
 *
 * Within 1e-6 rad of pi the axis is recovered from the symmetric part
 * (R + R^T) / 2. At exactly pi the sign is ambiguous and is fixed so that the
 * first nonzero axis component is positive. `near_pi`, when given, reports
 * whether that branch was taken.
 */
Vec3 so3Log(const Mat3& R, bool* near_pi = nullptr);

/// Left Jacobian of SO(3), J(phi) = sum_k (phi^)^k / (k+1)!.
Mat3 so3LeftJacobian(const Vec3& phi);
Mat3 so3LeftJacobianInverse(const Vec3& phi);

/// Nearest rotation in the Frobenius sense: R (R^T R)^{-1/2}.
Mat3 orthonormalize(const Mat3& R);

/// Frobenius norms of R^T R - I and det(R) - 1, for invariant checks.
double orthonormalityError(const Mat3& R);

/**
 * Element of SE_2(3):
 *
 *     [ R  nu  rho ]
 *     [ 0   1    0 ]
 *     [ 0   0    1 ]
 *
 * Tangent vectors are ordered [phi, dnu, drho].
 */
struct GroupState {
  Mat3 rot = Mat3::Identity();
  Vec3 nu = Vec3::Zero();
  Vec3 rho = Vec3::Zero();

  static GroupState identity() { return {}; }

  Mat5 matrix() const;

  /// Throws std::invalid_argument when the bottom two rows are not [0 0 0 1 0; 0 0 0 0 1].
  static GroupState fromMatrix(const Mat5& m);
};

GroupState compose(const GroupState& a, const GroupState& b);
GroupState inverse(const GroupState& a);

Mat5 se23Hat(const Vec9& xi);

/// Throws std::invalid_argument when the bottom rows or the rotation block are not Lie-algebra shaped.
Vec9 se23Vee(const Mat5& m);

GroupState se23Exp(const Vec9& xi);
Vec9 se23Log(const GroupState& chi);

/// Ad_chi = [R 0 0; (nu x) R  R 0; (rho x) R  0 R].
Mat9 adjoint(const GroupState& chi);

}  // namespace cteskf::lie
