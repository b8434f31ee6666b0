#include "cteskf/lie.h"

#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cteskf::lie {

namespace {

// Coefficients of the Rodrigues-type series in theta, with Taylor fallbacks.
// sin(t)/t
double coeffA(double t) {
  if (t < kSmallAngle) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

// (1 - cos t)/t^2, written with the half angle to avoid cancellation.
double coeffB(double t) {
  if (t < kSmallAngle) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  }
  const double s = std::sin(0.5 * t) / t;
  return 2.0 * s * s;
}

// C and D cancel to about eps / t^2 in closed form; below this angle the
// truncated series is exact to double precision instead.
constexpr double kSeriesAngle = 0.1;

// (t - sin t)/t^3
double coeffC(double t) {
  if (t < kSeriesAngle) {
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362880.0 + t2 * t2 * t2 * t2 / 39916800.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

// (1 - t sin t / (2 (1 - cos t))) / t^2 = (1 - (t/2) cot(t/2)) / t^2
double coeffD(double t) {
  if (t < kSeriesAngle) {
    const double t2 = t * t;
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 + t2 * t2 * t2 / 1209600.0 +
           t2 * t2 * t2 * t2 / 47900160.0;
  }
  const double h = 0.5 * t;
  return (1.0 - h * std::cos(h) / std::sin(h)) / (t * t);
}

constexpr double kNearPi = 1e-6;

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 unskew(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Mat3 so3Exp(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 K = skew(phi);
  return Mat3::Identity() + coeffA(t) * K + coeffB(t) * K * K;
}

Vec3 so3Log(const Mat3& R, bool* near_pi) {
  if (near_pi != nullptr) *near_pi = false;
  // 2 sin(t) * axis
  const Vec3 s(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double cos_t = 0.5 * (R.trace() - 1.0);
  const double sin_t = 0.5 * s.norm();
  const double t = std::atan2(sin_t, cos_t);

  if (std::numbers::pi - t < kNearPi) {
    if (near_pi != nullptr) *near_pi = true;
    const Mat3 sym = 0.5 * (R + R.transpose());
    // sym = cos(t) I + (1 - cos(t)) a a^T
    const Mat3 aat = (sym - cos_t * Mat3::Identity()) / (1.0 - cos_t);
    int i = 0;
    aat.diagonal().maxCoeff(&i);
    Vec3 axis = aat.col(i) / std::sqrt(std::max(aat(i, i), 1e-300));
    axis.normalize();
    if (s.norm() > 1e-12) {
      if (axis.dot(s) < 0.0) axis = -axis;
    } else {
      for (int k = 0; k < 3; ++k) {
        if (std::abs(axis(k)) > 1e-12) {
          if (axis(k) < 0.0) axis = -axis;
          break;
        }
      }
    }
    return t * axis;
  }
  // t / sin(t), with the series near zero.
  return 0.5 * s / coeffA(t);
}

Mat3 so3LeftJacobian(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 K = skew(phi);
  return Mat3::Identity() + coeffB(t) * K + coeffC(t) * K * K;
}

Mat3 so3LeftJacobianInverse(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 K = skew(phi);
  return Mat3::Identity() - 0.5 * K + coeffD(t) * K * K;
}

Mat3 orthonormalize(const Mat3& R) {
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) = -U.col(2);
  return U * V.transpose();
}

double orthonormalityError(const Mat3& R) {
  return std::max((R.transpose() * R - Mat3::Identity()).norm(), std::abs(R.determinant() - 1.0));
}

Mat5 GroupState::matrix() const {
  Mat5 m = Mat5::Identity();
  m.topLeftCorner<3, 3>() = rot;
  m.block<3, 1>(0, 3) = nu;
  m.block<3, 1>(0, 4) = rho;
  return m;
}

GroupState GroupState::fromMatrix(const Mat5& m) {
  Eigen::Matrix<double, 2, 5> expected = Eigen::Matrix<double, 2, 5>::Zero();
  expected(0, 3) = 1.0;
  expected(1, 4) = 1.0;
  if ((m.bottomRows<2>() - expected).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("SE2(3) matrix must have bottom rows [0 0 0 1 0; 0 0 0 0 1]");
  }
  return {m.topLeftCorner<3, 3>(), m.block<3, 1>(0, 3), m.block<3, 1>(0, 4)};
}

GroupState compose(const GroupState& a, const GroupState& b) {
  return {a.rot * b.rot, a.rot * b.nu + a.nu, a.rot * b.rho + a.rho};
}

GroupState inverse(const GroupState& a) {
  const Mat3 Rt = a.rot.transpose();
  return {Rt, -Rt * a.nu, -Rt * a.rho};
}

Mat5 se23Hat(const Vec9& xi) {
  Mat5 m = Mat5::Zero();
  m.topLeftCorner<3, 3>() = skew(xi.head<3>());
  m.block<3, 1>(0, 3) = xi.segment<3>(3);
  m.block<3, 1>(0, 4) = xi.segment<3>(6);
  return m;
}

Vec9 se23Vee(const Mat5& m) {
  if (m.bottomRows<2>().cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("se2(3) matrix must have zero bottom rows");
  }
  Vec9 xi;
  xi << unskew(m.topLeftCorner<3, 3>()), m.block<3, 1>(0, 3), m.block<3, 1>(0, 4);
  return xi;
}

GroupState se23Exp(const Vec9& xi) {
  const Vec3 phi = xi.head<3>();
  const Mat3 J = so3LeftJacobian(phi);
  return {so3Exp(phi), J * xi.segment<3>(3), J * xi.segment<3>(6)};
}

Vec9 se23Log(const GroupState& chi) {
  const Vec3 phi = so3Log(chi.rot);
  const Mat3 Jinv = so3LeftJacobianInverse(phi);
  Vec9 xi;
  xi << phi, Jinv * chi.nu, Jinv * chi.rho;
  return xi;
}

Mat9 adjoint(const GroupState& chi) {
  Mat9 ad = Mat9::Zero();
  const Mat3& R = chi.rot;
  ad.block<3, 3>(0, 0) = R;
  ad.block<3, 3>(3, 0) = skew(chi.nu) * R;
  ad.block<3, 3>(3, 3) = R;
  ad.block<3, 3>(6, 0) = skew(chi.rho) * R;
  ad.block<3, 3>(6, 6) = R;
  return ad;
}

}  // namespace cteskf::lie
