#include "cteskf/error_state.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cteskf {

using ins::EarthModel;
using ins::NavState;
using lie::skew;
using P = ErrorParameterization;

std::string_view toString(ErrorParameterization p) {
  switch (p) {
    case P::AdditiveEkf: return "ekf";
    case P::LeftInvariant: return "left";
    case P::RightInvariant: return "right";
  }
  return "?";
}

ErrorParameterization parseParameterization(std::string_view name) {
  if (name == "ekf" || name == "additive") return P::AdditiveEkf;
  if (name == "left" || name == "l-inekf" || name == "l") return P::LeftInvariant;
  if (name == "right" || name == "r-inekf" || name == "r") return P::RightInvariant;
  throw std::invalid_argument("unknown error parameterization '" + std::string(name) + "'");
}

std::string_view toString(InjectionMode m) {
  return m == InjectionMode::FirstOrder ? "first-order" : "retraction";
}

InjectionMode parseInjectionMode(std::string_view name) {
  if (name == "first-order") return InjectionMode::FirstOrder;
  if (name == "retraction") return InjectionMode::Retraction;
  throw std::invalid_argument("unknown injection mode '" + std::string(name) + "'");
}

Mat12 ProcessNoise::continuousCovariance() const {
  if (gyro_psd < 0.0 || accel_psd < 0.0 || gyro_bias_psd < 0.0 || accel_bias_psd < 0.0) {
    throw std::invalid_argument("process noise densities must be nonnegative");
  }
  Mat12 q = Mat12::Zero();
  q.diagonal() << Vec3::Constant(gyro_psd), Vec3::Constant(accel_psd), Vec3::Constant(gyro_bias_psd),
      Vec3::Constant(accel_bias_psd);
  return q;
}

SystemMatrices systemMatrices(ErrorParameterization param, const NavState& x,
                              const ins::ImuSample& corrected, const EarthModel& earth,
                              const ProcessNoise& noise) {
  const Mat3 I = Mat3::Identity();
  const Mat3& C = x.att;
  const Mat3 W = earth.omegaSkew();
  SystemMatrices m;
  m.Qc = noise.continuousCovariance();
  m.G.block<3, 3>(kBg, 6) = I;
  m.G.block<3, 3>(kBa, 9) = I;

  switch (param) {
    case P::AdditiveEkf:
      m.F.block<3, 3>(kAtt, kAtt) = -W;
      m.F.block<3, 3>(kAtt, kBg) = C;
      m.F.block<3, 3>(kVel, kAtt) = -skew(C * corrected.accel);
      m.F.block<3, 3>(kVel, kVel) = -2.0 * W;
      m.F.block<3, 3>(kVel, kBa) = C;
      m.F.block<3, 3>(kPos, kVel) = I;
      m.G.block<3, 3>(kAtt, 0) = C;
      m.G.block<3, 3>(kVel, 3) = C;
      break;
    case P::LeftInvariant: {
      const Mat3 Wib = skew(corrected.gyro);
      m.F.block<3, 3>(kAtt, kAtt) = -Wib;
      m.F.block<3, 3>(kAtt, kBg) = -I;
      m.F.block<3, 3>(kVel, kAtt) = -skew(corrected.accel);
      m.F.block<3, 3>(kVel, kVel) = -Wib;
      m.F.block<3, 3>(kVel, kBa) = -I;
      m.F.block<3, 3>(kPos, kVel) = I;
      m.F.block<3, 3>(kPos, kPos) = -Wib;
      m.G.block<3, 3>(kAtt, 0) = -I;
      m.G.block<3, 3>(kVel, 3) = -I;
      break;
    }
    case P::RightInvariant: {
      const Vec3 nu = x.inertialVel(earth);
      const Mat3 nuC = skew(nu) * C;
      const Mat3 rC = skew(x.pos) * C;
      m.F.block<3, 3>(kAtt, kAtt) = -W;
      m.F.block<3, 3>(kAtt, kBg) = -C;
      m.F.block<3, 3>(kVel, kAtt) = skew(ins::gravitationalAccel(x.pos, earth));
      m.F.block<3, 3>(kVel, kVel) = -W;
      m.F.block<3, 3>(kVel, kBg) = -nuC;
      m.F.block<3, 3>(kVel, kBa) = -C;
      m.F.block<3, 3>(kPos, kVel) = I;
      m.F.block<3, 3>(kPos, kPos) = -W;
      m.F.block<3, 3>(kPos, kBg) = -rC;
      m.G.block<3, 3>(kAtt, 0) = -C;
      m.G.block<3, 3>(kVel, 0) = -nuC;
      m.G.block<3, 3>(kVel, 3) = -C;
      m.G.block<3, 3>(kPos, 0) = -rC;
      break;
    }
  }
  return m;
}

Mat9 leftJacobian(const NavState& x, const EarthModel& earth) {
  const Mat3 Ct = x.att.transpose();
  Mat9 J = Mat9::Zero();
  J.block<3, 3>(0, 0) = -Ct;
  J.block<3, 3>(3, 3) = -Ct;
  J.block<3, 3>(3, 6) = -Ct * earth.omegaSkew();
  J.block<3, 3>(6, 6) = -Ct;
  return J;
}

Mat9 leftJacobianInverse(const NavState& x, const EarthModel& earth) {
  const Mat3& C = x.att;
  Mat9 J = Mat9::Zero();
  J.block<3, 3>(0, 0) = -C;
  J.block<3, 3>(3, 3) = -C;
  J.block<3, 3>(3, 6) = earth.omegaSkew() * C;
  J.block<3, 3>(6, 6) = -C;
  return J;
}

Mat9 rightJacobian(const NavState& x, const EarthModel& earth) {
  const Mat3 I = Mat3::Identity();
  Mat9 J = Mat9::Zero();
  J.block<3, 3>(0, 0) = -I;
  J.block<3, 3>(3, 0) = -skew(x.inertialVel(earth));
  J.block<3, 3>(3, 3) = -I;
  J.block<3, 3>(3, 6) = -earth.omegaSkew();
  J.block<3, 3>(6, 0) = -skew(x.pos);
  J.block<3, 3>(6, 6) = -I;
  return J;
}

Mat9 rightJacobianInverse(const NavState& x, const EarthModel& earth) {
  const Mat3 I = Mat3::Identity();
  const Mat3 W = earth.omegaSkew();
  Mat9 J = Mat9::Zero();
  J.block<3, 3>(0, 0) = -I;
  J.block<3, 3>(3, 0) = skew(x.inertialVel(earth)) - W * skew(x.pos);
  J.block<3, 3>(3, 3) = -I;
  J.block<3, 3>(3, 6) = W;
  J.block<3, 3>(6, 0) = skew(x.pos);
  J.block<3, 3>(6, 6) = -I;
  return J;
}

namespace {

Mat9 adjointInverse(const lie::GroupState& chi) {
  const Mat3 Ct = chi.rot.transpose();
  Mat9 ad = Mat9::Zero();
  ad.block<3, 3>(0, 0) = Ct;
  ad.block<3, 3>(3, 0) = -Ct * skew(chi.nu);
  ad.block<3, 3>(3, 3) = Ct;
  ad.block<3, 3>(6, 0) = -Ct * skew(chi.rho);
  ad.block<3, 3>(6, 6) = Ct;
  return ad;
}

Mat9 navRelation(P from, P to, const NavState& x, const EarthModel& earth) {
  if (from == to) return Mat9::Identity();
  if (from == P::AdditiveEkf) {
    return to == P::LeftInvariant ? leftJacobian(x, earth) : rightJacobian(x, earth);
  }
  if (to == P::AdditiveEkf) {
    return from == P::LeftInvariant ? leftJacobianInverse(x, earth) : rightJacobianInverse(x, earth);
  }
  const lie::GroupState chi = x.group(earth);
  return from == P::LeftInvariant ? lie::adjoint(chi) : adjointInverse(chi);
}

Mat15 extend(const Mat9& nav) {
  Mat15 A = Mat15::Identity();
  A.topLeftCorner<9, 9>() = nav;
  return A;
}

}  // namespace

Mat15 relationMatrix(ErrorParameterization from, ErrorParameterization to, const NavState& x,
                     const EarthModel& earth) {
  return extend(navRelation(from, to, x, earth));
}

Mat15 transformationMatrix(ErrorParameterization original, ErrorParameterization target,
                           const NavState& x_plus, const NavState& x_minus, const EarthModel& earth) {
  // A^-1(x+) is the relation in the opposite direction evaluated at x+.
  return extend(navRelation(target, original, x_plus, earth) *
                navRelation(original, target, x_minus, earth));
}

Mat15 closedFormTransformation(ErrorParameterization original, ErrorParameterization target,
                               const NavState& x_plus, const NavState& x_minus,
                               const EarthModel& earth) {
  Mat9 T = Mat9::Identity();
  if (original == target) return extend(T);

  const Mat3 W = earth.omegaSkew();
  const Mat3& Cp = x_plus.att;
  const Mat3& Cm = x_minus.att;
  const Mat3 nu_p = skew(x_plus.inertialVel(earth));
  const Mat3 nu_m = skew(x_minus.inertialVel(earth));
  const Mat3 r_p = skew(x_plus.pos);
  const Mat3 r_m = skew(x_minus.pos);
  // Differences taken before skewing; r is of order 1e7 m.
  const Vec3 dr = x_plus.pos - x_minus.pos;
  const Mat3 d_r = skew(dr);
  const Mat3 d_nu = skew(x_plus.vel - x_minus.vel + earth.omega_ie.cross(dr));
  // C_b^e+ C_e^b- and its transpose C_e^b+ C_b^e-.
  const Mat3 fwd = Cp * Cm.transpose();
  const Mat3 bwd = Cp.transpose() * Cm;

  auto diag3 = [&T](const Mat3& R) {
    T.block<3, 3>(0, 0) = R;
    T.block<3, 3>(3, 3) = R;
    T.block<3, 3>(6, 6) = R;
  };

  if (original == P::AdditiveEkf && target == P::LeftInvariant) {
    diag3(fwd);
    T.block<3, 3>(3, 6) = fwd * W - W * fwd;
  } else if (original == P::LeftInvariant && target == P::AdditiveEkf) {
    diag3(bwd);
  } else if (original == P::AdditiveEkf && target == P::RightInvariant) {
    T.block<3, 3>(3, 0) = -d_nu + W * d_r;
    T.block<3, 3>(6, 0) = -d_r;
  } else if (original == P::RightInvariant && target == P::AdditiveEkf) {
    T.block<3, 3>(3, 0) = d_nu;
    T.block<3, 3>(6, 0) = d_r;
  } else if (original == P::LeftInvariant && target == P::RightInvariant) {
    diag3(bwd);
    T.block<3, 3>(3, 0) = -Cp.transpose() * d_nu * Cm;
    T.block<3, 3>(6, 0) = -Cp.transpose() * d_r * Cm;
  } else {  // right -> left
    diag3(fwd);
    T.block<3, 3>(3, 0) = nu_p * fwd - fwd * nu_m;
    T.block<3, 3>(6, 0) = r_p * fwd - fwd * r_m;
  }
  return extend(T);
}

ins::NavState injectError(ErrorParameterization param, const NavState& x_minus, const Vec15& xi,
                          const EarthModel& earth, InjectionMode mode) {
  if (!(xi.segment<3>(kAtt).norm() < std::numbers::pi)) {
    throw std::invalid_argument("attitude error must be below pi");
  }
  return applyCorrection(param, x_minus, xi, earth, mode);
}

ins::NavState applyCorrection(ErrorParameterization param, const NavState& x_minus, const Vec15& xi,
                              const EarthModel& earth, InjectionMode mode) {
  const Vec3 phi = xi.segment<3>(kAtt);
  if (!xi.allFinite()) throw std::invalid_argument("error state has non-finite entries");
  NavState out = x_minus;
  const bool first = mode == InjectionMode::FirstOrder;

  switch (param) {
    case P::AdditiveEkf:
      out.att = first ? lie::orthonormalize((Mat3::Identity() - skew(phi)) * x_minus.att)
                      : lie::orthonormalize(lie::so3Exp(-phi) * x_minus.att);
      out.vel = x_minus.vel - xi.segment<3>(kVel);
      out.pos = x_minus.pos - xi.segment<3>(kPos);
      break;
    case P::LeftInvariant:
    case P::RightInvariant: {
      const lie::GroupState chi = x_minus.group(earth);
      const Vec9 nav = xi.head<9>();
      lie::GroupState updated;
      if (first) {
        const Mat5 eta = Mat5::Identity() + lie::se23Hat(nav);
        const Mat5 m = param == P::LeftInvariant ? Mat5(chi.matrix() * eta) : Mat5(eta * chi.matrix());
        updated = lie::GroupState::fromMatrix(m);
      } else {
        const lie::GroupState eta = lie::se23Exp(nav);
        updated = param == P::LeftInvariant ? lie::compose(chi, eta) : lie::compose(eta, chi);
      }
      updated.rot = lie::orthonormalize(updated.rot);
      out = x_minus.withGroup(updated, earth);
      break;
    }
  }
  out.bg = x_minus.bg + xi.segment<3>(kBg);
  out.ba = x_minus.ba + xi.segment<3>(kBa);
  return out;
}

Vec15 errorBetween(ErrorParameterization param, const NavState& x_hat, const NavState& truth,
                   const EarthModel& earth) {
  Vec15 xi;
  switch (param) {
    case P::AdditiveEkf:
      xi.segment<3>(kAtt) = lie::so3Log(x_hat.att * truth.att.transpose());
      xi.segment<3>(kVel) = x_hat.vel - truth.vel;
      xi.segment<3>(kPos) = x_hat.pos - truth.pos;
      break;
    case P::LeftInvariant:
      xi.head<9>() = lie::se23Log(lie::compose(lie::inverse(x_hat.group(earth)), truth.group(earth)));
      break;
    case P::RightInvariant:
      xi.head<9>() = lie::se23Log(lie::compose(truth.group(earth), lie::inverse(x_hat.group(earth))));
      break;
  }
  xi.segment<3>(kBg) = truth.bg - x_hat.bg;
  xi.segment<3>(kBa) = truth.ba - x_hat.ba;
  return xi;
}

}  // namespace cteskf
