#include "cteskf/filter.h"
#include "cteskf/geodesy.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace cteskf;
using ins::NavState;
using P = ErrorParameterization;

namespace {

Vec3 randomVec(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  return Vec3(n(rng), n(rng), n(rng));
}

Mat15 randomCovariance(std::mt19937_64& rng) {
  Mat15 L = Mat15::Zero();
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j <= i; ++j) L(i, j) = n(rng) * (i == j ? 1.0 : 0.2);
  Vec15 scale;
  scale << Vec3::Constant(0.05), Vec3::Constant(0.5), Vec3::Constant(3.0), Vec3::Constant(1e-4),
      Vec3::Constant(1e-2);
  const Mat15 S = scale.asDiagonal();
  return S * (L * L.transpose() + 0.1 * Mat15::Identity()) * S;
}

FilterState randomFilter(std::mt19937_64& rng, P param) {
  FilterState fs;
  fs.x.att = lie::so3Exp(randomVec(rng, 1.0));
  fs.x.vel = randomVec(rng, 5.0);
  fs.x.pos = ins::geodeticToEcef({0.6, 0.2, 300.0});
  fs.x.time = 12.0;
  fs.P = randomCovariance(rng);
  fs.param = param;
  return fs;
}

Observation gnssNear(const NavState& x, std::mt19937_64& rng, double spread) {
  return GnssVelObs{x.time, x.vel + randomVec(rng, spread), Vec3(0.2, 0.2, 0.3)};
}

Observation odoNear(const NavState& x, std::mt19937_64& rng, double spread) {
  return OdoObs{x.time, x.att.transpose() * x.vel + randomVec(rng, spread), Vec3(0.1, 0.1, 0.1)};
}

}  // namespace

TEST(CheckedSymmetric, SymmetrizesAndRejectsNonFinite) {
  Mat15 A = Mat15::Identity();
  A(0, 1) = 1.0;
  const Mat15 S = checkedSymmetric(A);
  EXPECT_EQ(S(0, 1), 0.5);
  EXPECT_EQ(S(1, 0), 0.5);
  A(3, 3) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(checkedSymmetric(A), FilterDivergence);
  A(3, 3) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(checkedSymmetric(A), FilterDivergence);
}

TEST(Propagate, CovarianceMatchesDirectFormula) {
  std::mt19937_64 rng(1);
  for (P p : kAllParameterizations) {
    FilterState fs = randomFilter(rng, p);
    fs.options.noise = {1e-7, 1e-5, 1e-12, 1e-9};
    fs.x.bg = randomVec(rng, 1e-4);
    const ins::ImuSample u{fs.x.time, randomVec(rng, 0.1), Vec3(0.1, 0.2, 9.8)};
    const double dt = 0.005;
    const FilterState out = propagate(fs, u, dt);
    const SystemMatrices m = systemMatrices(p, fs.x, ins::correctedImu(u, fs.x), fs.options.earth, fs.options.noise);
    const Mat15 Phi = Mat15::Identity() + m.F * dt;
    const Mat15 want = Phi * fs.P * Phi.transpose() + m.G * m.Qc * m.G.transpose() * dt;
    EXPECT_LT((out.P - want).norm(), 1e-13 * want.norm()) << toString(p);
    const NavState x = ins::propagateState(fs.x, u, dt, fs.options.earth);
    EXPECT_EQ(out.x.pos, x.pos);
    EXPECT_EQ(out.x.att, x.att);
  }
}

TEST(Propagate, NonFiniteCovarianceDiverges) {
  std::mt19937_64 rng(2);
  FilterState fs = randomFilter(rng, P::AdditiveEkf);
  fs.P(4, 4) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(propagate(fs, ins::ImuSample{}, 0.01), FilterDivergence);
}

TEST(UpdatePlain, MatchesTextbookKalmanStep) {
  std::mt19937_64 rng(3);
  for (P p : kAllParameterizations) {
    for (int kind = 0; kind < 2; ++kind) {
      const FilterState fs = randomFilter(rng, p);
      const Observation obs = kind == 0 ? gnssNear(fs.x, rng, 0.5) : odoNear(fs.x, rng, 0.5);
      const UpdateResult r = updatePlain(fs, obs);

      const Mat3x15 H = observationMatrix(p, fs.x, kindOf(obs), fs.options.earth);
      const Mat3 R = noiseCovariance(obs);
      const Eigen::Matrix<double, 15, 3> K = fs.P * H.transpose() * (H * fs.P * H.transpose() + R).inverse();
      const Vec3 dz = innovation(fs.x, obs, fs.options.earth, 1e-6);
      const Mat15 Ppost = (Mat15::Identity() - K * H) * fs.P;
      EXPECT_LT((r.state.P - Ppost).norm(), 1e-12 * fs.P.norm());
      EXPECT_LT((r.report.correction - K * dz).norm(), 1e-12 * (K * dz).norm());
      const NavState x = applyCorrection(p, fs.x, K * dz, fs.options.earth, fs.options.injection);
      EXPECT_LT(stateDiscrepancy(r.state.x, x), 1e-8);
      EXPECT_LE(r.report.trace_after, r.report.trace_before);
      EXPECT_EQ(r.report.update_param, p);
    }
  }
}

TEST(UpdatePlain, RepeatedUpdatesFollowInformationForm) {
  // Velocity-only covariance with GNSS velocity in the additive form: information adds up.
  FilterState fs;
  fs.x.pos = ins::geodeticToEcef({0.1, 0.1, 0.0});
  fs.P = Mat15::Identity();
  fs.P.block<3, 3>(kVel, kVel) = Vec3(4.0, 1.0, 0.25).asDiagonal();
  const Vec3 sigma(0.2, 0.5, 1.0);
  for (int n = 1; n <= 10; ++n) {
    fs = updatePlain(fs, GnssVelObs{0.0, Vec3::Zero(), sigma}).state;
    for (int i = 0; i < 3; ++i) {
      const double p0 = fs.P.block<3, 3>(kVel, kVel).diagonal()(i);
      const double want = 1.0 / (1.0 / Vec3(4.0, 1.0, 0.25)(i) + n / (sigma(i) * sigma(i)));
      EXPECT_NEAR(p0, want, 1e-14);
    }
  }
  EXPECT_EQ(fs.P(0, 0), 1.0);  // attitude is unobserved here
}

TEST(UpdatePlain, NegligibleGainLeavesStateAndCovariance) {
  std::mt19937_64 rng(4);
  FilterState fs = randomFilter(rng, P::LeftInvariant);
  fs.options.max_innovation_condition = 1e20;
  const Observation obs = GnssVelObs{fs.x.time, fs.x.vel + Vec3(1, 1, 1), Vec3::Constant(1e8)};
  const UpdateResult r = updatePlain(fs, obs);
  EXPECT_LT(stateDiscrepancy(r.state.x, fs.x), 1e-12);
  EXPECT_LT((r.state.P - fs.P).norm(), 1e-12);
}

TEST(UpdatePlain, JosephFormAgreesWithShortForm) {
  std::mt19937_64 rng(5);
  FilterState fs = randomFilter(rng, P::RightInvariant);
  const Observation obs = odoNear(fs.x, rng, 0.3);
  const UpdateResult a = updatePlain(fs, obs);
  fs.options.joseph = true;
  const UpdateResult b = updatePlain(fs, obs);
  EXPECT_LT((a.state.P - b.state.P).norm(), 1e-10 * a.state.P.norm());
}

TEST(UpdatePlain, RejectsBadObservations) {
  std::mt19937_64 rng(6);
  const FilterState fs = randomFilter(rng, P::AdditiveEkf);
  EXPECT_THROW(updatePlain(fs, GnssVelObs{fs.x.time, Vec3::Zero(), Vec3::Zero()}), std::invalid_argument);
  EXPECT_THROW(updatePlain(fs, GnssVelObs{fs.x.time + 1.0}), std::invalid_argument);
  FilterState bad = fs;
  bad.P.setZero();
  bad.options.max_innovation_condition = 10.0;
  EXPECT_THROW(updatePlain(bad, GnssVelObs{fs.x.time, Vec3::Zero(), Vec3(1e-3, 1.0, 1e3)}), FilterDivergence);
}

TEST(UpdateTransform, SameTargetIsPlain) {
  std::mt19937_64 rng(7);
  for (P p : kAllParameterizations) {
    const FilterState fs = randomFilter(rng, p);
    const Observation obs = gnssNear(fs.x, rng, 0.3);
    const UpdateResult a = updatePlain(fs, obs), b = updateTransform(fs, obs, p);
    EXPECT_EQ(a.state.P, b.state.P);
    EXPECT_EQ(a.state.x.pos, b.state.x.pos);
    EXPECT_FALSE(b.report.applied.has_value());
  }
}

TEST(UpdateSwitch, SameTargetIsPlain) {
  std::mt19937_64 rng(8);
  const FilterState fs = randomFilter(rng, P::LeftInvariant);
  const Observation obs = odoNear(fs.x, rng, 0.3);
  const UpdateResult a = updatePlain(fs, obs), b = updateSwitch(fs, obs, P::LeftInvariant);
  EXPECT_LT((a.state.P - b.state.P).norm(), 1e-12 * a.state.P.norm());
  EXPECT_LT(stateDiscrepancy(a.state.x, b.state.x), 1e-12);
}

TEST(UpdateSwitch, MatchesTransformForSmallCorrections) {
  // With first-order injection the two routes give the same state up to second order, and
  // covariances that are then related by the same T.
  std::mt19937_64 rng(9);
  for (P from : kAllParameterizations) {
    for (P to : kAllParameterizations) {
      if (from == to) continue;
      FilterState fs = randomFilter(rng, from);
      fs.options.injection = InjectionMode::FirstOrder;
      fs.P *= 1e-4;
      const Observation obs = gnssNear(fs.x, rng, 0.01);
      const UpdateResult s = updateSwitch(fs, obs, to);
      const UpdateResult t = updateTransform(fs, obs, to);
      EXPECT_LT(stateDiscrepancy(s.state.x, t.state.x), 1e-7) << toString(from) << " -> " << toString(to);
      EXPECT_LT((s.state.P - t.state.P).norm(), 1e-4 * t.state.P.norm()) << toString(from) << " -> " << toString(to);
      EXPECT_EQ(s.state.param, from);
      EXPECT_EQ(s.report.update_param, to);
      ASSERT_TRUE(s.report.forward_switch.has_value());
    }
  }
}

TEST(Dispatch, StrategyAndTargets) {
  std::mt19937_64 rng(10);
  FilterState fs = randomFilter(rng, P::AdditiveEkf);
  fs.options.strategy = UpdateStrategy::Switch;
  const UpdateResult g = update(fs, gnssNear(fs.x, rng, 0.1));
  EXPECT_EQ(g.report.update_param, fs.options.gnss_target);
  const UpdateResult o = update(fs, odoNear(fs.x, rng, 0.1));
  EXPECT_EQ(o.report.update_param, fs.options.odo_target);
  fs.options.strategy = UpdateStrategy::Plain;
  EXPECT_EQ(update(fs, odoNear(fs.x, rng, 0.1)).report.update_param, P::AdditiveEkf);
}

TEST(RunFilter, StationaryWithPerfectDataStaysPut) {
  FilterState fs;
  fs.x.pos = ins::geodeticToEcef({0.8, 0.1, 200.0});
  fs.P = Mat15::Identity() * 1e-6;
  fs.options.noise = {1e-10, 1e-8, 0.0, 0.0};
  const auto& e = fs.options.earth;
  SensorStreams s;
  for (int i = 0; i <= 1000; ++i) {
    s.imu.push_back({i * 0.01, fs.x.att.transpose() * e.omega_ie, -fs.x.att.transpose() * ins::gravity(fs.x.pos, e)});
  }
  for (int i = 1; i <= 10; ++i) s.gnss.push_back({static_cast<double>(i), Vec3::Zero(), Vec3::Constant(0.1)});
  int epochs = 0, updates = 0;
  RunHooks hooks;
  hooks.on_epoch = [&](const FilterState&) { ++epochs; };
  hooks.on_update = [&](const FilterState&, const UpdateReport& r) {
    ++updates;
    EXPECT_LT(r.innovation.norm(), 1e-6);
  };
  const FilterState out = runFilter(fs, s, hooks);
  EXPECT_EQ(epochs, 1000);
  EXPECT_EQ(updates, 10);
  EXPECT_NEAR(out.x.time, 10.0, 1e-9);
  EXPECT_LT((out.x.pos - fs.x.pos).norm(), 1e-4);
  EXPECT_LT(out.x.vel.norm(), 1e-6);

  hooks.max_updates = 3;
  updates = 0;
  runFilter(fs, s, hooks);
  EXPECT_EQ(updates, 3);
  EXPECT_THROW(runFilter(fs, SensorStreams{}, {}), std::invalid_argument);
}

TEST(StateDiscrepancy, TakesLargestComponent) {
  NavState a, b;
  b.vel = Vec3(0.3, 0, 0);
  b.pos = Vec3(0, 0.5, 0);
  b.att = lie::so3Exp(Vec3(0, 0, 0.1));
  EXPECT_NEAR(stateDiscrepancy(a, b), 0.5, 1e-15);
  EXPECT_EQ(stateDiscrepancy(a, a), 0.0);
}
