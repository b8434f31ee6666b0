#include "cteskf/dataset_io.h"
#include "cteskf/sim.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace cteskf;
using namespace cteskf::sim;
using ins::EarthModel;
using ins::NavState;
namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

fs::path scratchDir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("cteskf_test_sim_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void writeText(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

ScenarioConfig shortCircle() {
  ScenarioConfig c;
  c.duration = 20.0;
  c.imu.rate = 100.0;
  c.gnss_rate = 1.0;
  c.odo_rate = 10.0;
  c.seed = 7;
  return c;
}

std::vector<NavState> stationaryTruth(std::size_t n) {
  const Trajectory traj(TrajectoryParams{.kind = TrajectoryKind::Stationary});
  std::vector<NavState> t(n, traj.at(0.0).state);
  for (std::size_t k = 0; k < n; ++k) t[k].time = static_cast<double>(k);
  return t;
}

}  // namespace

TEST(Trajectory, StationaryHasZeroVelocity) {
  const Trajectory traj(TrajectoryParams{.kind = TrajectoryKind::Stationary, .heading = 0.7});
  for (double t : {0.0, 3.5, 100.0}) {
    const Kinematics k = traj.at(t);
    EXPECT_EQ(k.state.vel, Vec3::Zero());
    EXPECT_EQ(k.accel, Vec3::Zero());
    EXPECT_EQ(k.body_rate, Vec3::Zero());
  }
}

TEST(Trajectory, CircleSpeedIsConstant) {
  const Trajectory traj(TrajectoryParams{.kind = TrajectoryKind::Circle, .speed = 5.0, .radius = 50.0});
  for (double t = 0.0; t < 100.0; t += 0.37) {
    EXPECT_NEAR(traj.at(t).state.vel.norm(), 5.0, 1e-12);
  }
}

TEST(Trajectory, VelocityAndAccelerationMatchDerivatives) {
  for (TrajectoryKind kind : {TrajectoryKind::Circle, TrajectoryKind::FigureEight, TrajectoryKind::Waypoint}) {
    const Trajectory traj(TrajectoryParams{.kind = kind});
    const double h = 1e-3;
    for (double t = 1.0; t < 120.0; t += 3.3) {
      const Kinematics k = traj.at(t);
      const Vec3 dr = (traj.at(t + h).state.pos - traj.at(t - h).state.pos) / (2 * h);
      const Vec3 dv = (traj.at(t + h).state.vel - traj.at(t - h).state.vel) / (2 * h);
      EXPECT_LT((dr - k.state.vel).norm(), 1e-6) << toString(kind) << " t=" << t;
      EXPECT_LT((dv - k.accel).norm(), 1e-5) << toString(kind) << " t=" << t;
      // Body rate against the attitude derivative: C_dot = C (w x).
      const Mat3 dC = (traj.at(t + h).state.att - traj.at(t - h).state.att) / (2 * h);
      EXPECT_LT((dC - k.state.att * lie::skew(k.body_rate)).norm(), 1e-6) << toString(kind);
    }
  }
}

TEST(Trajectory, BodyAxesAreForwardAlongVelocity) {
  const Trajectory traj(TrajectoryParams{.kind = TrajectoryKind::FigureEight});
  for (double t = 0.5; t < 60.0; t += 2.1) {
    const NavState x = traj.at(t).state;
    const Vec3 vb = x.att.transpose() * x.vel;
    EXPECT_GT(vb.x(), 0.0);
    EXPECT_LT(std::hypot(vb.y(), vb.z()), 1e-9 * vb.norm());
  }
}

TEST(ImuSpec, PresetsAndUnitConversions) {
  const ImuSpec s = ImuSpec::tactical();
  EXPECT_EQ(s.arw, 0.15);
  EXPECT_EQ(s.vrw, 20.0);
  EXPECT_EQ(s.gyro_bias, 2.0);
  EXPECT_EQ(s.accel_bias, 3.6);
  EXPECT_EQ(ImuSpec::navigation().arw, 0.001);
  EXPECT_EQ(ImuSpec::navigation().vrw, 5.0);
  // 0.15 deg/sqrt(h) = 0.15 * (pi/180) / 60 rad/sqrt(s).
  EXPECT_NEAR(std::sqrt(s.gyroPsd()), 0.15 * kDeg / 60.0, 1e-18);
  EXPECT_NEAR(std::sqrt(s.accelPsd()), 20e-6 * kStandardGravity, 1e-18);
  EXPECT_NEAR(s.gyroBiasSigma(), 2.0 * kDeg / 3600.0, 1e-20);
  EXPECT_NEAR(s.accelBiasSigma(), 3.6e-6 * kStandardGravity, 1e-20);
  ImuSpec bad = s;
  bad.arw = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = s;
  bad.rate = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Synthesis, IdealImuAtPoleBalancesEarthRateAndGravity) {
  const EarthModel e;
  TrajectoryParams p{.kind = TrajectoryKind::Stationary};
  p.origin = {std::numbers::pi / 2, 0.0, 0.0};
  const Kinematics k = Trajectory(p).at(0.0);
  const ins::ImuSample u = idealImu(k, e);
  const Mat3& C = k.state.att;
  EXPECT_LT((u.gyro - C.transpose() * e.omega_ie).norm(), 1e-18);
  EXPECT_LT((u.accel + C.transpose() * ins::gravity(k.state.pos, e)).norm(), 1e-12);
  // Down is along -z at the north pole, so the reaction points up in the body frame.
  EXPECT_LT(u.accel.z(), -9.8);
}

TEST(Synthesis, IdealImuRoundTripsThroughMechanization) {
  const EarthModel e;
  // Smooth paths only: waypoint corners switch curvature abruptly, which midpoint sampling cannot follow exactly.
  for (TrajectoryKind kind : {TrajectoryKind::Circle, TrajectoryKind::FigureEight}) {
    const Trajectory traj(TrajectoryParams{.kind = kind});
    const double rate = 200.0, duration = 60.0;
    const auto truth = sampleTruth(traj, duration, rate);
    const ImuStream imu = synthesizeImu(traj, duration, ImuSpec::ideal(rate), e, 1);
    ASSERT_EQ(imu.samples.size(), truth.size());
    EXPECT_EQ(imu.initial_bias.gyro, Vec3::Zero());
    NavState x = truth.front();
    for (std::size_t k = 0; k + 1 < truth.size(); ++k) x = ins::propagateState(x, imu.samples[k], 1.0 / rate, e);
    const NavState& t = truth.back();
    EXPECT_LT(lie::so3Log(x.att * t.att.transpose()).norm(), 1e-5) << toString(kind);
    EXPECT_LT((x.pos - t.pos).norm(), 1e-3) << toString(kind);
    EXPECT_LT((x.vel - t.vel).norm(), 1e-4) << toString(kind);
  }
}

TEST(Synthesis, SameSeedIsBitIdenticalAndSeedsDiffer) {
  const EarthModel e;
  const ScenarioConfig c = shortCircle();
  const Dataset a = makeDataset(c, e);
  const Dataset b = makeDataset(c, e);
  ASSERT_EQ(a.streams.imu.size(), b.streams.imu.size());
  for (std::size_t k = 0; k < a.streams.imu.size(); ++k) {
    ASSERT_EQ(a.streams.imu[k].gyro, b.streams.imu[k].gyro);
    ASSERT_EQ(a.streams.imu[k].accel, b.streams.imu[k].accel);
  }
  ASSERT_EQ(a.streams.gnss.size(), 20u);
  ASSERT_EQ(a.streams.odo.size(), 200u);
  for (std::size_t k = 0; k < a.streams.gnss.size(); ++k) ASSERT_EQ(a.streams.gnss[k].vel, b.streams.gnss[k].vel);
  ScenarioConfig c2 = c;
  c2.seed = 8;
  const Dataset d = makeDataset(c2, e);
  EXPECT_NE(a.streams.imu[10].gyro, d.streams.imu[10].gyro);
  EXPECT_NE(a.streams.gnss[3].vel, d.streams.gnss[3].vel);
}

TEST(Synthesis, ObservationNoiseHasConfiguredSpread) {
  const auto truth = stationaryTruth(10001);
  const auto gnss = synthesizeGnss(truth, 1.0, 1.0, 0.2, 3);
  const auto odo = synthesizeOdo(truth, 1.0, 1.0, 0.1, 3);
  ASSERT_EQ(gnss.size(), 10000u);
  ASSERT_EQ(odo.size(), 10000u);
  Vec3 gs = Vec3::Zero(), os = Vec3::Zero(), om = Vec3::Zero();
  for (std::size_t i = 0; i < gnss.size(); ++i) {
    gs += (gnss[i].vel - truth[i + 1].vel).cwiseAbs2();
    os += odo[i].vel_body.cwiseAbs2();
    om += odo[i].vel_body;
  }
  for (int a = 0; a < 3; ++a) {
    EXPECT_NEAR(std::sqrt(gs[a] / 1e4), 0.2, 0.01);
    EXPECT_NEAR(std::sqrt(os[a] / 1e4), 0.1, 0.005);
    EXPECT_NEAR(om[a] / 1e4, 0.0, 5 * 0.1 / 100.0);
  }
}

TEST(Synthesis, ZeroSigmaGivesTruth) {
  const auto truth = sampleTruth(Trajectory(TrajectoryParams{}), 20.0, 100.0);
  const auto gnss = synthesizeGnss(truth, 100.0, 1.0, 0.0, 5);
  const auto odo = synthesizeOdo(truth, 100.0, 10.0, 0.0, 5);
  ASSERT_EQ(gnss.size(), 20u);
  ASSERT_EQ(odo.size(), 200u);
  for (std::size_t i = 0; i < gnss.size(); ++i) {
    const NavState& t = truth[(i + 1) * 100];
    EXPECT_EQ(gnss[i].time, t.time);
    EXPECT_EQ(gnss[i].vel, t.vel);
  }
  for (std::size_t i = 0; i < odo.size(); ++i) {
    const NavState& t = truth[(i + 1) * 10];
    EXPECT_LT((odo[i].vel_body - t.att.transpose() * t.vel).norm(), 1e-14);
  }
  ScenarioConfig c = shortCircle();
  c.gnss_sigma = 0.0;
  EXPECT_THROW(makeDataset(c, EarthModel{}), std::invalid_argument);
}

TEST(Scenario, ValidateRejectsBadConfigs) {
  ScenarioConfig c = shortCircle();
  EXPECT_NO_THROW(c.validate());
  c.duration = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = shortCircle();
  c.gnss_rate = 3.0;  // does not divide 100 Hz
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = shortCircle();
  c.odo_rate = 0.0;
  EXPECT_NO_THROW(c.validate());
}

TEST(Scenario, ParseVariant) {
  EXPECT_EQ(parseVariant("ekf").param, ErrorParameterization::AdditiveEkf);
  EXPECT_EQ(parseVariant("l-inekf").param, ErrorParameterization::LeftInvariant);
  EXPECT_EQ(parseVariant("r-inekf").param, ErrorParameterization::RightInvariant);
  EXPECT_EQ(parseVariant("ct-ekf").strategy, UpdateStrategy::Transform);
  EXPECT_EQ(parseVariant("ct-ekf-switch").strategy, UpdateStrategy::Switch);
  EXPECT_THROW(parseVariant("ukf"), std::invalid_argument);
  EXPECT_THROW(parseVariant(""), std::invalid_argument);
}

TEST(Scenario, ComputeRmseOnKnownSeries) {
  std::vector<EstimateRecord> r(4);
  for (int i = 0; i < 4; ++i) {
    r[i].x.time = i;
    r[i].att_err_deg = Vec3(i, -i, 0);
    r[i].vel_err = Vec3::Constant(2.0);
  }
  const Rmse all = computeRmse(r, 0.0);
  EXPECT_NEAR(all.att_deg.x(), std::sqrt((0 + 1 + 4 + 9) / 4.0), 1e-15);
  EXPECT_NEAR(all.att_deg.y(), all.att_deg.x(), 1e-15);
  EXPECT_EQ(all.vel, Vec3::Constant(2.0));
  const Rmse late = computeRmse(r, 2.0);
  EXPECT_NEAR(late.att_deg.x(), std::sqrt((4 + 9) / 2.0), 1e-15);
  EXPECT_THROW(computeRmse(r, 10.0), std::invalid_argument);
}

TEST(Scenario, ZeroInitialErrorConverges) {
  const EarthModel e;
  ScenarioConfig c;
  c.duration = 120.0;
  c.odo_rate = 10.0;
  c.settle = 60.0;
  const Dataset d = makeDataset(c, e);
  const ScenarioResult r = runScenario(c, d, parseVariant("ekf"), e, InjectionMode::Retraction);
  ASSERT_FALSE(r.diverged) << r.failure;
  EXPECT_EQ(r.records.size(), d.truth.size());
  EXPECT_LT(r.rmse.att_deg.maxCoeff(), 0.5);
  EXPECT_LT(r.rmse.vel.maxCoeff(), 0.2);
}

TEST(Scenario, IdenticalInputsGiveIdenticalMetrics) {
  const EarthModel e;
  const ScenarioConfig c = shortCircle();
  const Dataset d = makeDataset(c, e);
  const Variant v = parseVariant("ct-ekf");
  const ScenarioResult a = runScenario(c, d, v, e, InjectionMode::Retraction);
  const ScenarioResult b = runScenario(c, d, v, e, InjectionMode::Retraction);
  EXPECT_EQ(a.rmse.att_deg, b.rmse.att_deg);
  EXPECT_EQ(a.rmse.pos, b.rmse.pos);
  EXPECT_EQ(a.records.back().x.att, b.records.back().x.att);
}

TEST(Scenario, RmseGrowsWithObservationNoise) {
  const EarthModel e;
  double prev = 0.0;
  for (double sigma : {0.02, 0.2, 2.0}) {
    ScenarioConfig c = shortCircle();
    c.duration = 60.0;
    c.odo_rate = 0.0;
    c.gnss_sigma = sigma;
    c.settle = 10.0;
    const Dataset d = makeDataset(c, e);
    const ScenarioResult r = runScenario(c, d, parseVariant("ekf"), e, InjectionMode::Retraction);
    ASSERT_FALSE(r.diverged);
    EXPECT_GT(r.rmse.vel.norm(), prev) << "sigma " << sigma;
    prev = r.rmse.vel.norm();
  }
}

TEST(Sweep, YawGrid) {
  const auto g = yawGrid(-120.0, 120.0, 5.0);
  ASSERT_EQ(g.size(), 49u);
  EXPECT_EQ(g.front(), -120.0);
  EXPECT_EQ(g.back(), 120.0);
  EXPECT_EQ(yawGrid(0.0, 0.0, 5.0), std::vector<double>{0.0});
  EXPECT_THROW(yawGrid(10.0, -10.0, 5.0), std::invalid_argument);
  EXPECT_THROW(yawGrid(0.0, 10.0, 0.0), std::invalid_argument);
}

TEST(Sweep, NoInitialErrorGivesNearIdenticalVariants) {
  const EarthModel e;
  SweepConfig s;
  s.base = shortCircle();
  s.base.imu = ImuSpec::ideal(100.0);
  s.base.gnss_sigma = 1e-3;
  s.base.odo_sigma = 1e-3;
  s.base.vel_sigma = 1e-3;
  s.base.pos_sigma = 1e-3;
  s.base.min_attitude_sigma_deg = 1e-3;
  s.yaw_grid_deg = {0.0};
  s.seeds = 2;
  s.variants = {"ekf", "l-inekf", "r-inekf", "ct-ekf"};
  s.jobs = 2;
  const SweepTable t = monteCarloSweep(s, e);
  ASSERT_EQ(t.yaw_rmse.size(), 1u);
  ASSERT_EQ(t.yaw_rmse[0].size(), 4u);
  for (double v : t.yaw_rmse[0]) {
    ASSERT_TRUE(std::isfinite(v));
    EXPECT_LT(v, 1e-2);
    EXPECT_NEAR(v, t.yaw_rmse[0][0], 1e-3);
  }
}

TEST(Sweep, ResultIndependentOfJobCount) {
  const EarthModel e;
  SweepConfig s;
  s.base = shortCircle();
  s.base.duration = 10.0;
  s.base.attitude_error_deg = Vec3(0, 0, 30);
  s.yaw_grid_deg = {-30.0, 30.0};
  s.seeds = 2;
  s.variants = {"ekf", "ct-ekf"};
  s.jobs = 1;
  const SweepTable a = monteCarloSweep(s, e);
  s.jobs = 3;
  const SweepTable b = monteCarloSweep(s, e);
  EXPECT_EQ(a.yaw_rmse, b.yaw_rmse);
  EXPECT_EQ(a.yaw_deg, s.yaw_grid_deg);
}

TEST(DatasetIo, RoundTripGivesIdenticalMetrics) {
  const EarthModel e;
  const ScenarioConfig c = shortCircle();
  const Dataset d = makeDataset(c, e);
  const fs::path dir = scratchDir("roundtrip");
  io::writeDataset(dir, d);
  for (const char* f : {"imu.csv", "gnss_vel.csv", "odo.csv", "truth.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const Dataset r = io::replayDataset(dir);
  ASSERT_EQ(r.streams.imu.size(), d.streams.imu.size());
  ASSERT_EQ(r.streams.gnss.size(), d.streams.gnss.size());
  ASSERT_EQ(r.streams.odo.size(), d.streams.odo.size());
  for (std::size_t k = 0; k < d.streams.imu.size(); ++k) {
    ASSERT_EQ(r.streams.imu[k].time, d.streams.imu[k].time);
    ASSERT_EQ(r.streams.imu[k].gyro, d.streams.imu[k].gyro);
    ASSERT_EQ(r.streams.imu[k].accel, d.streams.imu[k].accel);
  }
  for (const char* name : {"ekf", "r-inekf", "ct-ekf"}) {
    const Variant v = parseVariant(name);
    const ScenarioResult a = runScenario(c, d, v, e, InjectionMode::Retraction);
    const ScenarioResult b = runScenario(c, r, v, e, InjectionMode::Retraction);
    // Truth attitude goes through a quaternion, so only rounding-level differences are allowed.
    EXPECT_NEAR(a.rmse.att_deg.norm(), b.rmse.att_deg.norm(), 1e-9) << name;
    EXPECT_NEAR(a.rmse.vel.norm(), b.rmse.vel.norm(), 1e-9) << name;
    EXPECT_NEAR(a.rmse.pos.norm(), b.rmse.pos.norm(), 1e-6) << name;
  }
  fs::remove_all(dir);
}

TEST(DatasetIo, MissingOrEmptyObservationFilesGivePropagationOnly) {
  const EarthModel e;
  ScenarioConfig c = shortCircle();
  c.duration = 5.0;
  const Dataset d = makeDataset(c, e);
  const fs::path dir = scratchDir("empty");
  io::writeDataset(dir, d);
  fs::remove(dir / "odo.csv");
  writeText(dir / "gnss_vel.csv", "# no fixes\nt,vx,vy,vz,sx,sy,sz\n");
  const Dataset r = io::replayDataset(dir);
  EXPECT_TRUE(r.streams.gnss.empty());
  EXPECT_TRUE(r.streams.odo.empty());
  const ScenarioResult res = runScenario(c, r, parseVariant("ekf"), e, InjectionMode::Retraction);
  EXPECT_FALSE(res.diverged);
  // Without updates the covariance only grows.
  EXPECT_GT(res.records.back().trace[1], res.records.front().trace[1]);
  fs::remove_all(dir);
}

TEST(DatasetIo, RejectsMalformedFilesWithLineNumbers) {
  const fs::path dir = scratchDir("bad");
  auto expectError = [&](const std::string& text, const std::string& fragment) {
    writeText(dir / "imu.csv", text);
    try {
      io::readImuCsv(dir / "imu.csv");
      ADD_FAILURE() << "no error for: " << text;
    } catch (const io::ParseError& err) {
      EXPECT_NE(std::string(err.what()).find(fragment), std::string::npos) << err.what();
    }
  };
  const std::string h = "t,gx,gy,gz,ax,ay,az\n";
  expectError(h + "0,0,0,0,0,0,0\n0.01,0,0,0,0,0,0\n0.005,0,0,0,0,0,0\n", "imu.csv:4");
  expectError("# comment\n" + h + "0,0,0,0,0,0\n", "imu.csv:3");
  expectError(h + "0,0,0,0,0,0,abc\n", "imu.csv:2");
  expectError("", "header");
  EXPECT_THROW(io::readTruthCsv(dir / "missing.csv"), io::ParseError);
  writeText(dir / "gnss_vel.csv", "t,vx,vy,vz,sx,sy,sz\n1,0,0,0,0.2,0,0.2\n");
  EXPECT_THROW(io::readGnssCsv(dir / "gnss_vel.csv"), io::ParseError);
  fs::remove_all(dir);
}

TEST(DatasetIo, EstimatesAndRmseTables) {
  const fs::path dir = scratchDir("out");
  std::vector<EstimateRecord> recs(2);
  recs[1].x.time = 0.5;
  io::writeEstimatesCsv(dir / "estimates.csv", recs);
  SweepTable t{{-5.0, 5.0}, {"ekf", "ct-ekf"}, {{1.0, 0.5}, {std::nan(""), 0.25}}};
  io::writeRmseCsv(dir / "rmse.csv", t);
  std::ifstream est(dir / "estimates.csv"), rm(dir / "rmse.csv");
  std::string line;
  std::getline(est, line);
  EXPECT_EQ(line.rfind("t,qw,qx,qy,qz,vx,vy,vz,rx,ry,rz", 0), 0u) << line;
  int rows = 0;
  while (std::getline(est, line)) ++rows;
  EXPECT_EQ(rows, 2);
  std::getline(rm, line);
  EXPECT_EQ(line, "yaw_deg,ekf,ct-ekf");
  std::getline(rm, line);
  EXPECT_EQ(line, "-5,1,0.5");
  std::getline(rm, line);
  EXPECT_EQ(line.find("5,"), 0u);
  EXPECT_NE(line.find("nan"), std::string::npos) << line;
  fs::remove_all(dir);
}
