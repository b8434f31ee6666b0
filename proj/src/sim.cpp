#include "cteskf/sim.h"

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace cteskf::sim {

using ins::NavState;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Mat3 eulerToRotation(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

void checkRate(double imu_rate, double rate, const char* what) {
  if (rate < 0.0) throw std::invalid_argument(std::string(what) + " rate must be non-negative");
  if (rate == 0.0) return;
  const double q = imu_rate / rate;
  if (q < 1.0 || std::abs(q - std::round(q)) > 1e-9) {
    throw std::invalid_argument(std::string(what) + " rate must divide the IMU rate");
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("scenario duration must be positive");
  imu.validate();
  checkRate(imu.rate, gnss_rate, "GNSS");
  checkRate(imu.rate, odo_rate, "odometer");
  if (gnss_rate > 0.0 && !(gnss_sigma > 0.0)) throw std::invalid_argument("GNSS sigma must be positive");
  if (odo_rate > 0.0 && !(odo_sigma > 0.0)) throw std::invalid_argument("odometer sigma must be positive");
  if (!(vel_sigma > 0.0) || !(pos_sigma > 0.0) || !(min_attitude_sigma_deg > 0.0)) {
    throw std::invalid_argument("initial sigmas must be positive");
  }
  if (settle < 0.0 || settle >= duration) throw std::invalid_argument("settle must lie in [0, duration)");
}

Dataset makeDataset(const ScenarioConfig& cfg, const ins::EarthModel& earth) {
  cfg.validate();
  const Trajectory traj(cfg.trajectory);
  Dataset d;
  d.truth = sampleTruth(traj, cfg.duration, cfg.imu.rate);
  ImuStream imu = synthesizeImu(traj, cfg.duration, cfg.imu, earth, cfg.seed);
  for (std::size_t k = 0; k < d.truth.size(); ++k) {
    d.truth[k].bg = imu.bias[k].gyro;
    d.truth[k].ba = imu.bias[k].accel;
  }
  d.streams.imu = std::move(imu.samples);
  d.streams.gnss = synthesizeGnss(d.truth, cfg.imu.rate, cfg.gnss_rate, cfg.gnss_sigma, cfg.seed);
  d.streams.odo = synthesizeOdo(d.truth, cfg.imu.rate, cfg.odo_rate, cfg.odo_sigma, cfg.seed);
  return d;
}

Variant parseVariant(std::string_view name) {
  Variant v;
  v.name = std::string(name);
  if (name == "ekf") return v;
  if (name == "l-inekf") {
    v.param = ErrorParameterization::LeftInvariant;
    return v;
  }
  if (name == "r-inekf") {
    v.param = ErrorParameterization::RightInvariant;
    return v;
  }
  if (name == "ct-ekf") {
    v.strategy = UpdateStrategy::Transform;
    return v;
  }
  if (name == "ct-ekf-switch") {
    v.strategy = UpdateStrategy::Switch;
    return v;
  }
  throw std::invalid_argument("unknown filter variant '" + std::string(name) + "'");
}

Mat15 initialCovarianceEkf(const ScenarioConfig& cfg, const NavState& truth0) {
  const ins::Geodetic llh = ins::ecefToGeodetic(truth0.pos);
  const Mat3 Cne = ins::nedToEcef(llh.lat, llh.lon);
  Vec3 att_sigma;
  for (int i = 0; i < 3; ++i) {
    att_sigma[i] = std::max(std::abs(cfg.attitude_error_deg[i]), cfg.min_attitude_sigma_deg) * kDeg;
  }
  Mat15 P = Mat15::Zero();
  P.block<3, 3>(kAtt, kAtt) = Cne * att_sigma.cwiseAbs2().asDiagonal() * Cne.transpose();
  P.block<3, 3>(kVel, kVel) = Mat3::Identity() * cfg.vel_sigma * cfg.vel_sigma;
  P.block<3, 3>(kPos, kPos) = Mat3::Identity() * cfg.pos_sigma * cfg.pos_sigma;
  // A floor keeps P invertible with an ideal IMU.
  const double sg = std::max(cfg.imu.gyroBiasSigma(), 1e-7);
  const double sa = std::max(cfg.imu.accelBiasSigma(), 1e-5);
  P.block<3, 3>(kBg, kBg) = Mat3::Identity() * sg * sg;
  P.block<3, 3>(kBa, kBa) = Mat3::Identity() * sa * sa;
  return P;
}

FilterState initialFilter(const Variant& v, const ScenarioConfig& cfg, const NavState& truth0,
                          const ins::EarthModel& earth, InjectionMode injection) {
  const ins::Geodetic llh = ins::ecefToGeodetic(truth0.pos);
  const Mat3 Cne = ins::nedToEcef(llh.lat, llh.lon);

  FilterState fs;
  fs.x = truth0;
  fs.x.bg = fs.x.ba = Vec3::Zero();
  const Mat3 err = eulerToRotation(cfg.attitude_error_deg * kDeg);
  fs.x.att = Cne * err * Cne.transpose() * truth0.att;
  fs.param = v.param;
  fs.options.strategy = v.strategy;
  fs.options.gnss_target = v.gnss_target;
  fs.options.odo_target = v.odo_target;
  fs.options.injection = injection;
  fs.options.earth = earth;
  fs.options.noise = cfg.imu.processNoise();
  fs.options.obs_time_tolerance = 0.5 / cfg.imu.rate;

  const Mat15 A = relationMatrix(ErrorParameterization::AdditiveEkf, v.param, fs.x, earth);
  fs.P = A * initialCovarianceEkf(cfg, truth0) * A.transpose();
  return fs;
}

namespace {

EstimateRecord makeRecord(const FilterState& fs, const NavState& truth, const Mat3& Cen) {
  EstimateRecord r;
  r.x = fs.x;
  for (int b = 0; b < 5; ++b) r.trace[b] = fs.P.block<3, 3>(3 * b, 3 * b).trace();
  r.att_err_deg = Cen * lie::so3Log(fs.x.att * truth.att.transpose()) / kDeg;
  r.vel_err = Cen * (fs.x.vel - truth.vel);
  r.pos_err = Cen * (fs.x.pos - truth.pos);
  return r;
}

}  // namespace

ScenarioResult runScenario(const ScenarioConfig& cfg, const Dataset& data, const Variant& v,
                           const ins::EarthModel& earth, InjectionMode injection) {
  if (data.truth.size() != data.streams.imu.size()) {
    throw std::invalid_argument("truth and IMU streams differ in length");
  }
  ScenarioResult res;
  res.variant = v.name;
  FilterState fs = initialFilter(v, cfg, data.truth.front(), earth, injection);
  const ins::Geodetic llh = ins::ecefToGeodetic(data.truth.front().pos);
  const Mat3 Cen = ins::nedToEcef(llh.lat, llh.lon).transpose();

  res.records.reserve(data.truth.size());
  std::size_t k = 0;
  RunHooks hooks;
  // runFilter applies t0 observations before the first epoch callback.
  hooks.on_epoch = [&](const FilterState& s) {
    ++k;
    res.records.push_back(makeRecord(s, data.truth[k], Cen));
  };
  res.records.push_back(makeRecord(fs, data.truth.front(), Cen));
  try {
    runFilter(fs, data.streams, hooks);
  } catch (const FilterDivergence& e) {
    res.diverged = true;
    res.failure = e.what();
  }
  if (!res.diverged) res.rmse = computeRmse(res.records, cfg.settle);
  else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.rmse.att_deg = res.rmse.vel = res.rmse.pos = Vec3::Constant(nan);
  }
  return res;
}

Rmse computeRmse(const std::vector<EstimateRecord>& records, double settle) {
  Rmse r;
  if (records.empty()) return r;
  const double t0 = records.front().x.time;
  std::size_t n = 0;
  for (const auto& rec : records) {
    if (rec.x.time - t0 < settle) continue;
    r.att_deg += rec.att_err_deg.cwiseAbs2();
    r.vel += rec.vel_err.cwiseAbs2();
    r.pos += rec.pos_err.cwiseAbs2();
    ++n;
  }
  if (n == 0) throw std::invalid_argument("settling window covers the whole run");
  r.att_deg = (r.att_deg / n).cwiseSqrt();
  r.vel = (r.vel / n).cwiseSqrt();
  r.pos = (r.pos / n).cwiseSqrt();
  return r;
}

std::vector<double> yawGrid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("yaw grid is empty");
  std::vector<double> g;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) g.push_back(lo + i * step);
  return g;
}

SweepTable monteCarloSweep(const SweepConfig& cfg, const ins::EarthModel& earth) {
  if (cfg.yaw_grid_deg.empty()) throw std::invalid_argument("yaw grid is empty");
  if (cfg.seeds < 1) throw std::invalid_argument("need at least one seed");
  if (cfg.variants.empty()) throw std::invalid_argument("no filter variants given");
  cfg.base.validate();

  std::vector<Variant> variants;
  for (const auto& n : cfg.variants) variants.push_back(parseVariant(n));

  const std::size_t n_yaw = cfg.yaw_grid_deg.size();
  const std::size_t n_cells = n_yaw * static_cast<std::size_t>(cfg.seeds);
  // sq[cell][variant] = mean squared yaw error of that run.
  std::vector<std::vector<double>> sq(n_cells, std::vector<double>(variants.size(), 0.0));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < n_cells; c = next++) {
      ScenarioConfig sc = cfg.base;
      sc.attitude_error_deg.z() = cfg.yaw_grid_deg[c / cfg.seeds];
      sc.seed = cfg.base.seed ^ static_cast<std::uint64_t>(c);
      const Dataset data = makeDataset(sc, earth);
      for (std::size_t v = 0; v < variants.size(); ++v) {
        const ScenarioResult r = runScenario(sc, data, variants[v], earth, cfg.injection);
        const double y = r.rmse.att_deg.z();
        sq[c][v] = y * y;
      }
    }
  };
  const int jobs = std::max(1, cfg.jobs);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SweepTable t;
  t.yaw_deg = cfg.yaw_grid_deg;
  t.variants = cfg.variants;
  t.yaw_rmse.assign(n_yaw, std::vector<double>(variants.size(), 0.0));
  for (std::size_t i = 0; i < n_yaw; ++i) {
    for (std::size_t v = 0; v < variants.size(); ++v) {
      double acc = 0.0;
      for (int s = 0; s < cfg.seeds; ++s) acc += sq[i * cfg.seeds + s][v];
      t.yaw_rmse[i][v] = std::sqrt(acc / cfg.seeds);
    }
  }
  return t;
}

std::vector<CovarianceSample> covarianceComparison(std::span<const FilterState> filters,
                                                   const SensorStreams& streams, int stride) {
  if (filters.empty()) throw std::invalid_argument("no filters given");
  if (stride < 1) throw std::invalid_argument("stride must be positive");
  std::vector<std::vector<std::array<double, 3>>> per_filter(filters.size());
  std::vector<double> times;

  for (std::size_t f = 0; f < filters.size(); ++f) {
    int epoch = 0;
    auto sample = [&](const FilterState& s) {
      if (epoch++ % stride != 0) return;
      const Mat15 A = relationMatrix(s.param, ErrorParameterization::LeftInvariant, s.x, s.options.earth);
      const Mat15 Pl = A * s.P * A.transpose();
      per_filter[f].push_back({Pl.block<3, 3>(kAtt, kAtt).trace(), Pl.block<3, 3>(kVel, kVel).trace(),
                               Pl.block<3, 3>(kPos, kPos).trace()});
      if (f == 0) times.push_back(s.x.time);
    };
    FilterState init = filters[f];
    init.x.time = streams.imu.empty() ? init.x.time : streams.imu.front().time;
    sample(init);
    RunHooks hooks;
    hooks.on_epoch = sample;
    runFilter(init, streams, hooks);
  }

  std::vector<CovarianceSample> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    out[i].time = times[i];
    for (const auto& pf : per_filter) out[i].traces.push_back(pf.at(i));
  }
  return out;
}

}  // namespace cteskf::sim
