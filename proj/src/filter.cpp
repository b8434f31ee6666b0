#include "cteskf/filter.h"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace cteskf {

using ins::NavState;

std::string_view toString(UpdateStrategy s) {
  switch (s) {
    case UpdateStrategy::Plain: return "plain";
    case UpdateStrategy::Switch: return "switch";
    case UpdateStrategy::Transform: return "transform";
  }
  return "?";
}

Mat15 checkedSymmetric(const Mat15& P) {
  if (!P.allFinite()) throw FilterDivergence("covariance has non-finite entries");
  return 0.5 * (P + P.transpose());
}

FilterState propagate(const FilterState& fs, const ins::ImuSample& u, double dt) {
  const auto& opt = fs.options;
  const ins::ImuSample uc = ins::correctedImu(u, fs.x);
  const SystemMatrices sys = systemMatrices(fs.param, fs.x, uc, opt.earth, opt.noise);

  FilterState out = fs;
  out.x = ins::propagateState(fs.x, u, dt, opt.earth, opt.limits);
  // Phi P Phi^T expanded; the bias rows of F are zero so only its top nine rows enter.
  const Eigen::Matrix<double, 9, 15> Ft = sys.F.topRows<9>();
  const Eigen::Matrix<double, 9, 15> FP = Ft.lazyProduct(fs.P);
  Mat15 P = fs.P;
  P.topRows<9>() += dt * FP;
  P.leftCols<9>() += dt * FP.transpose();
  P.topLeftCorner<9, 9>() += (dt * dt) * FP.lazyProduct(Ft.transpose());
  const Eigen::Matrix<double, 15, 12> GQ = sys.G * sys.Qc.diagonal().asDiagonal();
  P += dt * GQ.lazyProduct(sys.G.transpose());
  out.P = checkedSymmetric(P);
  if (!out.x.vel.allFinite() || !out.x.pos.allFinite() || !out.x.att.allFinite()) {
    throw FilterDivergence("state has non-finite entries after propagation");
  }
  return out;
}

namespace {

struct KalmanStep {
  Vec3 dz;
  Vec15 xi;
  Mat15 P_post;
  double gain_norm = 0.0;
};

// Kalman update of P in whatever parameterization H belongs to.
KalmanStep kalman(const Mat15& P, const Mat3x15& H, const Vec3& dz, const Mat3& R,
                  const FilterOptions& opt) {
  const Mat3 S = H * P * H.transpose() + R;
  if (!S.allFinite()) throw FilterDivergence("innovation covariance has non-finite entries");
  const Eigen::SelfAdjointEigenSolver<Mat3> es(S, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > opt.max_innovation_condition) {
    throw FilterDivergence("innovation covariance is singular or ill-conditioned");
  }
  // K = P H^T S^-1, solved as S K^T = H P.
  const Eigen::LDLT<Mat3> ldlt(S);
  const Mat15x3 K = ldlt.solve(H * P).transpose();

  KalmanStep step;
  step.dz = dz;
  step.xi = K * dz;
  step.gain_norm = K.norm();
  const Mat15 IKH = Mat15::Identity() - K * H;
  if (opt.joseph) {
    step.P_post = IKH * P * IKH.transpose() + K * R * K.transpose();
  } else {
    step.P_post = IKH * P;
  }
  step.P_post = checkedSymmetric(step.P_post);
  return step;
}

NavState injectChecked(ErrorParameterization param, const NavState& x, const Vec15& xi,
                       const FilterOptions& opt) {
  if (!xi.allFinite()) throw FilterDivergence("Kalman correction has non-finite entries");
  return applyCorrection(param, x, xi, opt.earth, opt.injection);
}

UpdateReport baseReport(const FilterState& fs, const Observation& obs) {
  UpdateReport r;
  r.time = timeOf(obs);
  r.kind = kindOf(obs);
  r.prior = fs.x;
  r.trace_before = fs.P.trace();
  return r;
}

}  // namespace

UpdateResult updatePlain(const FilterState& fs, const Observation& obs) {
  validate(obs);
  const auto& opt = fs.options;
  UpdateReport rep = baseReport(fs, obs);
  const Vec3 dz = innovation(fs.x, obs, opt.earth, opt.obs_time_tolerance);
  const Mat3x15 H = observationMatrix(fs.param, fs.x, rep.kind, opt.earth);
  const KalmanStep k = kalman(fs.P, H, dz, noiseCovariance(obs), opt);

  UpdateResult res{fs, rep};
  res.state.x = injectChecked(fs.param, fs.x, k.xi, opt);
  res.state.P = k.P_post;
  res.report.update_param = fs.param;
  res.report.innovation = dz;
  res.report.correction = k.xi;
  res.report.gain_norm = k.gain_norm;
  res.report.trace_after = k.P_post.trace();
  return res;
}

UpdateResult updateSwitch(const FilterState& fs, const Observation& obs, ErrorParameterization target) {
  validate(obs);
  const auto& opt = fs.options;
  UpdateReport rep = baseReport(fs, obs);
  const Mat15 A = relationMatrix(fs.param, target, fs.x, opt.earth);
  const Mat15 P_t = checkedSymmetric(A * fs.P * A.transpose());

  const Vec3 dz = innovation(fs.x, obs, opt.earth, opt.obs_time_tolerance);
  const Mat3x15 H = observationMatrix(target, fs.x, rep.kind, opt.earth);
  const KalmanStep k = kalman(P_t, H, dz, noiseCovariance(obs), opt);

  UpdateResult res{fs, rep};
  res.state.x = injectChecked(target, fs.x, k.xi, opt);
  const NavState& at = opt.backward_switch == BackwardSwitchAt::Updated ? res.state.x : fs.x;
  const Mat15 B = relationMatrix(target, fs.param, at, opt.earth);
  res.state.P = checkedSymmetric(B * k.P_post * B.transpose());

  res.report.update_param = target;
  res.report.innovation = dz;
  res.report.correction = k.xi;
  res.report.gain_norm = k.gain_norm;
  res.report.trace_after = res.state.P.trace();
  res.report.forward_switch = A;
  res.report.applied = B;
  return res;
}

UpdateResult updateTransform(const FilterState& fs, const Observation& obs,
                             ErrorParameterization target) {
  UpdateResult res = updatePlain(fs, obs);
  if (target == fs.param) return res;
  const Mat15 T = closedFormTransformation(fs.param, target, res.state.x, fs.x, fs.options.earth);
  res.state.P = checkedSymmetric(T * res.state.P * T.transpose());
  res.report.trace_after = res.state.P.trace();
  res.report.applied = T;
  return res;
}

UpdateResult update(const FilterState& fs, const Observation& obs) {
  const auto& opt = fs.options;
  switch (opt.strategy) {
    case UpdateStrategy::Plain: return updatePlain(fs, obs);
    case UpdateStrategy::Switch: return updateSwitch(fs, obs, opt.targetFor(kindOf(obs)));
    case UpdateStrategy::Transform: return updateTransform(fs, obs, opt.targetFor(kindOf(obs)));
  }
  throw std::logic_error("unknown update strategy");
}

FilterState runFilter(FilterState fs, const SensorStreams& streams, const RunHooks& hooks) {
  const auto& imu = streams.imu;
  if (imu.size() < 2) throw std::invalid_argument("need at least two IMU samples");

  std::vector<Observation> obs;
  obs.reserve(streams.gnss.size() + streams.odo.size());
  for (const auto& g : streams.gnss) obs.emplace_back(g);
  for (const auto& o : streams.odo) obs.emplace_back(o);
  // GNSS first at equal times.
  std::stable_sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
    return timeOf(a) < timeOf(b);
  });

  fs.x.time = imu.front().time;
  std::size_t next = 0;
  int n_updates = 0;
  const auto limitReached = [&] { return hooks.max_updates > 0 && n_updates >= hooks.max_updates; };

  auto applyDue = [&](double tol) {
    while (next < obs.size()) {
      const double t = timeOf(obs[next]);
      if (t < fs.x.time - tol) {  // before the start of the IMU data
        ++next;
        continue;
      }
      if (t > fs.x.time + tol) break;
      FilterState at = fs;
      at.options.obs_time_tolerance = tol;
      UpdateResult r = update(at, obs[next]);
      r.state.options = fs.options;
      fs = std::move(r.state);
      ++next;
      ++n_updates;
      if (hooks.on_update) hooks.on_update(fs, r.report);
      if (limitReached()) return;
    }
  };

  applyDue(0.5 * (imu[1].time - imu[0].time));
  for (std::size_t i = 0; i + 1 < imu.size() && !limitReached(); ++i) {
    const double dt = imu[i + 1].time - imu[i].time;
    fs = propagate(fs, imu[i], dt);
    fs.x.time = imu[i + 1].time;
    applyDue(0.5 * dt);
    if (hooks.on_epoch) hooks.on_epoch(fs);
  }
  return fs;
}

double stateDiscrepancy(const NavState& a, const NavState& b) {
  double d = lie::so3Log(a.att * b.att.transpose()).norm();
  d = std::max(d, (a.vel - b.vel).norm());
  d = std::max(d, (a.pos - b.pos).norm());
  d = std::max(d, (a.bg - b.bg).norm());
  d = std::max(d, (a.ba - b.ba).norm());
  return d;
}

FirstUpdateReport firstUpdateIdentityCheck(std::span<const FilterState> filters,
                                           const SensorStreams& data, int updates,
                                           double onset_threshold) {
  if (filters.size() < 2) throw std::invalid_argument("need at least two filters to compare");
  if (updates < 1) throw std::invalid_argument("updates must be positive");

  struct Trace {
    std::vector<NavState> states;
    Mat15 P_first = Mat15::Zero();
    NavState prior_first;
  };
  std::vector<Trace> traces(filters.size());
  for (std::size_t f = 0; f < filters.size(); ++f) {
    RunHooks hooks;
    hooks.max_updates = updates;
    hooks.on_update = [&, f](const FilterState& s, const UpdateReport& rep) {
      auto& tr = traces[f];
      if (tr.states.empty()) {
        tr.P_first = s.P;
        tr.prior_first = rep.prior;
      }
      tr.states.push_back(s.x);
    };
    runFilter(filters[f], data, hooks);
  }

  FirstUpdateReport out;
  std::size_t n = traces.front().states.size();
  for (const auto& tr : traces) n = std::min(n, tr.states.size());
  if (n == 0) throw std::invalid_argument("no observation was applied");

  for (std::size_t k = 0; k < n; ++k) {
    double worst = 0.0;
    for (std::size_t a = 0; a < traces.size(); ++a) {
      for (std::size_t b = a + 1; b < traces.size(); ++b) {
        worst = std::max(worst, stateDiscrepancy(traces[a].states[k], traces[b].states[k]));
      }
    }
    out.discrepancy_per_update.push_back(worst);
    if (out.divergence_onset < 0 && worst > onset_threshold) out.divergence_onset = static_cast<int>(k);
  }

  const auto& ref = traces.front();
  const auto& earth = filters.front().options.earth;
  for (std::size_t f = 1; f < traces.size(); ++f) {
    const Mat15& Pf = traces[f].P_first;
    const Mat15 Am = relationMatrix(filters.front().param, filters[f].param, ref.prior_first, earth);
    const Mat15 Ap = relationMatrix(filters.front().param, filters[f].param, ref.states.front(), earth);
    const double scale = Pf.norm();
    out.covariance_relation_residual = std::max(
        out.covariance_relation_residual, (Pf - Am * ref.P_first * Am.transpose()).norm() / scale);
    out.covariance_equivalence_residual = std::max(
        out.covariance_equivalence_residual, (Pf - Ap * ref.P_first * Ap.transpose()).norm() / scale);
  }
  return out;
}

}  // namespace cteskf
