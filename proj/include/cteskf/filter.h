#pragma once

#include "cteskf/error_state.h"
#include "cteskf/ins.h"
#include "cteskf/sensors.h"

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cteskf {

enum class UpdateStrategy { Plain, Switch, Transform };

std::string_view toString(UpdateStrategy s);

/// Which state the backward covariance switch is evaluated at.
enum class BackwardSwitchAt { Updated, Predicted };

struct FilterOptions {
  UpdateStrategy strategy = UpdateStrategy::Plain;
  // Targets of the switch/transform per observation kind.
  ErrorParameterization gnss_target = ErrorParameterization::LeftInvariant;
  ErrorParameterization odo_target = ErrorParameterization::RightInvariant;
  BackwardSwitchAt backward_switch = BackwardSwitchAt::Updated;
  InjectionMode injection = InjectionMode::Retraction;
  bool joseph = false;
  double max_innovation_condition = 1e12;
  double obs_time_tolerance = 0.0025;
  ins::EarthModel earth;
  ProcessNoise noise;
  ins::PropagationLimits limits;

  ErrorParameterization targetFor(ObservationKind kind) const {
    return kind == ObservationKind::GnssVelocity ? gnss_target : odo_target;
  }
};

struct FilterState {
  ins::NavState x;
  Mat15 P = Mat15::Identity();
  ErrorParameterization param = ErrorParameterization::AdditiveEkf;
  FilterOptions options;
};

struct UpdateReport {
  double time = 0.0;
  ObservationKind kind = ObservationKind::GnssVelocity;
  ErrorParameterization update_param = ErrorParameterization::AdditiveEkf;
  Vec3 innovation = Vec3::Zero();
  Vec15 correction = Vec15::Zero();  // K * innovation, in update_param
  double gain_norm = 0.0;
  double trace_before = 0.0;
  double trace_after = 0.0;
  ins::NavState prior;
  // Switch: forward A(x-) and backward A^-1 matrices. Transform: T.
  std::optional<Mat15> forward_switch;
  std::optional<Mat15> applied;
};

struct UpdateResult {
  FilterState state;
  UpdateReport report;
};

/// Raised when the filter produces non-finite or unusable numbers.
class FilterDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws FilterDivergence on non-finite entries; symmetrizes otherwise.
Mat15 checkedSymmetric(const Mat15& P);

/// State by the strapdown step, P <- Phi P Phi^T + G Qc G^T dt with Phi = I + F dt.
FilterState propagate(const FilterState& fs, const ins::ImuSample& u, double dt);

UpdateResult updatePlain(const FilterState& fs, const Observation& obs);

/// Forward switch at x-, update in `target`, inject, backward switch (at x+ by default).
UpdateResult updateSwitch(const FilterState& fs, const Observation& obs, ErrorParameterization target);

/// Plain update followed by P <- T P T^T, T = A^-1(x+) A(x-).
UpdateResult updateTransform(const FilterState& fs, const Observation& obs,
                             ErrorParameterization target);

/// Dispatches on fs.options.strategy.
UpdateResult update(const FilterState& fs, const Observation& obs);

struct RunHooks {
  std::function<void(const FilterState&)> on_epoch;
  std::function<void(const FilterState&, const UpdateReport&)> on_update;
  /// Stop after this many updates (0 = run to the end of the IMU stream).
  int max_updates = 0;
};

/**
 * Interleaves propagation and updates over the streams. Sample i drives the
 * step from imu[i].time to imu[i+1].time; an observation is applied after the
 * step whose end lies within half an IMU period of it.
 */
FilterState runFilter(FilterState fs, const SensorStreams& streams, const RunHooks& hooks = {});

/// Largest of the attitude angle, velocity, position and bias differences.
double stateDiscrepancy(const ins::NavState& a, const ins::NavState& b);

struct FirstUpdateReport {
  /// Max pairwise state discrepancy after each update (index 0 = first update).
  std::vector<double> discrepancy_per_update;
  /// Max over pairs of |P_a+ - A(x-) P_b+ A(x-)^T|_F / |P_a+|_F at the first update.
  double covariance_relation_residual = 0.0;
  /// Same with A(x+), which is what equivalence would require.
  double covariance_equivalence_residual = 0.0;
  /// First update index whose discrepancy exceeds `onset_threshold`, or -1.
  int divergence_onset = -1;
};

/**
 * Runs filters that share the initial state and hold relation-equivalent
 * initial covariances through `updates` updates and compares them.
 */
FirstUpdateReport firstUpdateIdentityCheck(std::span<const FilterState> filters,
                                           const SensorStreams& data, int updates = 5,
                                           double onset_threshold = 1e-6);

}  // namespace cteskf
