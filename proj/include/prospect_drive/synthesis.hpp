#pragma once

#include "prospect_drive/features.hpp"
#include "prospect_drive/kinematics.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace prospect_drive::synthesis
{

struct InitialState
{
  double station{0.0};
  double speed{0.0};
  double acceleration{0.0};
};

struct MotionLimits
{
  double a_min{-4.0};  // m/s^2, < 0
  double a_max{2.5};   // m/s^2, > 0
  double v_max{15.0};  // m/s

  void validate() const;
};

/// Upper bound on the target station, active for samples before
/// `release_index` (the sample at which the interacting vehicle has cleared
/// the crossing). An infinite stop_station disables the bound.
struct YieldConstraint
{
  double stop_station{-3.0};
  double clearance_margin{1.0};
  std::optional<std::size_t> release_index;

  [[nodiscard]] bool active() const noexcept { return std::isfinite(stop_station); }
};

struct OptimizerOptions
{
  std::size_t max_iterations{500};
  double improvement_tolerance{1e-8};
  double initial_step{1.0};
  std::size_t max_failed_restarts{5};
};

/// Distance covered while braking at `a_min` from `speed` until rest (or for
/// at most `max_steps` steps), using the same discrete rollout as the
/// trajectories: v <- max(0, v + a_min dt), s <- s + v dt.
[[nodiscard]] double braking_distance(
  double speed, double a_min, double dt,
  std::size_t max_steps = std::numeric_limits<std::size_t>::max());

[[nodiscard]] Trajectory constant_speed_trajectory(
  const InitialState & init, std::size_t horizon, double dt);

/// Forward clamp onto the feasible set: monotone stations, speed in
/// [0, v_max], per-step acceleration in [a_min, a_max] (the first step
/// measured from init.speed) and, when given, the stop bound on every later
/// sample, kept reachable by braking. stations[0] is reset to init.station.
[[nodiscard]] Trajectory project_feasible(
  const Trajectory & candidate, const InitialState & init, const MotionLimits & limits,
  const std::optional<YieldConstraint> & constraint = std::nullopt);

/// True when `traj` satisfies every bound project_feasible enforces (within
/// `tol`).
[[nodiscard]] bool is_feasible(
  const Trajectory & traj, const InitialState & init, const MotionLimits & limits,
  const std::optional<YieldConstraint> & constraint = std::nullopt, double tol = 1e-9);

/// Best achievable trajectory with the interacting vehicle absent.
/// Throws NonConvergence when the line search keeps failing away from a
/// stationary point.
[[nodiscard]] Trajectory optimal_pass_trajectory(
  const InitialState & init, const UtilityWeights & theta, const UtilityConfig & cfg,
  const MotionLimits & limits, std::size_t horizon, double dt,
  const OptimizerOptions & options = {});

struct ComposedPass
{
  Trajectory trajectory;
  /// Index of the braking onset sample; equals the horizon when the passing
  /// trajectory needs no braking.
  std::size_t k0{0};
};

/// Prefix of the passing trajectory followed by constant a_min braking, with
/// the latest onset that keeps the target at or before -clearance_margin
/// until the interacting vehicle reaches +clearance_margin.
[[nodiscard]] ComposedPass compose_pass_nonyield(
  const Trajectory & optimal_pass, const Trajectory & interacting_constant,
  const MotionLimits & limits, double clearance_margin);

/// First sample at which the interacting vehicle has cleared the crossing.
[[nodiscard]] std::optional<std::size_t> clearance_index(
  const Trajectory & interacting, double clearance_margin);

/// True when braking from sample `onset` of `candidate` (or the trajectory as
/// is when onset >= size) keeps the stop condition. Exposed for testing.
[[nodiscard]] bool stop_condition_holds(
  const Trajectory & candidate, std::optional<std::size_t> release, const MotionLimits & limits,
  double clearance_margin);

/// Prefix [0, onset] of `pass` followed by the braking tail.
[[nodiscard]] Trajectory brake_from(
  const Trajectory & pass, std::size_t onset, const MotionLimits & limits);

/// Best trajectory subject to the stop bound. Throws InfeasibleStart when the
/// start is already past the bound or cannot keep behind it over the horizon
/// even under full braking.
[[nodiscard]] Trajectory optimal_yield_trajectory(
  const InitialState & init, const YieldConstraint & constraint, const UtilityWeights & theta,
  const UtilityConfig & cfg, const MotionLimits & limits, std::size_t horizon, double dt,
  const OptimizerOptions & options = {});

}  // namespace prospect_drive::synthesis
