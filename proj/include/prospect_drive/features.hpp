#pragma once

#include "prospect_drive/kinematics.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace prospect_drive
{

inline constexpr std::size_t kFeatureCount = 4;

/// Indices into FeatureVector / UtilityWeights.
enum FeatureIndex : std::size_t { kSpeed = 0, kAccel = 1, kJerk = 2, kSafety = 3 };

/// (speed, acceleration, jerk, safety) features; each in (0, 1] pointwise.
using FeatureVector = std::array<double, kFeatureCount>;
/// Linear weights over FeatureVector.
using UtilityWeights = std::array<double, kFeatureCount>;

struct UtilityConfig
{
  double v_traffic{8.0};  // m/s
  /// Length-scales dividing each feature's deviation: m/s, m/s^2, m/s^3, m.
  std::array<double, kFeatureCount> scales{3.0, 2.0, 5.0, 10.0};

  /// Throws InvalidArgument unless every value is positive and finite.
  void validate() const;
};

struct VehicleState
{
  double station{0.0};
  double speed{0.0};
  double acceleration{0.0};
  double jerk{0.0};
};

[[nodiscard]] FeatureVector features_at(
  const VehicleState & target, double interacting_station, const UtilityConfig & cfg);

/// Per-step features summed over the horizon.
[[nodiscard]] FeatureVector feature_sum(
  const Trajectory & target, const Trajectory & interacting, const UtilityConfig & cfg);

/// Feature sum with no interacting vehicle: the safety feature takes its
/// far-separation limit 0 at every step.
[[nodiscard]] FeatureVector feature_sum_solo(const Trajectory & target, const UtilityConfig & cfg);

[[nodiscard]] double dot(const UtilityWeights & theta, const FeatureVector & phi);

[[nodiscard]] double utility(
  const Trajectory & target, const Trajectory & interacting, const UtilityWeights & theta,
  const UtilityConfig & cfg);

[[nodiscard]] double utility_solo(
  const Trajectory & target, const UtilityWeights & theta, const UtilityConfig & cfg);

/// d utility / d target.stations[k], through the backward differences.
[[nodiscard]] std::vector<double> utility_gradient(
  const Trajectory & target, const Trajectory & interacting, const UtilityWeights & theta,
  const UtilityConfig & cfg);

[[nodiscard]] std::vector<double> utility_gradient_solo(
  const Trajectory & target, const UtilityWeights & theta, const UtilityConfig & cfg);

/// Second derivatives of utility_solo in the stations, row-major n x n.
[[nodiscard]] std::vector<double> utility_hessian_solo(
  const Trajectory & target, const UtilityWeights & theta, const UtilityConfig & cfg);

}  // namespace prospect_drive
