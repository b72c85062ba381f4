#include "prospect_drive/features.hpp"

#include "prospect_drive/errors.hpp"

#include <array>
#include <cmath>
#include <string>

namespace prospect_drive
{

namespace
{

double bump(double deviation, double scale)
{
  const double z = deviation / scale;
  return std::exp(-z * z);
}

// d bump / d deviation
double bump_slope(double deviation, double scale)
{
  return -2.0 * deviation / (scale * scale) * bump(deviation, scale);
}

// d^2 bump / d deviation^2
double bump_curvature(double deviation, double scale)
{
  const double s2 = scale * scale;
  return (4.0 * deviation * deviation / (s2 * s2) - 2.0 / s2) * bump(deviation, scale);
}

// Backward-difference stencils for orders 1..3.
constexpr std::array<std::array<double, 4>, 3> kStencil{{
  {1.0, -1.0, 0.0, 0.0},
  {1.0, -2.0, 1.0, 0.0},
  {1.0, -3.0, 3.0, -1.0},
}};

void check_lengths(const Trajectory & target, const Trajectory & interacting)
{
  if (target.size() != interacting.size()) {
    fail(
      ErrorCode::LengthMismatch, "target has " + std::to_string(target.size()) +
                                   " samples, interacting has " +
                                   std::to_string(interacting.size()));
  }
}

FeatureVector sum_features(
  const Trajectory & target, const Trajectory * interacting, const UtilityConfig & cfg)
{
  const auto kin = kinematics(target);
  FeatureVector total{};
  for (std::size_t k = 0; k < target.size(); ++k) {
    total[kSpeed] += bump(kin.speeds[k] - cfg.v_traffic, cfg.scales[kSpeed]);
    total[kAccel] += bump(kin.accelerations[k], cfg.scales[kAccel]);
    total[kJerk] += bump(kin.jerks[k], cfg.scales[kJerk]);
    if (interacting != nullptr) {
      total[kSafety] +=
        bump(interacting->stations[k] - target.stations[k], cfg.scales[kSafety]);
    }
  }
  return total;
}

std::vector<double> gradient(
  const Trajectory & target, const Trajectory * interacting, const UtilityWeights & theta,
  const UtilityConfig & cfg)
{
  const auto kin = kinematics(target);
  const std::size_t n = target.size();
  const double dt = target.dt;
  std::vector<double> grad(n, 0.0);

  for (std::size_t k = 0; k < n; ++k) {
    const std::array<double, 3> slopes{
      theta[kSpeed] * bump_slope(kin.speeds[k] - cfg.v_traffic, cfg.scales[kSpeed]),
      theta[kAccel] * bump_slope(kin.accelerations[k], cfg.scales[kAccel]),
      theta[kJerk] * bump_slope(kin.jerks[k], cfg.scales[kJerk]),
    };
    double inv_dt_pow = 1.0;
    for (int order = 1; order <= 3; ++order) {
      inv_dt_pow /= dt;
      const auto src = differencing::difference_source(k, order, n);
      if (src < 0) {
        continue;
      }
      const double g = slopes[static_cast<std::size_t>(order - 1)] * inv_dt_pow;
      for (int back = 0; back <= order; ++back) {
        grad[static_cast<std::size_t>(src - back)] +=
          g * kStencil[static_cast<std::size_t>(order - 1)][static_cast<std::size_t>(back)];
      }
    }
    if (interacting != nullptr) {
      // deviation = s_I - s_T, so d/ds_T flips the sign.
      grad[k] -= theta[kSafety] *
                 bump_slope(interacting->stations[k] - target.stations[k], cfg.scales[kSafety]);
    }
  }
  return grad;
}

}  // namespace

void UtilityConfig::validate() const
{
  if (!(v_traffic > 0.0) || !std::isfinite(v_traffic)) {
    fail(ErrorCode::InvalidArgument, "v_traffic must be positive");
  }
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      fail(ErrorCode::InvalidArgument, "feature length-scales must be positive");
    }
  }
}

FeatureVector features_at(
  const VehicleState & target, double interacting_station, const UtilityConfig & cfg)
{
  return {
    bump(target.speed - cfg.v_traffic, cfg.scales[kSpeed]),
    bump(target.acceleration, cfg.scales[kAccel]),
    bump(target.jerk, cfg.scales[kJerk]),
    bump(interacting_station - target.station, cfg.scales[kSafety]),
  };
}

FeatureVector feature_sum(
  const Trajectory & target, const Trajectory & interacting, const UtilityConfig & cfg)
{
  check_lengths(target, interacting);
  return sum_features(target, &interacting, cfg);
}

FeatureVector feature_sum_solo(const Trajectory & target, const UtilityConfig & cfg)
{
  return sum_features(target, nullptr, cfg);
}

double dot(const UtilityWeights & theta, const FeatureVector & phi)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    acc += theta[i] * phi[i];
  }
  return acc;
}

double utility(
  const Trajectory & target, const Trajectory & interacting, const UtilityWeights & theta,
  const UtilityConfig & cfg)
{
  return dot(theta, feature_sum(target, interacting, cfg));
}

double utility_solo(
  const Trajectory & target, const UtilityWeights & theta, const UtilityConfig & cfg)
{
  return dot(theta, feature_sum_solo(target, cfg));
}

std::vector<double> utility_gradient(
  const Trajectory & target, const Trajectory & interacting, const UtilityWeights & theta,
  const UtilityConfig & cfg)
{
  check_lengths(target, interacting);
  return gradient(target, &interacting, theta, cfg);
}

std::vector<double> utility_gradient_solo(
  const Trajectory & target, const UtilityWeights & theta, const UtilityConfig & cfg)
{
  return gradient(target, nullptr, theta, cfg);
}

std::vector<double> utility_hessian_solo(
  const Trajectory & target, const UtilityWeights & theta, const UtilityConfig & cfg)
{
  const auto kin = kinematics(target);
  const std::size_t n = target.size();
  const double dt = target.dt;
  std::vector<double> hess(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::array<double, 3> curvatures{
      theta[kSpeed] * bump_curvature(kin.speeds[k] - cfg.v_traffic, cfg.scales[kSpeed]),
      theta[kAccel] * bump_curvature(kin.accelerations[k], cfg.scales[kAccel]),
      theta[kJerk] * bump_curvature(kin.jerks[k], cfg.scales[kJerk]),
    };
    double inv_dt_pow = 1.0;
    for (int order = 1; order <= 3; ++order) {
      inv_dt_pow /= dt;
      const auto src = differencing::difference_source(k, order, n);
      if (src < 0) {
        continue;
      }
      const double c = curvatures[static_cast<std::size_t>(order - 1)] * inv_dt_pow * inv_dt_pow;
      const auto & w = kStencil[static_cast<std::size_t>(order - 1)];
      for (int a = 0; a <= order; ++a) {
        for (int b = 0; b <= order; ++b) {
          const auto row = static_cast<std::size_t>(src - a);
          const auto col = static_cast<std::size_t>(src - b);
          hess[row * n + col] += c * w[static_cast<std::size_t>(a)] * w[static_cast<std::size_t>(b)];
        }
      }
    }
  }
  return hess;
}

}  // namespace prospect_drive
