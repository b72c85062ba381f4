#pragma once

#include "prospect_drive/cpt.hpp"
#include "prospect_drive/features.hpp"
#include "prospect_drive/kinematics.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace prospect_drive::estimation
{

struct Demonstration
{
  Trajectory interacting;
  Trajectory target;
};

struct IrlConfig
{
  std::size_t candidate_count{64};  // includes the demonstration itself
  double perturbation_scale{0.5};   // m
  double learning_rate{0.1};
  std::size_t max_iterations{20000};
  double gradient_tolerance{1e-4};
  std::uint64_t rng_seed{7};

  void validate() const;
};

struct CptObservation
{
  cpt::DrivingUtilities utilities;
  double p_yield{0.5};
  Decision label{Decision::Yield};
};

struct FitResult
{
  std::optional<UtilityWeights> theta;
  std::optional<double> alpha;
  std::optional<double> gamma;
  double loss{0.0};
  std::vector<double> trace;  // loss after each accepted step
  bool converged{false};
  std::size_t iterations{0};
  std::vector<std::string> warnings;
};

struct LogLikelihood
{
  double value{0.0};
  UtilityWeights gradient{};
};

/// Max-entropy log-likelihood over candidate sets and its gradient, the gap
/// between demonstrated and softmax-expected feature sums.
/// Throws EmptyCandidates, LengthMismatch.
[[nodiscard]] LogLikelihood irl_loglik_and_grad(
  const UtilityWeights & theta, std::span<const Demonstration> demos,
  std::span<const std::vector<Trajectory>> candidates_per_demo, const UtilityConfig & cfg);

/// Feature-sum form of the above: demo_features[i] and candidate_features[i][c].
[[nodiscard]] LogLikelihood irl_loglik_and_grad(
  const UtilityWeights & theta, std::span<const FeatureVector> demo_features,
  std::span<const std::vector<FeatureVector>> candidate_features);

/// Demo plus (candidate_count - 1) smoothed Gaussian station perturbations
/// made monotone; the first sample is kept.
[[nodiscard]] std::vector<Trajectory> generate_candidates(
  const Trajectory & demo, const IrlConfig & cfg, std::uint64_t stream);

/// Gradient ascent on the log-likelihood from theta = 0 with candidate sets
/// generated per demo. Throws EmptyDataset.
[[nodiscard]] FitResult irl_fit(
  std::span<const Demonstration> demos, const IrlConfig & cfg, const UtilityConfig & cfg_u);

/// Same ascent over caller-supplied candidate sets.
[[nodiscard]] FitResult irl_fit_with_candidates(
  std::span<const Demonstration> demos, std::span<const std::vector<Trajectory>> candidates,
  const IrlConfig & cfg, const UtilityConfig & cfg_u);

struct CptLoss
{
  double loss{0.0};
  std::size_t clamped{0};  // probabilities that hit the [1e-12, 1 - 1e-12] clamp
};

[[nodiscard]] CptLoss cpt_loss_detail(
  double alpha, double gamma, std::span<const CptObservation> observations,
  cpt::WeightingMode mode);

/// Cross-entropy of the labelled decisions under the softmax over CPT values.
[[nodiscard]] double cpt_loss(
  double alpha, double gamma, std::span<const CptObservation> observations,
  cpt::WeightingMode mode);

struct CptFitOptions
{
  std::size_t grid_resolution{20};
  std::size_t max_refine_iterations{400};
  double refine_tolerance{1e-10};
  double lower_bound{1e-3};  // box for the refinement: [lower_bound, 1]^2
};

/// Grid search over (0, 1]^2 followed by Nelder-Mead refinement from the best
/// grid point. Throws EmptyDataset.
[[nodiscard]] FitResult cpt_fit(
  std::span<const CptObservation> observations, cpt::WeightingMode mode,
  const CptFitOptions & options = {});

}  // namespace prospect_drive::estimation
