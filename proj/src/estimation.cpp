#include "prospect_drive/estimation.hpp"

#include "prospect_drive/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace prospect_drive::estimation
{

namespace
{

double inf_norm(const UtilityWeights & v)
{
  double m = 0.0;
  for (double x : v) {
    m = std::max(m, std::abs(x));
  }
  return m;
}

std::vector<FeatureVector> candidate_features(
  const Demonstration & demo, const std::vector<Trajectory> & candidates,
  const UtilityConfig & cfg)
{
  std::vector<FeatureVector> out;
  out.reserve(candidates.size());
  for (const auto & c : candidates) {
    out.push_back(feature_sum(c, demo.interacting, cfg));
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
{
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void IrlConfig::validate() const
{
  if (
    candidate_count < 1 || !(perturbation_scale > 0.0) || !(learning_rate > 0.0) ||
    max_iterations < 1 || !(gradient_tolerance > 0.0)) {
    fail(ErrorCode::InvalidArgument, "IRL configuration values must be positive");
  }
}

LogLikelihood irl_loglik_and_grad(
  const UtilityWeights & theta, std::span<const FeatureVector> demo_features,
  std::span<const std::vector<FeatureVector>> candidate_features)
{
  if (demo_features.size() != candidate_features.size()) {
    fail(ErrorCode::LengthMismatch, "one candidate set is needed per demonstration");
  }
  LogLikelihood out;
  std::vector<double> scores;
  for (std::size_t i = 0; i < demo_features.size(); ++i) {
    const auto & cands = candidate_features[i];
    if (cands.empty()) {
      fail(ErrorCode::EmptyCandidates, "demonstration " + std::to_string(i) + " has no candidates");
    }
    scores.resize(cands.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cands.size(); ++c) {
      scores[c] = dot(theta, cands[c]);
      top = std::max(top, scores[c]);
    }
    double norm = 0.0;
    for (double s : scores) {
      norm += std::exp(s - top);
    }
    const double log_partition = top + std::log(norm);
    out.value += dot(theta, demo_features[i]) - log_partition;

    FeatureVector expected{};
    for (std::size_t c = 0; c < cands.size(); ++c) {
      const double w = std::exp(scores[c] - log_partition);
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        expected[f] += w * cands[c][f];
      }
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      out.gradient[f] += demo_features[i][f] - expected[f];
    }
  }
  return out;
}

LogLikelihood irl_loglik_and_grad(
  const UtilityWeights & theta, std::span<const Demonstration> demos,
  std::span<const std::vector<Trajectory>> candidates_per_demo, const UtilityConfig & cfg)
{
  if (demos.size() != candidates_per_demo.size()) {
    fail(ErrorCode::LengthMismatch, "one candidate set is needed per demonstration");
  }
  std::vector<FeatureVector> demo_phi;
  std::vector<std::vector<FeatureVector>> cand_phi;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    if (candidates_per_demo[i].empty()) {
      fail(ErrorCode::EmptyCandidates, "demonstration " + std::to_string(i) + " has no candidates");
    }
    demo_phi.push_back(feature_sum(demos[i].target, demos[i].interacting, cfg));
    cand_phi.push_back(candidate_features(demos[i], candidates_per_demo[i], cfg));
  }
  return irl_loglik_and_grad(theta, demo_phi, cand_phi);
}

std::vector<Trajectory> generate_candidates(
  const Trajectory & demo, const IrlConfig & cfg, std::uint64_t stream)
{
  demo.validate();
  std::mt19937_64 rng(mix_seed(cfg.rng_seed, stream));
  std::normal_distribution<double> noise(0.0, cfg.perturbation_scale);
  const std::size_t n = demo.size();

  std::vector<Trajectory> out;
  out.reserve(cfg.candidate_count);
  out.push_back(demo);
  std::vector<double> raw(n);
  while (out.size() < cfg.candidate_count) {
    for (auto & r : raw) {
      r = noise(rng);
    }
    Trajectory cand = demo;
    for (std::size_t k = 1; k < n; ++k) {
      // 5-sample moving average, truncated at the ends.
      const std::size_t lo = k >= 2 ? k - 2 : 0;
      const std::size_t hi = std::min(n - 1, k + 2);
      double acc = 0.0;
      for (std::size_t i = lo; i <= hi; ++i) {
        acc += raw[i];
      }
      cand.stations[k] += acc / static_cast<double>(hi - lo + 1);
      cand.stations[k] = std::max(cand.stations[k], cand.stations[k - 1]);
    }
    out.push_back(std::move(cand));
  }
  return out;
}

FitResult irl_fit(
  std::span<const Demonstration> demos, const IrlConfig & cfg, const UtilityConfig & cfg_u)
{
  if (demos.empty()) {
    fail(ErrorCode::EmptyDataset, "IRL needs at least one demonstration");
  }
  cfg.validate();
  std::vector<std::vector<Trajectory>> candidates;
  candidates.reserve(demos.size());
  for (std::size_t i = 0; i < demos.size(); ++i) {
    candidates.push_back(generate_candidates(demos[i].target, cfg, i));
  }
  return irl_fit_with_candidates(demos, candidates, cfg, cfg_u);
}

FitResult irl_fit_with_candidates(
  std::span<const Demonstration> demos, std::span<const std::vector<Trajectory>> candidates,
  const IrlConfig & cfg, const UtilityConfig & cfg_u)
{
  if (demos.empty()) {
    fail(ErrorCode::EmptyDataset, "IRL needs at least one demonstration");
  }
  cfg.validate();
  cfg_u.validate();
  if (demos.size() != candidates.size()) {
    fail(ErrorCode::LengthMismatch, "one candidate set is needed per demonstration");
  }
  std::vector<FeatureVector> demo_phi;
  std::vector<std::vector<FeatureVector>> cand_phi;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    if (candidates[i].empty()) {
      fail(ErrorCode::EmptyCandidates, "demonstration " + std::to_string(i) + " has no candidates");
    }
    demo_phi.push_back(feature_sum(demos[i].target, demos[i].interacting, cfg_u));
    cand_phi.push_back(candidate_features(demos[i], candidates[i], cfg_u));
  }

  FitResult result;
  UtilityWeights theta{};
  auto current = irl_loglik_and_grad(theta, demo_phi, cand_phi);
  double step = cfg.learning_rate;
  std::size_t iter = 0;
  for (; iter < cfg.max_iterations; ++iter) {
    if (inf_norm(current.gradient) < cfg.gradient_tolerance) {
      result.converged = true;
      break;
    }
    UtilityWeights trial = theta;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      trial[f] += step * current.gradient[f];
    }
    auto next = irl_loglik_and_grad(trial, demo_phi, cand_phi);
    if (next.value >= current.value) {
      theta = trial;
      current = next;
      result.trace.push_back(-current.value);
      step *= 1.5;
    } else {
      step *= 0.5;
      if (step < 1e-300) {
        break;
      }
    }
  }
  if (!result.converged && inf_norm(current.gradient) < cfg.gradient_tolerance) {
    result.converged = true;
  }
  result.theta = theta;
  result.loss = -current.value;
  result.iterations = iter;
  if (!result.converged) {
    result.warnings.push_back("IRL stopped before the gradient tolerance was reached");
  }
  return result;
}

CptLoss cpt_loss_detail(
  double alpha, double gamma, std::span<const CptObservation> observations,
  cpt::WeightingMode mode)
{
  constexpr double kFloor = 1e-12;
  const auto params = cpt::CptParams::driving(alpha, gamma);
  CptLoss out;
  for (const auto & obs : observations) {
    const auto values = cpt::driving_values(obs.utilities, obs.p_yield, params, mode);
    const auto pr = cpt::decision_probabilities(values.pass, values.yield);
    double p = obs.label == Decision::Pass ? pr.pass : pr.yield;
    if (p < kFloor || p > 1.0 - kFloor) {
      ++out.clamped;
      p = std::clamp(p, kFloor, 1.0 - kFloor);
    }
    out.loss -= std::log(p);
  }
  return out;
}

double cpt_loss(
  double alpha, double gamma, std::span<const CptObservation> observations,
  cpt::WeightingMode mode)
{
  return cpt_loss_detail(alpha, gamma, observations, mode).loss;
}

FitResult cpt_fit(
  std::span<const CptObservation> observations, cpt::WeightingMode mode,
  const CptFitOptions & options)
{
  if (observations.empty()) {
    fail(ErrorCode::EmptyDataset, "no observations to fit");
  }
  if (options.grid_resolution < 1) {
    fail(ErrorCode::InvalidArgument, "grid resolution must be positive");
  }
  FitResult result;
  const bool any_pass = std::any_of(observations.begin(), observations.end(), [](const auto & o) {
    return o.label == Decision::Pass;
  });
  const bool any_yield = std::any_of(observations.begin(), observations.end(), [](const auto & o) {
    return o.label == Decision::Yield;
  });
  if (!any_pass || !any_yield) {
    result.warnings.push_back("DegenerateLabels: only one decision appears in the data");
  }

  const auto loss_at = [&](double a, double g) { return cpt_loss(a, g, observations, mode); };

  const std::size_t r = options.grid_resolution;
  double best_a = 1.0;
  double best_g = 1.0;
  double best = std::numeric_limits<double>::infinity();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= r; ++i) {
    for (std::size_t j = 1; j <= r; ++j) {
      const double a = static_cast<double>(i) / static_cast<double>(r);
      const double g = static_cast<double>(j) / static_cast<double>(r);
      const double l = loss_at(a, g);
      worst = std::max(worst, l);
      if (l < best) {
        best = l;
        best_a = a;
        best_g = g;
      }
    }
  }
  if (worst - best <= 1e-12 * std::max(1.0, std::abs(best))) {
    result.alpha = 1.0;
    result.gamma = 1.0;
    result.loss = loss_at(1.0, 1.0);
    result.trace.push_back(result.loss);
    result.converged = false;
    result.warnings.push_back("flat objective: returning (1, 1)");
    return result;
  }

  // Nelder-Mead on the box [lower_bound, 1]^2.
  const double lb = options.lower_bound;
  using Vertex = std::array<double, 2>;
  const auto clamp_box = [&](Vertex v) {
    v[0] = std::clamp(v[0], lb, 1.0);
    v[1] = std::clamp(v[1], lb, 1.0);
    return v;
  };
  const double h = 1.0 / static_cast<double>(r);
  const auto offset = [&](double x) { return x + h <= 1.0 ? x + h : x - h; };
  std::array<Vertex, 3> simplex{
    Vertex{best_a, best_g}, clamp_box({offset(best_a), best_g}),
    clamp_box({best_a, offset(best_g)})};
  std::array<double, 3> f{best, loss_at(simplex[1][0], simplex[1][1]),
                          loss_at(simplex[2][0], simplex[2][1])};
  result.trace.push_back(best);

  const auto order = [&]() {
    std::array<std::size_t, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return f[x] < f[y]; });
    const auto s = simplex;
    const auto fv = f;
    for (std::size_t k = 0; k < 3; ++k) {
      simplex[k] = s[idx[k]];
      f[k] = fv[idx[k]];
    }
  };

  std::size_t iter = 0;
  for (; iter < options.max_refine_iterations; ++iter) {
    order();
    const double spread = f[2] - f[0];
    const double size = std::max(
      {std::abs(simplex[1][0] - simplex[0][0]), std::abs(simplex[1][1] - simplex[0][1]),
       std::abs(simplex[2][0] - simplex[0][0]), std::abs(simplex[2][1] - simplex[0][1])});
    if (spread <= options.refine_tolerance && size <= 1e-7) {
      result.converged = true;
      break;
    }
    const Vertex centroid{
      0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])};
    const auto along = [&](double t) {
      return clamp_box(
        {centroid[0] + t * (simplex[2][0] - centroid[0]),
         centroid[1] + t * (simplex[2][1] - centroid[1])});
    };
    const Vertex reflected = along(-1.0);
    const double fr = loss_at(reflected[0], reflected[1]);
    if (fr < f[0]) {
      const Vertex expanded = along(-2.0);
      const double fe = loss_at(expanded[0], expanded[1]);
      if (fe < fr) {
        simplex[2] = expanded;
        f[2] = fe;
      } else {
        simplex[2] = reflected;
        f[2] = fr;
      }
    } else if (fr < f[1]) {
      simplex[2] = reflected;
      f[2] = fr;
    } else {
      const bool outside = fr < f[2];
      const Vertex contracted = along(outside ? -0.5 : 0.5);
      const double fc = loss_at(contracted[0], contracted[1]);
      if (fc < (outside ? fr : f[2])) {
        simplex[2] = contracted;
        f[2] = fc;
      } else {
        for (std::size_t k = 1; k < 3; ++k) {
          simplex[k] = clamp_box(
            {simplex[0][0] + 0.5 * (simplex[k][0] - simplex[0][0]),
             simplex[0][1] + 0.5 * (simplex[k][1] - simplex[0][1])});
          f[k] = loss_at(simplex[k][0], simplex[k][1]);
        }
      }
    }
    result.trace.push_back(std::min({f[0], f[1], f[2]}));
  }
  order();
  result.alpha = simplex[0][0];
  result.gamma = simplex[0][1];
  result.loss = f[0];
  result.iterations = iter;
  return result;
}

}  // namespace prospect_drive::estimation
