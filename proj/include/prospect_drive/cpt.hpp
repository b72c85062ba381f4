#pragma once

#include "prospect_drive/kinematics.hpp"

#include <string>
#include <utility>
#include <vector>

namespace prospect_drive::cpt
{

struct Outcome
{
  double utility{0.0};
  double probability{0.0};
};

/// Discrete prospect: non-empty, probabilities in [0, 1] summing to 1.
using Prospect = std::vector<Outcome>;

/// Throws InvalidProspect.
void validate(const Prospect & prospect);

struct CptParams
{
  double alpha{1.0};
  double beta{1.0};
  double gamma{1.0};
  double delta{1.0};
  double lambda{1.0};
  double u0{0.0};

  /// Gains-only driving parameters: beta = alpha, delta = gamma, lambda = 1,
  /// u0 = 0.
  static CptParams driving(double alpha, double gamma);

  void validate() const;
};

enum class WeightingMode {
  PaperExact,   // weights assigned to the pass outcomes exactly as in the driving form
  RankOrdered,  // rank-dependent weights after sorting the pass outcomes
};

[[nodiscard]] std::string to_string(WeightingMode mode);
[[nodiscard]] WeightingMode parse_weighting_mode(const std::string & text);

enum class ValuationMode { Cpt, Eut };

struct DrivingUtilities
{
  double pass_yield{0.0};     // target passes, interacting yields
  double pass_nonyield{0.0};  // target passes, interacting keeps its speed
  double yield{0.0};          // target yields
};

struct DrivingValues
{
  double pass{0.0};
  double yield{0.0};
};

struct DecisionProbabilities
{
  double pass{0.5};
  double yield{0.5};
};

/// (u - u0)^alpha on gains, -lambda (u0 - u)^beta on losses.
[[nodiscard]] double value_fn(double u, const CptParams & p);

/// p^g / (p^g + (1 - p)^g)^(1/g), exactly 0 and 1 at the endpoints.
[[nodiscard]] double weighting_fn(double p, double exponent);

struct DecisionWeights
{
  std::vector<double> plus;
  std::vector<double> minus;
};

/// Rank-dependent weights for a prospect sorted ascending by utility. Each
/// outcome j gets w(P[X >= x_j]) - w(P[X > x_j]), with w+ on gains (u >= u0)
/// and w- on losses. Throws UnsortedProspect.
[[nodiscard]] DecisionWeights decision_weights(const Prospect & prospect, const CptParams & p);

/// Cpt: sum of v(u) pi over gains and losses. Eut: sum of u p.
[[nodiscard]] double prospect_value(
  const Prospect & prospect, const CptParams & p, ValuationMode mode = ValuationMode::Cpt);

/// Values of passing and yielding for the two-action driving prospect.
/// Throws NegativeUtility outside the gains-only regime.
[[nodiscard]] DrivingValues driving_values(
  const DrivingUtilities & u, double p_yield, const CptParams & p,
  WeightingMode mode = WeightingMode::PaperExact);

[[nodiscard]] double logistic(double x);

/// Probability that the interacting vehicle yields, from the TTC gap.
[[nodiscard]] double yield_probability(double ttc_target, double ttc_interacting);

[[nodiscard]] DecisionProbabilities decision_probabilities(double v_pass, double v_yield);

/// Argmax; ties within 1e-12 go to yield.
[[nodiscard]] Decision decide(double v_pass, double v_yield);

}  // namespace prospect_drive::cpt
