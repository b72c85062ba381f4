#include "prospect_drive/cpt.hpp"

#include "prospect_drive/errors.hpp"

#include <algorithm>
#include <cmath>

namespace prospect_drive::cpt
{

void validate(const Prospect & prospect)
{
  if (prospect.empty()) {
    fail(ErrorCode::InvalidProspect, "prospect has no outcomes");
  }
  double total = 0.0;
  for (const auto & o : prospect) {
    if (!std::isfinite(o.utility) || !(o.probability >= 0.0 && o.probability <= 1.0)) {
      fail(ErrorCode::InvalidProspect, "outcome utility or probability out of range");
    }
    total += o.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorCode::InvalidProspect, "probabilities do not sum to one");
  }
}

CptParams CptParams::driving(double alpha, double gamma)
{
  return CptParams{alpha, alpha, gamma, gamma, 1.0, 0.0};
}

void CptParams::validate() const
{
  const auto unit = [](double x) { return x > 0.0 && x <= 1.0; };
  if (!unit(alpha) || !unit(beta) || !unit(gamma) || !unit(delta)) {
    fail(ErrorCode::InvalidArgument, "alpha, beta, gamma, delta must lie in (0, 1]");
  }
  if (!(lambda >= 1.0) || !std::isfinite(u0)) {
    fail(ErrorCode::InvalidArgument, "lambda must be >= 1 and u0 finite");
  }
}

std::string to_string(WeightingMode mode)
{
  return mode == WeightingMode::PaperExact ? "paper_exact" : "rank_ordered";
}

WeightingMode parse_weighting_mode(const std::string & text)
{
  if (text == "paper_exact") {
    return WeightingMode::PaperExact;
  }
  if (text == "rank_ordered") {
    return WeightingMode::RankOrdered;
  }
  fail(ErrorCode::ParseError, "unknown weighting mode '" + text + "'");
}

double value_fn(double u, const CptParams & p)
{
  if (u >= p.u0) {
    return std::pow(u - p.u0, p.alpha);
  }
  return -p.lambda * std::pow(p.u0 - u, p.beta);
}

double weighting_fn(double p, double exponent)
{
  if (p <= 0.0) {
    return 0.0;
  }
  if (p >= 1.0) {
    return 1.0;
  }
  if (exponent == 1.0) {
    return p;
  }
  const double num = std::pow(p, exponent);
  const double den = std::pow(num + std::pow(1.0 - p, exponent), 1.0 / exponent);
  return num / den;
}

DecisionWeights decision_weights(const Prospect & prospect, const CptParams & p)
{
  validate(prospect);
  for (std::size_t j = 1; j < prospect.size(); ++j) {
    if (prospect[j].utility < prospect[j - 1].utility) {
      fail(ErrorCode::UnsortedProspect, "outcomes must be sorted ascending by utility");
    }
  }
  const std::size_t m = prospect.size();
  DecisionWeights out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};

  // Decumulative probability from the top; the best outcome's tail is its own
  // probability and the worst's is the full mass.
  double above = 0.0;
  for (std::size_t j = m; j-- > 0;) {
    const double at_or_above = j == 0 ? 1.0 : std::min(1.0, above + prospect[j].probability);
    if (prospect[j].utility >= p.u0) {
      out.plus[j] = weighting_fn(at_or_above, p.gamma) - weighting_fn(above, p.gamma);
    } else {
      out.minus[j] = weighting_fn(at_or_above, p.delta) - weighting_fn(above, p.delta);
    }
    above = at_or_above;
  }
  return out;
}

double prospect_value(const Prospect & prospect, const CptParams & p, ValuationMode mode)
{
  validate(prospect);
  if (mode == ValuationMode::Eut) {
    double total = 0.0;
    for (const auto & o : prospect) {
      total += o.utility * o.probability;
    }
    return total;
  }
  Prospect sorted = prospect;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Outcome & a, const Outcome & b) {
    return a.utility < b.utility;
  });
  const auto w = decision_weights(sorted, p);
  double total = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    const double v = value_fn(sorted[j].utility, p);
    total += v * (sorted[j].utility >= p.u0 ? w.plus[j] : w.minus[j]);
  }
  return total;
}

DrivingValues driving_values(
  const DrivingUtilities & u, double p_yield, const CptParams & p, WeightingMode mode)
{
  if (u.pass_yield < 0.0 || u.pass_nonyield < 0.0 || u.yield < 0.0) {
    fail(ErrorCode::NegativeUtility, "driving utilities must be non-negative");
  }
  if (!(p_yield >= 0.0 && p_yield <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "yield probability outside [0, 1]");
  }
  CptParams gains = p;
  gains.u0 = 0.0;
  DrivingValues out;
  out.yield = value_fn(u.yield, gains);
  if (mode == WeightingMode::PaperExact) {
    const double w = weighting_fn(p_yield, gains.gamma);
    out.pass = value_fn(u.pass_yield, gains) * (1.0 - w) + value_fn(u.pass_nonyield, gains) * w;
  } else {
    out.pass = prospect_value(
      {{u.pass_yield, p_yield}, {u.pass_nonyield, 1.0 - p_yield}}, gains, ValuationMode::Cpt);
  }
  return out;
}

double logistic(double x)
{
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double yield_probability(double ttc_target, double ttc_interacting)
{
  return logistic(ttc_interacting - ttc_target);
}

DecisionProbabilities decision_probabilities(double v_pass, double v_yield)
{
  const double pass = logistic(v_pass - v_yield);
  return {pass, 1.0 - pass};
}

Decision decide(double v_pass, double v_yield)
{
  return v_pass - v_yield > 1e-12 ? Decision::Pass : Decision::Yield;
}

}  // namespace prospect_drive::cpt
