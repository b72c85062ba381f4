#include "prospect_drive/evaluation.hpp"

#include "prospect_drive/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace prospect_drive::evaluation
{

namespace
{

struct LastState
{
  double station;
  double speed;
  double acceleration;
};

LastState last_state(const Trajectory & traj)
{
  const auto kin = kinematics(traj);
  return {traj.stations.back(), kin.speeds.back(), kin.accelerations.back()};
}

synthesis::InitialState to_initial(const LastState & s)
{
  return {s.station, std::max(0.0, s.speed), s.acceleration};
}

std::size_t index_of(Decision d) { return d == Decision::Pass ? 0 : 1; }

}  // namespace

double ttc_predict(const Frame & frame)
{
  const auto target = last_state(frame.target);
  const auto inter = last_state(frame.interacting);
  if (target.station >= 0.0) {
    return 1.0;
  }
  const auto ttc_t = try_ttc(target.station, target.speed);
  const auto ttc_i = try_ttc(inter.station, inter.speed);
  if (ttc_t && ttc_i) {
    return cpt::logistic(*ttc_i - *ttc_t);
  }
  if (ttc_i) {
    return 0.0;  // target stopped before the crossing
  }
  if (ttc_t) {
    return 1.0;
  }
  return 0.5;
}

CptPrediction cpt_predict(
  const Frame & frame, const UtilityWeights & theta, const PredictorConfig & cfg,
  const cpt::CptParams & params, cpt::WeightingMode mode)
{
  frame.target.validate();
  frame.interacting.validate();
  const double dt = frame.target.dt;
  const auto target = to_initial(last_state(frame.target));
  const auto inter = to_initial(last_state(frame.interacting));

  const auto pass = synthesis::optimal_pass_trajectory(
    target, theta, cfg.utility, cfg.limits, cfg.horizon, dt, cfg.optimizer);
  const auto inter_constant = synthesis::constant_speed_trajectory(inter, cfg.horizon, dt);
  const auto composed =
    synthesis::compose_pass_nonyield(pass, inter_constant, cfg.limits, cfg.clearance_margin);

  synthesis::YieldConstraint bound{
    -cfg.stop_offset, cfg.clearance_margin,
    synthesis::clearance_index(inter_constant, cfg.clearance_margin)};
  CptPrediction out;
  // A target that can no longer stop behind the bar yields at the earliest
  // reachable stop point instead.
  if (bound.release_index.value_or(1) > 0) {
    const std::size_t steps = std::min(bound.release_index.value_or(cfg.horizon), cfg.horizon) - 1;
    const double earliest =
      target.station + synthesis::braking_distance(target.speed, cfg.limits.a_min, dt, steps);
    const double needed = std::max(target.station, earliest);
    if (needed > bound.stop_station) {
      bound.stop_station = needed + 1e-9 * std::max(1.0, std::abs(needed));
      out.stop_bound_relaxed = true;
    }
  }
  const auto yield = synthesis::optimal_yield_trajectory(
    target, bound, theta, cfg.utility, cfg.limits, cfg.horizon, dt, cfg.optimizer);

  cpt::DrivingUtilities u{
    utility_solo(pass, theta, cfg.utility),
    utility(composed.trajectory, inter_constant, theta, cfg.utility),
    utility(yield, inter_constant, theta, cfg.utility)};
  const double lowest = std::min({u.pass_yield, u.pass_nonyield, u.yield});
  if (lowest < 0.0) {
    out.utility_shift = -lowest;
    u.pass_yield += out.utility_shift;
    u.pass_nonyield += out.utility_shift;
    u.yield += out.utility_shift;
  }

  out.utilities = u;
  out.p_yield = ttc_predict(frame);
  out.k0 = composed.k0;
  const auto values = cpt::driving_values(u, out.p_yield, params, mode);
  out.pr_pass = cpt::decision_probabilities(values.pass, values.yield).pass;
  out.decision = cpt::decide(values.pass, values.yield);
  return out;
}

CptPrediction eut_predict(const Frame & frame, const UtilityWeights & theta, const PredictorConfig & cfg)
{
  return cpt_predict(
    frame, theta, cfg, cpt::CptParams::driving(1.0, 1.0), cpt::WeightingMode::PaperExact);
}

estimation::CptObservation make_observation(
  const Frame & frame, const UtilityWeights & theta, const PredictorConfig & cfg)
{
  if (!frame.label) {
    fail(ErrorCode::UnlabeledFrame, "frame of pair '" + frame.pair_id + "' has no label");
  }
  const auto pred =
    cpt_predict(frame, theta, cfg, cpt::CptParams::driving(1.0, 1.0), cpt::WeightingMode::PaperExact);
  return {pred.utilities, pred.p_yield, *frame.label};
}

std::string to_string(Granularity g) { return g == Granularity::Frame ? "frame" : "pair"; }

Granularity parse_granularity(const std::string & text)
{
  if (text == "frame") {
    return Granularity::Frame;
  }
  if (text == "pair") {
    return Granularity::Pair;
  }
  fail(ErrorCode::ParseError, "unknown granularity '" + text + "'");
}

EvaluationReport evaluate(
  std::span<const PredictionRecord> records, double threshold, Granularity granularity)
{
  if (records.empty()) {
    fail(ErrorCode::EmptyDataset, "no predictions to evaluate");
  }
  EvaluationReport report;
  report.model = records.front().model;
  report.threshold = threshold;
  report.granularity = granularity;

  const auto tally = [&](Decision truth, Decision predicted) {
    ++report.confusion[index_of(truth)][index_of(predicted)];
    ++report.samples;
  };

  if (granularity == Granularity::Frame) {
    for (const auto & r : records) {
      if (!r.truth) {
        fail(ErrorCode::UnlabeledFrame, "prediction for pair '" + r.pair_id + "' has no label");
      }
      tally(*r.truth, r.pr_pass > threshold ? Decision::Pass : Decision::Yield);
    }
  } else {
    struct Votes
    {
      std::size_t pass{0};
      std::size_t yield{0};
      Decision truth{Decision::Yield};
    };
    std::vector<std::string> order;
    std::map<std::string, Votes> votes;
    for (const auto & r : records) {
      if (!r.truth) {
        fail(ErrorCode::UnlabeledFrame, "prediction for pair '" + r.pair_id + "' has no label");
      }
      auto [it, inserted] = votes.try_emplace(r.pair_id);
      if (inserted) {
        order.push_back(r.pair_id);
      }
      it->second.truth = *r.truth;
      ++(r.pr_pass > threshold ? it->second.pass : it->second.yield);
    }
    for (const auto & id : order) {
      const auto & v = votes.at(id);
      tally(v.truth, v.pass > v.yield ? Decision::Pass : Decision::Yield);
    }
  }
  report.success_rate =
    static_cast<double>(report.confusion[0][0] + report.confusion[1][1]) /
    static_cast<double>(report.samples);
  return report;
}

EvaluationReport evaluate(
  const std::string & model, const Predictor & predictor, std::span<const Frame> frames,
  double threshold, Granularity granularity)
{
  std::vector<PredictionRecord> records;
  records.reserve(frames.size());
  for (const auto & f : frames) {
    if (!f.label) {
      fail(ErrorCode::UnlabeledFrame, "frame of pair '" + f.pair_id + "' has no label");
    }
    records.push_back({f.pair_id, f.start, model, predictor(f), f.label});
  }
  return evaluate(records, threshold, granularity);
}

std::vector<EvaluationReport> evaluate_models(
  std::span<const PredictionRecord> records, double threshold, Granularity granularity)
{
  std::vector<std::string> models;
  std::map<std::string, std::vector<PredictionRecord>> by_model;
  for (const auto & r : records) {
    auto [it, inserted] = by_model.try_emplace(r.model);
    if (inserted) {
      models.push_back(r.model);
    }
    it->second.push_back(r);
  }
  std::vector<EvaluationReport> out;
  for (const auto & m : models) {
    out.push_back(evaluate(by_model.at(m), threshold, granularity));
  }
  return out;
}

std::string format_table(std::span<const EvaluationReport> reports)
{
  std::ostringstream header;
  std::ostringstream rule;
  std::ostringstream row;
  constexpr int label_width = 15;
  constexpr int col_width = 9;
  header << std::string(label_width, ' ');
  row << "Success rates" << std::string(label_width - 13, ' ');
  for (const auto & r : reports) {
    std::string name = r.model;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) {
      return static_cast<char>(std::toupper(c));
    });
    char cell[32];
    std::snprintf(cell, sizeof(cell), "%.2f%%", 100.0 * r.success_rate);
    header << "| " << name << std::string(static_cast<std::size_t>(std::max<int>(0, col_width - static_cast<int>(name.size()))), ' ');
    const std::string text(cell);
    row << "| " << text << std::string(static_cast<std::size_t>(std::max<int>(0, col_width - static_cast<int>(text.size()))), ' ');
  }
  const std::string head = header.str();
  rule << std::string(head.size(), '-');
  return head + "\n" + rule.str() + "\n" + row.str() + "\n";
}

}  // namespace prospect_drive::evaluation
