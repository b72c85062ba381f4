#pragma once

#include "prospect_drive/cpt.hpp"
#include "prospect_drive/estimation.hpp"
#include "prospect_drive/features.hpp"
#include "prospect_drive/kinematics.hpp"
#include "prospect_drive/synthesis.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace prospect_drive::evaluation
{

/// Everything the CPT pipeline needs besides theta and the CPT parameters.
struct PredictorConfig
{
  UtilityConfig utility;
  synthesis::MotionLimits limits;
  std::size_t horizon{30};       // samples of the synthesized futures
  double stop_offset{3.0};       // yield stop bound sits this far before the crossing
  double clearance_margin{1.0};  // m
  synthesis::OptimizerOptions optimizer;
};

struct CptPrediction
{
  double pr_pass{0.5};
  Decision decision{Decision::Yield};
  cpt::DrivingUtilities utilities;  // after the gains-only shift
  double p_yield{0.5};
  double utility_shift{0.0};  // added to all three utilities, 0 unless one was negative
  std::size_t k0{0};
  bool stop_bound_relaxed{false};
};

/// Soft TTC comparison at the frame's last sample. Degenerate states: target
/// past the crossing -> 1; target stopped with the interacting vehicle
/// approaching -> 0; interacting not approaching while the target is -> 1;
/// neither approaching -> 0.5.
[[nodiscard]] double ttc_predict(const Frame & frame);

/// Full pipeline on one frame: synthesize the three target futures, score
/// them, value the prospects and take the softmax.
[[nodiscard]] CptPrediction cpt_predict(
  const Frame & frame, const UtilityWeights & theta, const PredictorConfig & cfg,
  const cpt::CptParams & params, cpt::WeightingMode mode);

/// Expected-utility ablation: cpt_predict with every CPT exponent at 1.
[[nodiscard]] CptPrediction eut_predict(
  const Frame & frame, const UtilityWeights & theta, const PredictorConfig & cfg);

/// Utilities and yield probability for the parameter fit; the label is
/// required (UnlabeledFrame otherwise).
[[nodiscard]] estimation::CptObservation make_observation(
  const Frame & frame, const UtilityWeights & theta, const PredictorConfig & cfg);

struct PredictionRecord
{
  std::string pair_id;
  std::size_t frame{0};
  std::string model;
  double pr_pass{0.5};
  std::optional<Decision> truth;
};

enum class Granularity { Frame, Pair };

[[nodiscard]] std::string to_string(Granularity g);
[[nodiscard]] Granularity parse_granularity(const std::string & text);

struct EvaluationReport
{
  std::string model;
  double success_rate{0.0};
  /// confusion[truth][predicted], index 0 = pass, 1 = yield.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  std::size_t samples{0};
  double threshold{0.5};
  Granularity granularity{Granularity::Frame};
};

/// Success rate of one model's records. Predicted pass iff pr_pass >
/// threshold; pair granularity takes a per-pair majority vote (ties yield).
/// Throws UnlabeledFrame, EmptyDataset.
[[nodiscard]] EvaluationReport evaluate(
  std::span<const PredictionRecord> records, double threshold = 0.5,
  Granularity granularity = Granularity::Frame);

using Predictor = std::function<double(const Frame &)>;

[[nodiscard]] EvaluationReport evaluate(
  const std::string & model, const Predictor & predictor, std::span<const Frame> frames,
  double threshold = 0.5, Granularity granularity = Granularity::Frame);

/// One report per model name, in first-appearance order.
[[nodiscard]] std::vector<EvaluationReport> evaluate_models(
  std::span<const PredictionRecord> records, double threshold = 0.5,
  Granularity granularity = Granularity::Frame);

/// Plain-text success-rate table, one column per model.
[[nodiscard]] std::string format_table(std::span<const EvaluationReport> reports);

}  // namespace prospect_drive::evaluation
