#pragma once

#include "prospect_drive/cpt.hpp"
#include "prospect_drive/evaluation.hpp"
#include "prospect_drive/features.hpp"
#include "prospect_drive/geometry.hpp"
#include "prospect_drive/kinematics.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prospect_drive::dataset
{

struct TrajectoryDataset
{
  std::vector<InteractionPair> pairs;
  double dt{kDefaultDt};
  std::string source;

  [[nodiscard]] std::size_t pair_count() const noexcept { return pairs.size(); }
  [[nodiscard]] std::size_t labeled_count() const noexcept;
  [[nodiscard]] std::size_t sample_count() const noexcept;
  /// Throws InconsistentPair on duplicate ids, per-pair mismatch or mixed dt.
  void validate() const;
  [[nodiscard]] const InteractionPair * find(const std::string & pair_id) const;
};

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

/// Trajectory CSV `pair_id,role,t_s,station_m,lateral_m`; column order is
/// free, lateral_m is optional and ignored. Throws ParseError, SchemaError,
/// InconsistentPair.
[[nodiscard]] TrajectoryDataset read_trajectories(std::istream & in, const std::string & source);
/// Labels CSV `pair_id,decision`.
[[nodiscard]] std::vector<std::pair<std::string, Decision>> read_labels(
  std::istream & in, const std::string & source);

/// Attaches labels to matching pairs; labels for unknown pairs are ignored.
void apply_labels(TrajectoryDataset & data, const std::vector<std::pair<std::string, Decision>> & labels);

[[nodiscard]] TrajectoryDataset load_dataset(
  const std::filesystem::path & trajectory_csv,
  const std::optional<std::filesystem::path> & labels_csv = std::nullopt);

void write_trajectories(std::ostream & out, const TrajectoryDataset & data);
/// Only labeled pairs are written.
void write_labels(std::ostream & out, const TrajectoryDataset & data);
void save_dataset(
  const TrajectoryDataset & data, const std::filesystem::path & trajectory_csv,
  const std::filesystem::path & labels_csv);

/// Paths CSV `path_id,seq,x_m,y_m`, vertices ordered by seq.
[[nodiscard]] std::map<std::string, geometry::ReferencePath> read_paths(
  std::istream & in, const std::string & source);

/// Cartesian CSV `pair_id,role,t_s,x_m,y_m[,path_id]` to the shared Frenet
/// frame at the crossing of the two vehicles' paths. Without a path_id column
/// each role uses the path named after it.
[[nodiscard]] TrajectoryDataset frenetize(
  const std::map<std::string, geometry::ReferencePath> & paths, std::istream & cartesian,
  const std::string & source);

/// Pair ids split into a train and a test part, deterministic for a seed.
struct Split
{
  std::vector<std::string> train;
  std::vector<std::string> test;
};

[[nodiscard]] Split split_pairs(const TrajectoryDataset & data, double train_fraction, std::uint64_t seed);

struct Range
{
  double lo{0.0};
  double hi{0.0};
};

enum class LabelNoise { SoftmaxSample, Argmax };

[[nodiscard]] std::string to_string(LabelNoise noise);
[[nodiscard]] LabelNoise parse_label_noise(const std::string & text);

struct SynthConfig
{
  std::size_t n_pairs{200};
  std::uint64_t rng_seed{1};
  UtilityWeights theta{1.0, 0.5, 0.5, 0.333};
  double alpha{0.9827};
  double gamma{0.6742};
  cpt::WeightingMode mode{cpt::WeightingMode::PaperExact};
  Range target_station{-40.0, -15.0};
  Range target_speed{3.0, 10.0};
  Range target_accel{-1.0, 1.0};
  Range interacting_station{-40.0, -15.0};
  Range interacting_speed{3.0, 10.0};
  Range interacting_accel{-1.0, 1.0};
  std::size_t pair_length{kDefaultWindow};
  double dt{kDefaultDt};
  LabelNoise label_noise{LabelNoise::SoftmaxSample};
  evaluation::PredictorConfig predictor;

  /// Throws InvalidArgument.
  void validate() const;
};

struct SyntheticDataset
{
  TrajectoryDataset data;
  /// Forward-model prediction on each pair's last window, in pair order.
  std::vector<evaluation::CptPrediction> truth;
};

[[nodiscard]] SyntheticDataset generate_synthetic(const SynthConfig & cfg);

struct CurveRow
{
  double p{0.0};
  double w_plus{0.0};
  double w_minus{0.0};
  double u{0.0};
  double v{0.0};
};

/// `samples` evenly spaced points of the weighting functions on [0, 1] and of
/// the value function on [-utility_range, utility_range]. Throws
/// InvalidArgument for fewer than two samples.
[[nodiscard]] std::vector<CurveRow> export_curves(
  const cpt::CptParams & params, std::size_t samples, double utility_range = 10.0);

void write_curves(std::ostream & out, const std::vector<CurveRow> & rows);

}  // namespace prospect_drive::dataset
