#pragma once

#include "prospect_drive/cpt.hpp"
#include "prospect_drive/dataset.hpp"
#include "prospect_drive/estimation.hpp"
#include "prospect_drive/evaluation.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace prospect_drive
{

/// Settings shared by every CLI command.
struct PipelineConfig
{
  std::uint64_t seed{1};
  std::size_t window{kDefaultWindow};
  std::size_t stride{1};
  evaluation::PredictorConfig predictor;
  cpt::WeightingMode mode{cpt::WeightingMode::PaperExact};
  estimation::CptFitOptions fit;
  estimation::IrlConfig irl;
  dataset::SynthConfig synth;
  double train_fraction{0.8};
  std::uint64_t split_seed{1};
  double threshold{0.5};
};

/// `key = value` lines, `#` starts a comment. Unknown keys and malformed
/// values raise ParseError. The seed drives both the generator and the IRL
/// candidates; PROSPECT_DRIVE_SEED, when set, replaces it.
[[nodiscard]] PipelineConfig parse_config(std::istream & in, const std::string & source);
[[nodiscard]] PipelineConfig load_config(const std::filesystem::path & path);

/// Applies the seed override from the environment, if any.
void apply_seed_override(PipelineConfig & cfg);

}  // namespace prospect_drive
