#include "prospect_drive/config.hpp"

#include "prospect_drive/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

namespace prospect_drive
{

namespace
{

std::string trim(const std::string & s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string & text, const std::string & key)
{
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    fail(ErrorCode::ParseError, "config key '" + key + "': not a finite number: '" + text + "'");
  }
  return value;
}

std::uint64_t to_unsigned(const std::string & text, const std::string & key)
{
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorCode::ParseError, "config key '" + key + "': not a non-negative integer: '" + text + "'");
  }
  return value;
}

std::vector<double> to_list(const std::string & text, const std::string & key, std::size_t count)
{
  std::vector<double> values;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    values.push_back(to_double(trim(item), key));
  }
  if (values.size() != count) {
    fail(
      ErrorCode::ParseError,
      "config key '" + key + "': expected " + std::to_string(count) + " comma-separated values");
  }
  return values;
}

dataset::Range to_range(const std::string & text, const std::string & key)
{
  const auto v = to_list(text, key, 2);
  return {v[0], v[1]};
}

using Setter = std::function<void(PipelineConfig &, const std::string &, const std::string &)>;

const std::map<std::string, Setter> & setters()
{
  static const std::map<std::string, Setter> table = {
    {"seed", [](auto & c, auto & v, auto & k) { c.seed = to_unsigned(v, k); }},
    {"dt", [](auto & c, auto & v, auto & k) { c.synth.dt = to_double(v, k); }},
    {"window", [](auto & c, auto & v, auto & k) { c.window = to_unsigned(v, k); }},
    {"stride", [](auto & c, auto & v, auto & k) { c.stride = to_unsigned(v, k); }},
    {"horizon", [](auto & c, auto & v, auto & k) { c.predictor.horizon = to_unsigned(v, k); }},
    {"v_traffic", [](auto & c, auto & v, auto & k) { c.predictor.utility.v_traffic = to_double(v, k); }},
    {"scales",
     [](auto & c, auto & v, auto & k) {
       const auto s = to_list(v, k, kFeatureCount);
       std::copy(s.begin(), s.end(), c.predictor.utility.scales.begin());
     }},
    {"a_min", [](auto & c, auto & v, auto & k) { c.predictor.limits.a_min = to_double(v, k); }},
    {"a_max", [](auto & c, auto & v, auto & k) { c.predictor.limits.a_max = to_double(v, k); }},
    {"v_max", [](auto & c, auto & v, auto & k) { c.predictor.limits.v_max = to_double(v, k); }},
    {"stop_offset", [](auto & c, auto & v, auto & k) { c.predictor.stop_offset = to_double(v, k); }},
    {"clearance_margin",
     [](auto & c, auto & v, auto & k) { c.predictor.clearance_margin = to_double(v, k); }},
    {"optimizer.max_iterations",
     [](auto & c, auto & v, auto & k) { c.predictor.optimizer.max_iterations = to_unsigned(v, k); }},
    {"optimizer.tolerance",
     [](auto & c, auto & v, auto & k) {
       c.predictor.optimizer.improvement_tolerance = to_double(v, k);
     }},
    {"mode", [](auto & c, auto & v, auto &) { c.mode = cpt::parse_weighting_mode(v); }},
    {"grid_resolution", [](auto & c, auto & v, auto & k) { c.fit.grid_resolution = to_unsigned(v, k); }},
    {"threshold", [](auto & c, auto & v, auto & k) { c.threshold = to_double(v, k); }},
    {"train_fraction", [](auto & c, auto & v, auto & k) { c.train_fraction = to_double(v, k); }},
    {"split_seed", [](auto & c, auto & v, auto & k) { c.split_seed = to_unsigned(v, k); }},
    {"irl.candidates", [](auto & c, auto & v, auto & k) { c.irl.candidate_count = to_unsigned(v, k); }},
    {"irl.perturbation",
     [](auto & c, auto & v, auto & k) { c.irl.perturbation_scale = to_double(v, k); }},
    {"irl.learning_rate", [](auto & c, auto & v, auto & k) { c.irl.learning_rate = to_double(v, k); }},
    {"irl.max_iterations",
     [](auto & c, auto & v, auto & k) { c.irl.max_iterations = to_unsigned(v, k); }},
    {"irl.tolerance",
     [](auto & c, auto & v, auto & k) { c.irl.gradient_tolerance = to_double(v, k); }},
    {"synth.n_pairs", [](auto & c, auto & v, auto & k) { c.synth.n_pairs = to_unsigned(v, k); }},
    {"synth.pair_length",
     [](auto & c, auto & v, auto & k) { c.synth.pair_length = to_unsigned(v, k); }},
    {"synth.theta",
     [](auto & c, auto & v, auto & k) {
       const auto t = to_list(v, k, kFeatureCount);
       std::copy(t.begin(), t.end(), c.synth.theta.begin());
     }},
    {"synth.alpha", [](auto & c, auto & v, auto & k) { c.synth.alpha = to_double(v, k); }},
    {"synth.gamma", [](auto & c, auto & v, auto & k) { c.synth.gamma = to_double(v, k); }},
    {"synth.mode", [](auto & c, auto & v, auto &) { c.synth.mode = cpt::parse_weighting_mode(v); }},
    {"synth.labels",
     [](auto & c, auto & v, auto &) { c.synth.label_noise = dataset::parse_label_noise(v); }},
    {"synth.target_station",
     [](auto & c, auto & v, auto & k) { c.synth.target_station = to_range(v, k); }},
    {"synth.target_speed", [](auto & c, auto & v, auto & k) { c.synth.target_speed = to_range(v, k); }},
    {"synth.target_accel", [](auto & c, auto & v, auto & k) { c.synth.target_accel = to_range(v, k); }},
    {"synth.interacting_station",
     [](auto & c, auto & v, auto & k) { c.synth.interacting_station = to_range(v, k); }},
    {"synth.interacting_speed",
     [](auto & c, auto & v, auto & k) { c.synth.interacting_speed = to_range(v, k); }},
    {"synth.interacting_accel",
     [](auto & c, auto & v, auto & k) { c.synth.interacting_accel = to_range(v, k); }},
  };
  return table;
}

void finalize(PipelineConfig & cfg)
{
  apply_seed_override(cfg);
  cfg.synth.rng_seed = cfg.seed;
  cfg.irl.rng_seed = cfg.seed;
  cfg.synth.predictor = cfg.predictor;
  if (cfg.window < 3) {
    fail(ErrorCode::ParseError, "config key 'window' must be at least 3");
  }
  if (cfg.stride < 1) {
    fail(ErrorCode::ParseError, "config key 'stride' must be at least 1");
  }
  try {
    cfg.predictor.utility.validate();
    cfg.predictor.limits.validate();
    cfg.irl.validate();
    cfg.synth.validate();
  } catch (const Error & e) {
    fail(ErrorCode::ParseError, std::string("invalid configuration: ") + e.what());
  }
}

}  // namespace

void apply_seed_override(PipelineConfig & cfg)
{
  const char * env = std::getenv("PROSPECT_DRIVE_SEED");
  if (env != nullptr && *env != '\0') {
    cfg.seed = to_unsigned(trim(env), "PROSPECT_DRIVE_SEED");
  }
}

PipelineConfig parse_config(std::istream & in, const std::string & source)
{
  PipelineConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    const std::string where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) {
      fail(ErrorCode::ParseError, where + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      fail(ErrorCode::ParseError, where + ": unknown key '" + key + "'");
    }
    try {
      it->second(cfg, value, key);
    } catch (const Error & e) {
      fail(ErrorCode::ParseError, where + ": " + e.what());
    }
  }
  finalize(cfg);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::ParseError, path.string() + ": cannot open");
  }
  return parse_config(in, path.string());
}

}  // namespace prospect_drive
