#include "prospect_drive/cli.hpp"

#include "prospect_drive/config.hpp"
#include "prospect_drive/dataset.hpp"
#include "prospect_drive/errors.hpp"
#include "prospect_drive/estimation.hpp"
#include "prospect_drive/evaluation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <unordered_set>

namespace prospect_drive
{

namespace
{

namespace fs = std::filesystem;
using nlohmann::json;

std::ofstream open_output(const fs::path & path)
{
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorCode::InvalidArgument, path.string() + ": cannot write");
  }
  return out;
}

json read_json(const fs::path & path)
{
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::ParseError, path.string() + ": cannot open");
  }
  try {
    return json::parse(in);
  } catch (const json::exception & e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path & path, const json & doc)
{
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

PipelineConfig config_or_default(const std::string & path)
{
  if (path.empty()) {
    PipelineConfig cfg;
    apply_seed_override(cfg);
    cfg.synth.rng_seed = cfg.seed;
    cfg.irl.rng_seed = cfg.seed;
    return cfg;
  }
  return load_config(path);
}

json fit_to_json(const estimation::FitResult & fit)
{
  json doc;
  doc["theta"] = fit.theta ? json(*fit.theta) : json(nullptr);
  doc["alpha"] = fit.alpha ? json(*fit.alpha) : json(nullptr);
  doc["gamma"] = fit.gamma ? json(*fit.gamma) : json(nullptr);
  doc["loss"] = fit.loss;
  doc["converged"] = fit.converged;
  doc["iterations"] = fit.iterations;
  doc["trace"] = fit.trace;
  doc["warnings"] = fit.warnings;
  return doc;
}

UtilityWeights read_theta(const fs::path & path)
{
  const json doc = read_json(path);
  if (!doc.contains("theta") || !doc["theta"].is_array() || doc["theta"].size() != kFeatureCount) {
    fail(ErrorCode::SchemaError, path.string() + ": missing 'theta' with four weights");
  }
  UtilityWeights theta{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (!doc["theta"][f].is_number()) {
      fail(ErrorCode::SchemaError, path.string() + ": 'theta' entries must be numbers");
    }
    theta[f] = doc["theta"][f].get<double>();
  }
  return theta;
}

struct CptFile
{
  double alpha{1.0};
  double gamma{1.0};
  cpt::WeightingMode mode{cpt::WeightingMode::PaperExact};
};

CptFile read_cpt(const fs::path & path)
{
  const json doc = read_json(path);
  CptFile out;
  for (const char * key : {"alpha", "gamma"}) {
    if (!doc.contains(key) || !doc[key].is_number()) {
      fail(ErrorCode::SchemaError, path.string() + ": missing numeric '" + key + "'");
    }
  }
  out.alpha = doc["alpha"].get<double>();
  out.gamma = doc["gamma"].get<double>();
  if (doc.contains("mode")) {
    out.mode = cpt::parse_weighting_mode(doc["mode"].get<std::string>());
  }
  return out;
}

std::vector<std::string> read_id_list(const fs::path & path)
{
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::ParseError, path.string() + ": cannot open");
  }
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (!line.empty()) {
      ids.push_back(line);
    }
  }
  return ids;
}

/// Pairs selected by the configured split.
std::vector<const InteractionPair *> select_pairs(
  const dataset::TrajectoryDataset & data, const PipelineConfig & cfg, const std::string & subset)
{
  std::vector<const InteractionPair *> out;
  if (subset == "all") {
    for (const auto & p : data.pairs) {
      out.push_back(&p);
    }
    return out;
  }
  const auto split = dataset::split_pairs(data, cfg.train_fraction, cfg.split_seed);
  const auto & ids = subset == "train" ? split.train : split.test;
  const std::unordered_set<std::string> chosen(ids.begin(), ids.end());
  for (const auto & p : data.pairs) {
    if (chosen.count(p.pair_id) != 0) {
      out.push_back(&p);
    }
  }
  return out;
}

int cmd_gen(const std::string & config, const std::string & out_dir)
{
  const auto cfg = load_config(config);
  const auto synth = dataset::generate_synthetic(cfg.synth);
  fs::create_directories(out_dir);
  auto traj = open_output(fs::path(out_dir) / "trajectories.csv");
  dataset::write_trajectories(traj, synth.data);
  auto labels = open_output(fs::path(out_dir) / "labels.csv");
  dataset::write_labels(labels, synth.data);
  std::cout << "generated " << synth.data.pair_count() << " pairs ("
            << synth.data.sample_count() << " samples per vehicle pair total)\n";
  return kExitOk;
}

int cmd_frenetize(const std::string & paths_csv, const std::string & cartesian_csv, const std::string & out)
{
  std::ifstream paths_in(paths_csv);
  if (!paths_in) {
    fail(ErrorCode::ParseError, paths_csv + ": cannot open");
  }
  const auto paths = dataset::read_paths(paths_in, paths_csv);
  std::ifstream cart_in(cartesian_csv);
  if (!cart_in) {
    fail(ErrorCode::ParseError, cartesian_csv + ": cannot open");
  }
  const auto data = dataset::frenetize(paths, cart_in, cartesian_csv);
  auto os = open_output(out);
  dataset::write_trajectories(os, data);
  std::cout << "converted " << data.pair_count() << " pairs\n";
  return kExitOk;
}

int cmd_train_irl(
  const std::string & data_csv, const std::string & demos_file, const std::string & config,
  const std::string & out)
{
  const auto cfg = load_config(config);
  const auto data = dataset::load_dataset(data_csv);
  std::vector<estimation::Demonstration> demos;
  for (const auto & id : read_id_list(demos_file)) {
    const auto * pair = data.find(id);
    if (pair == nullptr) {
      fail(ErrorCode::InvalidArgument, demos_file + ": unknown pair '" + id + "'");
    }
    demos.push_back({pair->interacting, pair->target});
  }
  const auto fit = estimation::irl_fit(demos, cfg.irl, cfg.predictor.utility);
  write_json(out, fit_to_json(fit));
  for (const auto & w : fit.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  std::cout << "irl: " << demos.size() << " demonstrations, " << fit.iterations
            << " iterations, log-likelihood " << -fit.loss << '\n';
  return fit.converged ? kExitOk : kExitNonConvergence;
}

int cmd_fit_cpt(
  const std::string & data_csv, const std::string & labels_csv, const std::string & theta_json,
  const std::string & config, const std::string & mode_text, const std::string & out)
{
  auto cfg = load_config(config);
  if (!mode_text.empty()) {
    cfg.mode = cpt::parse_weighting_mode(mode_text);
  }
  const auto data = dataset::load_dataset(data_csv, fs::path(labels_csv));
  const auto theta = read_theta(theta_json);
  std::vector<estimation::CptObservation> observations;
  for (const auto * pair : select_pairs(data, cfg, cfg.train_fraction < 1.0 ? "train" : "all")) {
    if (!pair->label) {
      continue;
    }
    for (const auto & frame : slice_frames(*pair, cfg.window, cfg.stride)) {
      observations.push_back(evaluation::make_observation(frame, theta, cfg.predictor));
    }
  }
  auto fit = estimation::cpt_fit(observations, cfg.mode, cfg.fit);
  json doc = fit_to_json(fit);
  doc["mode"] = cpt::to_string(cfg.mode);
  doc["observations"] = observations.size();
  write_json(out, doc);
  for (const auto & w : fit.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  std::cout << "cpt: alpha " << fit.alpha.value_or(1.0) << ", gamma " << fit.gamma.value_or(1.0)
            << ", loss " << fit.loss << " over " << observations.size() << " frames\n";
  return fit.converged ? kExitOk : kExitNonConvergence;
}

int cmd_predict(
  const std::string & data_csv, const std::string & theta_json, const std::string & cpt_json,
  const std::string & model, const std::string & config, const std::string & subset,
  const std::string & out)
{
  const auto cfg = config_or_default(config);
  const auto data = dataset::load_dataset(data_csv);
  std::optional<UtilityWeights> theta;
  std::optional<CptFile> cpt_file;
  if (model != "ttc") {
    if (theta_json.empty()) {
      fail(ErrorCode::InvalidArgument, "--theta is required for model " + model);
    }
    theta = read_theta(theta_json);
  }
  if (model == "cpt") {
    if (cpt_json.empty()) {
      fail(ErrorCode::InvalidArgument, "--cpt is required for model cpt");
    }
    cpt_file = read_cpt(cpt_json);
  }

  auto os = open_output(out);
  os << "pair_id,frame,model,pr_pass\n";
  std::size_t count = 0;
  for (const auto * pair : select_pairs(data, cfg, subset)) {
    for (const auto & frame : slice_frames(*pair, cfg.window, cfg.stride)) {
      double pr_pass = 0.5;
      if (model == "ttc") {
        pr_pass = evaluation::ttc_predict(frame);
      } else if (model == "eut") {
        pr_pass = evaluation::eut_predict(frame, *theta, cfg.predictor).pr_pass;
      } else {
        pr_pass = evaluation::cpt_predict(
                    frame, *theta, cfg.predictor,
                    cpt::CptParams::driving(cpt_file->alpha, cpt_file->gamma), cpt_file->mode)
                    .pr_pass;
      }
      os << frame.pair_id << ',' << frame.start << ',' << model << ','
         << dataset::format_double(pr_pass) << '\n';
      ++count;
    }
  }
  std::cout << "predicted " << count << " frames with model " << model << '\n';
  return kExitOk;
}

std::vector<evaluation::PredictionRecord> read_predictions(
  const fs::path & path, const std::vector<std::pair<std::string, Decision>> & labels)
{
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::ParseError, path.string() + ": cannot open");
  }
  std::map<std::string, Decision> truth(labels.begin(), labels.end());
  std::vector<evaluation::PredictionRecord> records;
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) {
    fail(ErrorCode::SchemaError, path.string() + ": missing header");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != "pair_id,frame,model,pr_pass") {
    fail(ErrorCode::SchemaError, path.string() + ": expected header 'pair_id,frame,model,pr_pass'");
  }
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
      fields.push_back(field);
    }
    if (fields.size() != 4) {
      fail(ErrorCode::ParseError, path.string() + ": row " + std::to_string(row + 1) + ": expected 4 fields");
    }
    evaluation::PredictionRecord r;
    r.pair_id = fields[0];
    r.model = fields[2];
    try {
      r.frame = std::stoul(fields[1]);
      r.pr_pass = std::stod(fields[3]);
    } catch (const std::exception &) {
      fail(ErrorCode::ParseError, path.string() + ": row " + std::to_string(row + 1) + ": bad number");
    }
    const auto it = truth.find(r.pair_id);
    if (it != truth.end()) {
      r.truth = it->second;
    }
    records.push_back(std::move(r));
  }
  return records;
}

int cmd_evaluate(
  const std::string & predictions_csv, const std::string & labels_csv,
  const std::string & granularity_text, double threshold, const std::string & out)
{
  std::ifstream lin(labels_csv);
  if (!lin) {
    fail(ErrorCode::ParseError, labels_csv + ": cannot open");
  }
  const auto labels = dataset::read_labels(lin, labels_csv);
  const auto records = read_predictions(predictions_csv, labels);
  const auto granularity = evaluation::parse_granularity(granularity_text);
  const auto reports = evaluation::evaluate_models(records, threshold, granularity);
  json doc = json::array();
  for (const auto & r : reports) {
    doc.push_back(
      {{"model", r.model},
       {"success_rate", r.success_rate},
       {"samples", r.samples},
       {"threshold", r.threshold},
       {"granularity", evaluation::to_string(r.granularity)},
       {"confusion",
        {{"pass", {{"pass", r.confusion[0][0]}, {"yield", r.confusion[0][1]}}},
         {"yield", {{"pass", r.confusion[1][0]}, {"yield", r.confusion[1][1]}}}}}});
  }
  write_json(out, {{"reports", doc}});
  std::cout << evaluation::format_table(reports);
  return kExitOk;
}

int cmd_curves(const std::string & cpt_json, std::size_t samples, const std::string & out)
{
  const auto file = read_cpt(cpt_json);
  const auto rows = dataset::export_curves(cpt::CptParams::driving(file.alpha, file.gamma), samples);
  auto os = open_output(out);
  dataset::write_curves(os, rows);
  std::cout << "wrote " << rows.size() << " curve samples\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char ** argv)
{
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  return run_cli(args);
}

int run_cli(const std::vector<std::string> & args)
{
  CLI::App app{"Merge and intersection decision prediction with prospect theory", "prospect-drive"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string out_dir;
  std::string data;
  std::string labels;
  std::string theta;
  std::string cpt_path;
  std::string mode;
  std::string model = "cpt";
  std::string subset = "all";
  std::string granularity = "frame";
  std::string paths;
  std::string cartesian;
  std::string demos;
  std::string predictions;
  double threshold = 0.5;
  std::size_t samples = 101;

  auto * gen = app.add_subcommand("gen", "Generate a labeled synthetic dataset");
  gen->add_option("--config", config, "Config file")->required();
  gen->add_option("--out-dir", out_dir, "Output directory")->required();

  auto * frenet = app.add_subcommand("frenetize", "Convert Cartesian tracks to the shared Frenet frame");
  frenet->add_option("--paths", paths, "Reference path CSV")->required();
  frenet->add_option("--cartesian", cartesian, "Cartesian trajectory CSV")->required();
  frenet->add_option("--out", out, "Output trajectory CSV")->required();

  auto * irl = app.add_subcommand("train-irl", "Fit utility weights on demonstrations");
  irl->add_option("--data", data, "Trajectory CSV")->required();
  irl->add_option("--demos", demos, "File listing demonstration pair ids")->required();
  irl->add_option("--config", config, "Config file")->required();
  irl->add_option("--out", out, "Output theta.json")->required();

  auto * fit = app.add_subcommand("fit-cpt", "Fit the CPT exponents on labeled frames");
  fit->add_option("--data", data, "Trajectory CSV")->required();
  fit->add_option("--labels", labels, "Labels CSV")->required();
  fit->add_option("--theta", theta, "theta.json")->required();
  fit->add_option("--config", config, "Config file")->required();
  fit->add_option("--mode", mode, "Weighting mode")
    ->check(CLI::IsMember({"paper_exact", "rank_ordered"}));
  fit->add_option("--out", out, "Output cpt.json")->required();

  auto * predict = app.add_subcommand("predict", "Predict per-frame pass probabilities");
  predict->add_option("--data", data, "Trajectory CSV")->required();
  predict->add_option("--theta", theta, "theta.json");
  predict->add_option("--cpt", cpt_path, "cpt.json");
  predict->add_option("--model", model, "Model")->check(CLI::IsMember({"cpt", "ttc", "eut"}));
  predict->add_option("--config", config, "Config file");
  predict->add_option("--subset", subset, "Pairs to predict")
    ->check(CLI::IsMember({"all", "train", "test"}));
  predict->add_option("--out", out, "Output predictions CSV")->required();

  auto * eval = app.add_subcommand("evaluate", "Score predictions against labels");
  eval->add_option("--predictions", predictions, "Predictions CSV")->required();
  eval->add_option("--labels", labels, "Labels CSV")->required();
  eval->add_option("--granularity", granularity, "frame or pair")
    ->check(CLI::IsMember({"frame", "pair"}));
  eval->add_option("--threshold", threshold, "Pass threshold on Pr(pass)");
  eval->add_option("--out", out, "Output report.json")->required();

  auto * curves = app.add_subcommand("curves", "Export value and weighting curves");
  curves->add_option("--cpt", cpt_path, "cpt.json")->required();
  curves->add_option("--samples", samples, "Number of samples")->check(CLI::Range(2, 1000000));
  curves->add_option("--out", out, "Output CSV")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*gen) {
      return cmd_gen(config, out_dir);
    }
    if (*frenet) {
      return cmd_frenetize(paths, cartesian, out);
    }
    if (*irl) {
      return cmd_train_irl(data, demos, config, out);
    }
    if (*fit) {
      return cmd_fit_cpt(data, labels, theta, config, mode, out);
    }
    if (*predict) {
      return cmd_predict(data, theta, cpt_path, model, config, subset, out);
    }
    if (*eval) {
      return cmd_evaluate(predictions, labels, granularity, threshold, out);
    }
    if (*curves) {
      return cmd_curves(cpt_path, samples, out);
    }
  } catch (const Error & e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return e.code() == ErrorCode::NonConvergence ? kExitNonConvergence : kExitInputError;
  } catch (const fs::filesystem_error & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace prospect_drive
