#include "prospect_drive/dataset.hpp"

#include "prospect_drive/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace prospect_drive::dataset
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

std::vector<std::string> split_fields(const std::string & line)
{
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    fields.push_back(trim(field));
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

/// Minimal header-addressed CSV reader; blank lines are skipped.
class CsvReader
{
public:
  CsvReader(std::istream & in, std::string source) : in_(in), source_(std::move(source))
  {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!trim(line).empty()) {
        header_ = split_fields(line);
        return;
      }
    }
    fail(ErrorCode::SchemaError, source_ + ": missing header");
  }

  std::size_t column(const std::string & name) const
  {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) {
      fail(ErrorCode::SchemaError, source_ + ": missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header_.begin());
  }

  std::optional<std::size_t> optional_column(const std::string & name) const
  {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) {
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - header_.begin());
  }

  bool next()
  {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (trim(line).empty()) {
        continue;
      }
      row_ = split_fields(line);
      if (row_.size() != header_.size()) {
        fail(
          ErrorCode::ParseError, where(std::nullopt) + ": expected " +
                                   std::to_string(header_.size()) + " fields, found " +
                                   std::to_string(row_.size()));
      }
      return true;
    }
    return false;
  }

  const std::string & text(std::size_t col) const { return row_.at(col); }

  double number(std::size_t col) const
  {
    const std::string & s = row_.at(col);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
      fail(ErrorCode::ParseError, where(col) + ": not a finite number: '" + s + "'");
    }
    return value;
  }

  std::size_t integer(std::size_t col) const
  {
    const std::string & s = row_.at(col);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(ErrorCode::ParseError, where(col) + ": not a non-negative integer: '" + s + "'");
    }
    return value;
  }

  std::string where(std::optional<std::size_t> col) const
  {
    std::string out = source_ + ": row " + std::to_string(line_no_);
    if (col) {
      out += ", column '" + header_.at(*col) + "'";
    }
    return out;
  }

private:
  std::istream & in_;
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::string> row_;
  std::size_t line_no_{0};
};

struct TimedValue
{
  double t;
  double value;
};

/// Sorts by time and checks uniform sampling; returns (dt, values).
std::pair<double, std::vector<double>> uniform_series(
  std::vector<TimedValue> samples, const std::string & what)
{
  std::stable_sort(samples.begin(), samples.end(), [](const auto & a, const auto & b) {
    return a.t < b.t;
  });
  if (samples.size() < 2) {
    fail(ErrorCode::InconsistentPair, what + ": fewer than two samples");
  }
  const double t0 = samples.front().t;
  const double dt = samples[1].t - t0;
  if (!(dt > 0.0)) {
    fail(ErrorCode::InconsistentPair, what + ": repeated timestamps");
  }
  std::vector<double> values;
  values.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double expected = t0 + static_cast<double>(k) * dt;
    if (std::abs(samples[k].t - expected) > 1e-6 * std::max(1.0, std::abs(expected))) {
      fail(ErrorCode::InconsistentPair, what + ": non-uniform sampling");
    }
    values.push_back(samples[k].value);
  }
  return {dt, values};
}

bool same_dt(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

enum class Role { Target, Interacting };

Role parse_role(const std::string & text, const std::string & where)
{
  if (text == "target") {
    return Role::Target;
  }
  if (text == "interacting") {
    return Role::Interacting;
  }
  fail(ErrorCode::ParseError, where + ": unknown role '" + text + "'");
}

/// Pair ids in first-appearance order with per-role series.
template <class Sample>
struct Grouped
{
  std::vector<std::string> order;
  std::unordered_map<std::string, std::array<std::vector<Sample>, 2>> series;

  std::array<std::vector<Sample>, 2> & at(const std::string & id)
  {
    auto [it, inserted] = series.try_emplace(id);
    if (inserted) {
      order.push_back(id);
    }
    return it->second;
  }
};

TrajectoryDataset assemble(
  Grouped<TimedValue> grouped, const std::string & source)
{
  TrajectoryDataset data;
  data.source = source;
  for (const auto & id : grouped.order) {
    auto & roles = grouped.series.at(id);
    InteractionPair pair;
    pair.pair_id = id;
    auto [dt_t, target] = uniform_series(std::move(roles[0]), "pair '" + id + "' target");
    auto [dt_i, inter] = uniform_series(std::move(roles[1]), "pair '" + id + "' interacting");
    pair.target = {dt_t, std::move(target)};
    pair.interacting = {dt_i, std::move(inter)};
    pair.validate();
    data.pairs.push_back(std::move(pair));
  }
  if (!data.pairs.empty()) {
    data.dt = data.pairs.front().target.dt;
  }
  data.validate();
  return data;
}

std::ifstream open_input(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::ParseError, path.string() + ": cannot open");
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorCode::InvalidArgument, path.string() + ": cannot write");
  }
  return out;
}

double uniform(std::mt19937_64 & rng, const Range & r)
{
  if (r.lo == r.hi) {
    return r.lo;
  }
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

Trajectory rollout(double s0, double v0, double a, const SynthConfig & cfg)
{
  Trajectory traj{cfg.dt, {}};
  traj.stations.reserve(cfg.pair_length);
  double s = s0;
  double v = v0;
  traj.stations.push_back(s);
  for (std::size_t k = 1; k < cfg.pair_length; ++k) {
    v = std::clamp(v + a * cfg.dt, 0.0, cfg.predictor.limits.v_max);
    s += v * cfg.dt;
    traj.stations.push_back(s);
  }
  return traj;
}

void check_range(const Range & r, const std::string & name)
{
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
    fail(ErrorCode::InvalidArgument, "range '" + name + "' is empty or not finite");
  }
}

}  // namespace

std::size_t TrajectoryDataset::labeled_count() const noexcept
{
  return static_cast<std::size_t>(
    std::count_if(pairs.begin(), pairs.end(), [](const auto & p) { return p.label.has_value(); }));
}

std::size_t TrajectoryDataset::sample_count() const noexcept
{
  return std::accumulate(
    pairs.begin(), pairs.end(), std::size_t{0},
    [](std::size_t acc, const auto & p) { return acc + p.size(); });
}

void TrajectoryDataset::validate() const
{
  std::set<std::string> seen;
  for (const auto & p : pairs) {
    if (!seen.insert(p.pair_id).second) {
      fail(ErrorCode::InconsistentPair, "duplicate pair id '" + p.pair_id + "'");
    }
    p.validate();
    if (!same_dt(p.target.dt, pairs.front().target.dt)) {
      fail(ErrorCode::InconsistentPair, "pair '" + p.pair_id + "' has a different sampling step");
    }
  }
}

const InteractionPair * TrajectoryDataset::find(const std::string & pair_id) const
{
  const auto it = std::find_if(
    pairs.begin(), pairs.end(), [&](const auto & p) { return p.pair_id == pair_id; });
  return it == pairs.end() ? nullptr : &*it;
}

std::string format_double(double value)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

TrajectoryDataset read_trajectories(std::istream & in, const std::string & source)
{
  CsvReader csv(in, source);
  const auto c_id = csv.column("pair_id");
  const auto c_role = csv.column("role");
  const auto c_t = csv.column("t_s");
  const auto c_s = csv.column("station_m");
  Grouped<TimedValue> grouped;
  while (csv.next()) {
    const std::string & id = csv.text(c_id);
    if (id.empty()) {
      fail(ErrorCode::ParseError, csv.where(c_id) + ": empty pair id");
    }
    const Role role = parse_role(csv.text(c_role), csv.where(c_role));
    grouped.at(id)[role == Role::Target ? 0 : 1].push_back({csv.number(c_t), csv.number(c_s)});
  }
  return assemble(std::move(grouped), source);
}

std::vector<std::pair<std::string, Decision>> read_labels(std::istream & in, const std::string & source)
{
  CsvReader csv(in, source);
  const auto c_id = csv.column("pair_id");
  const auto c_dec = csv.column("decision");
  std::vector<std::pair<std::string, Decision>> labels;
  std::set<std::string> seen;
  while (csv.next()) {
    const std::string & id = csv.text(c_id);
    if (!seen.insert(id).second) {
      fail(ErrorCode::ParseError, csv.where(c_id) + ": duplicate label for '" + id + "'");
    }
    try {
      labels.emplace_back(id, parse_decision(csv.text(c_dec)));
    } catch (const Error &) {
      fail(ErrorCode::ParseError, csv.where(c_dec) + ": unknown decision '" + csv.text(c_dec) + "'");
    }
  }
  return labels;
}

void apply_labels(TrajectoryDataset & data, const std::vector<std::pair<std::string, Decision>> & labels)
{
  std::unordered_map<std::string, Decision> by_id(labels.begin(), labels.end());
  for (auto & p : data.pairs) {
    const auto it = by_id.find(p.pair_id);
    if (it != by_id.end()) {
      p.label = it->second;
    }
  }
}

TrajectoryDataset load_dataset(
  const std::filesystem::path & trajectory_csv,
  const std::optional<std::filesystem::path> & labels_csv)
{
  auto in = open_input(trajectory_csv);
  auto data = read_trajectories(in, trajectory_csv.string());
  if (labels_csv) {
    auto lin = open_input(*labels_csv);
    apply_labels(data, read_labels(lin, labels_csv->string()));
  }
  return data;
}

void write_trajectories(std::ostream & out, const TrajectoryDataset & data)
{
  out << "pair_id,role,t_s,station_m,lateral_m\n";
  for (const auto & p : data.pairs) {
    for (const auto & [role, traj] :
         {std::pair{"target", &p.target}, std::pair{"interacting", &p.interacting}}) {
      for (std::size_t k = 0; k < traj->size(); ++k) {
        out << p.pair_id << ',' << role << ',' << format_double(static_cast<double>(k) * traj->dt)
            << ',' << format_double(traj->stations[k]) << ",0\n";
      }
    }
  }
}

void write_labels(std::ostream & out, const TrajectoryDataset & data)
{
  out << "pair_id,decision\n";
  for (const auto & p : data.pairs) {
    if (p.label) {
      out << p.pair_id << ',' << to_string(*p.label) << '\n';
    }
  }
}

void save_dataset(
  const TrajectoryDataset & data, const std::filesystem::path & trajectory_csv,
  const std::filesystem::path & labels_csv)
{
  auto out = open_output(trajectory_csv);
  write_trajectories(out, data);
  auto lout = open_output(labels_csv);
  write_labels(lout, data);
}

std::map<std::string, geometry::ReferencePath> read_paths(std::istream & in, const std::string & source)
{
  CsvReader csv(in, source);
  const auto c_id = csv.column("path_id");
  const auto c_seq = csv.column("seq");
  const auto c_x = csv.column("x_m");
  const auto c_y = csv.column("y_m");
  std::map<std::string, std::vector<std::pair<std::size_t, geometry::Point2>>> raw;
  while (csv.next()) {
    raw[csv.text(c_id)].push_back({csv.integer(c_seq), {csv.number(c_x), csv.number(c_y)}});
  }
  std::map<std::string, geometry::ReferencePath> paths;
  for (auto & [id, pts] : raw) {
    std::stable_sort(pts.begin(), pts.end(), [](const auto & a, const auto & b) {
      return a.first < b.first;
    });
    std::vector<geometry::Point2> vertices;
    vertices.reserve(pts.size());
    for (const auto & [seq, p] : pts) {
      vertices.push_back(p);
    }
    paths.emplace(id, geometry::ReferencePath(std::move(vertices)));
  }
  return paths;
}

TrajectoryDataset frenetize(
  const std::map<std::string, geometry::ReferencePath> & paths, std::istream & cartesian,
  const std::string & source)
{
  CsvReader csv(cartesian, source);
  const auto c_id = csv.column("pair_id");
  const auto c_role = csv.column("role");
  const auto c_t = csv.column("t_s");
  const auto c_x = csv.column("x_m");
  const auto c_y = csv.column("y_m");
  const auto c_path = csv.optional_column("path_id");

  Grouped<geometry::TimedPoint> grouped;
  std::unordered_map<std::string, std::array<std::string, 2>> path_of;
  while (csv.next()) {
    const std::string & id = csv.text(c_id);
    const Role role = parse_role(csv.text(c_role), csv.where(c_role));
    const std::size_t r = role == Role::Target ? 0 : 1;
    grouped.at(id)[r].push_back({csv.number(c_t), {csv.number(c_x), csv.number(c_y)}});
    const std::string path_id = c_path ? csv.text(*c_path) : csv.text(c_role);
    auto & assigned = path_of[id][r];
    if (assigned.empty()) {
      assigned = path_id;
    } else if (assigned != path_id) {
      fail(ErrorCode::ParseError, csv.where(c_path) + ": path changes within a trajectory");
    }
  }

  const auto lookup = [&](const std::string & id) -> const geometry::ReferencePath & {
    const auto it = paths.find(id);
    if (it == paths.end()) {
      fail(ErrorCode::SchemaError, source + ": unknown path '" + id + "'");
    }
    return it->second;
  };

  Grouped<TimedValue> frenet;
  for (const auto & id : grouped.order) {
    const auto & path_t = lookup(path_of.at(id)[0]);
    const auto & path_i = lookup(path_of.at(id)[1]);
    const auto crossing = geometry::find_crossing(path_t, path_i);
    auto & out = frenet.at(id);
    const auto & roles = grouped.series.at(id);
    for (const auto & tp : geometry::to_shared_frenet(path_t, crossing.station_on_a, roles[0])) {
      out[0].push_back({tp.t, tp.pose.station});
    }
    for (const auto & tp : geometry::to_shared_frenet(path_i, crossing.station_on_b, roles[1])) {
      out[1].push_back({tp.t, tp.pose.station});
    }
  }
  return assemble(std::move(frenet), source);
}

Split split_pairs(const TrajectoryDataset & data, double train_fraction, std::uint64_t seed)
{
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "train fraction must lie in [0, 1]");
  }
  std::vector<std::string> ids;
  ids.reserve(data.pairs.size());
  for (const auto & p : data.pairs) {
    ids.push_back(p.pair_id);
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n_train =
    static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
  Split split;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  return split;
}

std::string to_string(LabelNoise noise)
{
  return noise == LabelNoise::SoftmaxSample ? "softmax_sample" : "argmax";
}

LabelNoise parse_label_noise(const std::string & text)
{
  if (text == "softmax_sample") {
    return LabelNoise::SoftmaxSample;
  }
  if (text == "argmax") {
    return LabelNoise::Argmax;
  }
  fail(ErrorCode::ParseError, "unknown label mode '" + text + "'");
}

void SynthConfig::validate() const
{
  if (n_pairs < 1) {
    fail(ErrorCode::InvalidArgument, "n_pairs must be at least 1");
  }
  if (pair_length < 3) {
    fail(ErrorCode::InvalidArgument, "pair_length must be at least 3");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    fail(ErrorCode::InvalidArgument, "dt must be positive");
  }
  check_range(target_station, "target_station");
  check_range(target_speed, "target_speed");
  check_range(target_accel, "target_accel");
  check_range(interacting_station, "interacting_station");
  check_range(interacting_speed, "interacting_speed");
  check_range(interacting_accel, "interacting_accel");
  if (target_speed.lo < 0.0 || interacting_speed.lo < 0.0) {
    fail(ErrorCode::InvalidArgument, "speed ranges must be non-negative");
  }
  for (const auto & r : {target_accel, interacting_accel}) {
    if (r.lo < predictor.limits.a_min || r.hi > predictor.limits.a_max) {
      fail(ErrorCode::InvalidArgument, "acceleration ranges must lie within the motion limits");
    }
  }
  cpt::CptParams::driving(alpha, gamma).validate();
  predictor.utility.validate();
  predictor.limits.validate();
}

SyntheticDataset generate_synthetic(const SynthConfig & cfg)
{
  cfg.validate();
  const auto params = cpt::CptParams::driving(cfg.alpha, cfg.gamma);
  const std::size_t digits = std::to_string(cfg.n_pairs - 1).size();
  std::mt19937_64 rng(cfg.rng_seed);
  SyntheticDataset out;
  out.data.dt = cfg.dt;
  out.data.source = "synthetic:" + std::to_string(cfg.rng_seed);
  out.data.pairs.reserve(cfg.n_pairs);
  out.truth.reserve(cfg.n_pairs);
  for (std::size_t i = 0; i < cfg.n_pairs; ++i) {
    const double s_t = uniform(rng, cfg.target_station);
    const double v_t = uniform(rng, cfg.target_speed);
    const double a_t = uniform(rng, cfg.target_accel);
    const double s_i = uniform(rng, cfg.interacting_station);
    const double v_i = uniform(rng, cfg.interacting_speed);
    const double a_i = uniform(rng, cfg.interacting_accel);
    const double draw = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

    InteractionPair pair;
    std::string index = std::to_string(i);
    pair.pair_id = "pair_" + std::string(digits - index.size(), '0') + index;
    pair.target = rollout(s_t, v_t, a_t, cfg);
    pair.interacting = rollout(s_i, v_i, a_i, cfg);

    const Frame frame{pair.pair_id, 0, pair.target, pair.interacting, std::nullopt};
    const auto pred = evaluation::cpt_predict(frame, cfg.theta, cfg.predictor, params, cfg.mode);
    if (cfg.label_noise == LabelNoise::Argmax) {
      pair.label = pred.decision;
    } else {
      pair.label = draw < pred.pr_pass ? Decision::Pass : Decision::Yield;
    }
    out.data.pairs.push_back(std::move(pair));
    out.truth.push_back(pred);
  }
  return out;
}

std::vector<CurveRow> export_curves(const cpt::CptParams & params, std::size_t samples, double utility_range)
{
  if (samples < 2) {
    fail(ErrorCode::InvalidArgument, "curve export needs at least two samples");
  }
  params.validate();
  std::vector<CurveRow> rows;
  rows.reserve(samples);
  const double last = static_cast<double>(samples - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    const double frac = i + 1 == samples ? 1.0 : static_cast<double>(i) / last;
    CurveRow row;
    row.p = frac;
    row.w_plus = cpt::weighting_fn(frac, params.gamma);
    row.w_minus = cpt::weighting_fn(frac, params.delta);
    row.u = i + 1 == samples ? utility_range : -utility_range + 2.0 * utility_range * frac;
    row.v = cpt::value_fn(row.u, params);
    rows.push_back(row);
  }
  return rows;
}

void write_curves(std::ostream & out, const std::vector<CurveRow> & rows)
{
  out << "p,w_plus,w_minus,u,v\n";
  for (const auto & r : rows) {
    out << format_double(r.p) << ',' << format_double(r.w_plus) << ',' << format_double(r.w_minus)
        << ',' << format_double(r.u) << ',' << format_double(r.v) << '\n';
  }
}

}  // namespace prospect_drive::dataset
