#include "prospect_drive/kinematics.hpp"

#include "prospect_drive/errors.hpp"

#include <cmath>

namespace prospect_drive
{

std::string to_string(Decision d) { return d == Decision::Pass ? "pass" : "yield"; }

Decision parse_decision(const std::string & text)
{
  if (text == "pass") {
    return Decision::Pass;
  }
  if (text == "yield") {
    return Decision::Yield;
  }
  fail(ErrorCode::ParseError, "unknown decision '" + text + "'");
}

void Trajectory::validate() const
{
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    fail(ErrorCode::InvalidTrajectory, "dt must be positive");
  }
  if (stations.size() < 2) {
    fail(ErrorCode::InvalidTrajectory, "trajectory needs at least two samples");
  }
}

void InteractionPair::validate() const
{
  target.validate();
  interacting.validate();
  if (target.size() != interacting.size()) {
    fail(
      ErrorCode::InconsistentPair, "pair '" + pair_id + "': target has " +
                                     std::to_string(target.size()) + " samples, interacting has " +
                                     std::to_string(interacting.size()));
  }
  if (std::abs(target.dt - interacting.dt) > 1e-9 * target.dt) {
    fail(ErrorCode::InconsistentPair, "pair '" + pair_id + "': sampling intervals differ");
  }
}

namespace differencing
{

std::ptrdiff_t difference_source(std::size_t k, int order, std::size_t n)
{
  const auto o = static_cast<std::size_t>(order);
  if (n <= o) {
    return -1;
  }
  return static_cast<std::ptrdiff_t>(k < o ? o : k);
}

}  // namespace differencing

KinematicProfile kinematics(const Trajectory & traj)
{
  traj.validate();
  const auto & s = traj.stations;
  const std::size_t n = s.size();
  const double dt = traj.dt;

  KinematicProfile out;
  out.speeds.assign(n, 0.0);
  out.accelerations.assign(n, 0.0);
  out.jerks.assign(n, 0.0);

  // Raw differences exist from index 1/2/3; earlier slots copy forward.
  std::vector<double> v(n, 0.0);
  std::vector<double> a(n, 0.0);
  std::vector<double> j(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    v[k] = (s[k] - s[k - 1]) / dt;
  }
  for (std::size_t k = 2; k < n; ++k) {
    a[k] = (v[k] - v[k - 1]) / dt;
  }
  for (std::size_t k = 3; k < n; ++k) {
    j[k] = (a[k] - a[k - 1]) / dt;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (const auto src = differencing::difference_source(k, 1, n); src >= 0) {
      out.speeds[k] = v[static_cast<std::size_t>(src)];
    }
    if (const auto src = differencing::difference_source(k, 2, n); src >= 0) {
      out.accelerations[k] = a[static_cast<std::size_t>(src)];
    }
    if (const auto src = differencing::difference_source(k, 3, n); src >= 0) {
      out.jerks[k] = j[static_cast<std::size_t>(src)];
    }
  }
  return out;
}

std::vector<Frame> slice_frames(const InteractionPair & pair, std::size_t window, std::size_t stride)
{
  pair.validate();
  if (window < 2) {
    fail(ErrorCode::InvalidArgument, "frame window must hold at least two samples");
  }
  if (stride < 1) {
    fail(ErrorCode::InvalidArgument, "frame stride must be positive");
  }
  const std::size_t n = pair.size();
  if (window > n) {
    fail(
      ErrorCode::WindowTooLong, "window of " + std::to_string(window) + " exceeds pair '" +
                                  pair.pair_id + "' of length " + std::to_string(n));
  }
  std::vector<Frame> frames;
  frames.reserve((n - window) / stride + 1);
  for (std::size_t start = 0; start + window <= n; start += stride) {
    Frame f;
    f.pair_id = pair.pair_id;
    f.start = start;
    f.label = pair.label;
    const auto first = static_cast<std::ptrdiff_t>(start);
    const auto last = static_cast<std::ptrdiff_t>(start + window);
    f.target.dt = pair.target.dt;
    f.target.stations.assign(
      pair.target.stations.begin() + first, pair.target.stations.begin() + last);
    f.interacting.dt = pair.interacting.dt;
    f.interacting.stations.assign(
      pair.interacting.stations.begin() + first, pair.interacting.stations.begin() + last);
    frames.push_back(std::move(f));
  }
  return frames;
}

std::optional<double> try_ttc(double station, double speed)
{
  if (!(station < 0.0) || !(speed > kSpeedFloor)) {
    return std::nullopt;
  }
  return -station / speed;
}

double ttc(double station, double speed)
{
  const auto t = try_ttc(station, speed);
  if (!t) {
    fail(ErrorCode::NotApproaching, "vehicle is stopped or past the crossing");
  }
  return *t;
}

}  // namespace prospect_drive
