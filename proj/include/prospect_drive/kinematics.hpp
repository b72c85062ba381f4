#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace prospect_drive
{

enum class Decision { Pass, Yield };

[[nodiscard]] std::string to_string(Decision d);
/// Accepts "pass" / "yield"; throws ParseError otherwise.
[[nodiscard]] Decision parse_decision(const std::string & text);

/// Uniformly sampled stations of one vehicle in the shared Frenet frame.
struct Trajectory
{
  double dt{0.1};
  std::vector<double> stations;

  [[nodiscard]] std::size_t size() const noexcept { return stations.size(); }
  /// Throws InvalidTrajectory unless dt > 0 and there are at least two samples.
  void validate() const;
};

struct KinematicProfile
{
  std::vector<double> speeds;
  std::vector<double> accelerations;
  std::vector<double> jerks;
};

struct InteractionPair
{
  std::string pair_id;
  Trajectory target;
  Trajectory interacting;
  std::optional<Decision> label;

  [[nodiscard]] std::size_t size() const noexcept { return target.size(); }
  /// Throws InconsistentPair on dt or length mismatch.
  void validate() const;
};

struct Frame
{
  std::string pair_id;
  std::size_t start{0};  // first sample of the window within the pair
  Trajectory target;
  Trajectory interacting;
  std::optional<Decision> label;
};

inline constexpr double kDefaultDt = 0.1;
inline constexpr std::size_t kDefaultWindow = 10;
inline constexpr double kSpeedFloor = 1e-3;

namespace differencing
{

/// Sample whose backward difference defines entry k of the given order. Early
/// entries copy the first defined value; -1 when the order is undefined for n.
[[nodiscard]] std::ptrdiff_t difference_source(std::size_t k, int order, std::size_t n);

}  // namespace differencing

/// Backward differences; the first 1/2/3 entries copy the first defined value.
/// Orders not defined for the length (acceleration for n == 2, jerk for n < 4)
/// are zero.
[[nodiscard]] KinematicProfile kinematics(const Trajectory & traj);

/// Moving windows over a pair. Throws WindowTooLong, InvalidArgument.
[[nodiscard]] std::vector<Frame> slice_frames(
  const InteractionPair & pair, std::size_t window = kDefaultWindow, std::size_t stride = 1);

/// Time for a vehicle at `station` (< 0 before the crossing) to reach it at
/// constant speed. Throws NotApproaching when past the crossing or slower than
/// the speed floor.
[[nodiscard]] double ttc(double station, double speed);

/// Same as ttc() with std::nullopt in place of NotApproaching.
[[nodiscard]] std::optional<double> try_ttc(double station, double speed);

}  // namespace prospect_drive
