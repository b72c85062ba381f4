#pragma once

#include <span>
#include <utility>
#include <vector>

namespace prospect_drive::geometry
{

struct Point2
{
  double x{0.0};
  double y{0.0};
};

/// Polyline reference path with cached cumulative arc length.
class ReferencePath
{
public:
  /// Throws InvalidPath for fewer than two vertices, non-finite coordinates or
  /// repeated consecutive vertices.
  explicit ReferencePath(std::vector<Point2> vertices);

  [[nodiscard]] const std::vector<Point2> & vertices() const noexcept { return vertices_; }
  [[nodiscard]] const std::vector<double> & cumulative_arclength() const noexcept
  {
    return arclength_;
  }
  [[nodiscard]] double length() const noexcept { return arclength_.back(); }
  [[nodiscard]] std::size_t segment_count() const noexcept { return vertices_.size() - 1; }

  /// Point at arc length s, clamped to [0, length()].
  [[nodiscard]] Point2 point_at(double s) const;

private:
  std::vector<Point2> vertices_;
  std::vector<double> arclength_;
};

struct Projection
{
  double arclength{0.0};
  double lateral{0.0};  // left of travel direction is positive
};

struct FrenetPose
{
  double station{0.0};  // 0 at the shared crossing point
  double lateral{0.0};
};

struct CrossingPoint
{
  double station_on_a{0.0};
  double station_on_b{0.0};
  Point2 location;
};

struct TimedPoint
{
  double t{0.0};
  Point2 point;
};

struct TimedPose
{
  double t{0.0};
  FrenetPose pose;
};

/// Closest point on the polyline. Points beyond an endpoint clamp to that
/// endpoint, with lateral measured from the end segment's supporting line.
[[nodiscard]] Projection project_to_path(const ReferencePath & path, const Point2 & point);

/// First intersection by station on A (then station on B). Throws NoCrossing.
[[nodiscard]] CrossingPoint find_crossing(const ReferencePath & path_a, const ReferencePath & path_b);

/// Re-express points in the frame whose zero is the crossing station.
[[nodiscard]] std::vector<TimedPose> to_shared_frenet(
  const ReferencePath & path, double crossing_station, std::span<const TimedPoint> points);

}  // namespace prospect_drive::geometry
