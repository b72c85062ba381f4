#include "prospect_drive/geometry.hpp"

#include "prospect_drive/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace prospect_drive::geometry
{

namespace
{

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

struct SegmentHit
{
  double t_a;  // fraction along segment of A
  double t_b;
};

// Earliest (smallest t_a, then t_b) common point of two closed segments.
std::optional<SegmentHit> intersect_segments(
  const Point2 & a0, const Point2 & a1, const Point2 & b0, const Point2 & b1)
{
  const double rx = a1.x - a0.x;
  const double ry = a1.y - a0.y;
  const double qx = b1.x - b0.x;
  const double qy = b1.y - b0.y;
  const double wx = b0.x - a0.x;
  const double wy = b0.y - a0.y;
  const double denom = cross(rx, ry, qx, qy);
  const double scale = std::hypot(rx, ry) * std::hypot(qx, qy);
  constexpr double eps = 1e-12;

  if (std::abs(denom) > eps * scale) {
    const double t = cross(wx, wy, qx, qy) / denom;
    const double u = cross(wx, wy, rx, ry) / denom;
    if (t < -eps || t > 1.0 + eps || u < -eps || u > 1.0 + eps) {
      return std::nullopt;
    }
    return SegmentHit{std::clamp(t, 0.0, 1.0), std::clamp(u, 0.0, 1.0)};
  }

  // Parallel: only collinear overlaps count.
  const double len_r = std::hypot(rx, ry);
  if (std::abs(cross(wx, wy, rx, ry)) > eps * len_r * std::max(1.0, std::hypot(wx, wy))) {
    return std::nullopt;
  }
  const double rr = rx * rx + ry * ry;
  const double t0 = (wx * rx + wy * ry) / rr;
  const double t1 = ((b1.x - a0.x) * rx + (b1.y - a0.y) * ry) / rr;
  const double lo = std::max(0.0, std::min(t0, t1));
  const double hi = std::min(1.0, std::max(t0, t1));
  if (lo > hi + eps) {
    return std::nullopt;
  }
  const double t = std::clamp(lo, 0.0, 1.0);
  const double px = a0.x + t * rx - b0.x;
  const double py = a0.y + t * ry - b0.y;
  const double u = std::clamp((px * qx + py * qy) / (qx * qx + qy * qy), 0.0, 1.0);
  return SegmentHit{t, u};
}

}  // namespace

ReferencePath::ReferencePath(std::vector<Point2> vertices) : vertices_(std::move(vertices))
{
  if (vertices_.size() < 2) {
    fail(ErrorCode::InvalidPath, "reference path needs at least two vertices");
  }
  arclength_.reserve(vertices_.size());
  arclength_.push_back(0.0);
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!std::isfinite(vertices_[i].x) || !std::isfinite(vertices_[i].y)) {
      fail(ErrorCode::InvalidPath, "non-finite vertex at index " + std::to_string(i));
    }
    if (i == 0) {
      continue;
    }
    const double len =
      std::hypot(vertices_[i].x - vertices_[i - 1].x, vertices_[i].y - vertices_[i - 1].y);
    if (len <= 0.0) {
      fail(ErrorCode::InvalidPath, "repeated vertex at index " + std::to_string(i));
    }
    arclength_.push_back(arclength_.back() + len);
  }
}

Point2 ReferencePath::point_at(double s) const
{
  if (s <= 0.0) {
    return vertices_.front();
  }
  if (s >= length()) {
    return vertices_.back();
  }
  const auto it = std::upper_bound(arclength_.begin(), arclength_.end(), s);
  const auto i = static_cast<std::size_t>(std::distance(arclength_.begin(), it)) - 1;
  const double seg = arclength_[i + 1] - arclength_[i];
  const double t = (s - arclength_[i]) / seg;
  const auto & a = vertices_[i];
  const auto & b = vertices_[i + 1];
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

Projection project_to_path(const ReferencePath & path, const Point2 & point)
{
  const auto & v = path.vertices();
  const auto & s = path.cumulative_arclength();

  double best_dist2 = std::numeric_limits<double>::infinity();
  Projection best;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double dx = v[i + 1].x - v[i].x;
    const double dy = v[i + 1].y - v[i].y;
    const double seg = s[i + 1] - s[i];
    const double px = point.x - v[i].x;
    const double py = point.y - v[i].y;
    const double t = std::clamp((px * dx + py * dy) / (seg * seg), 0.0, 1.0);
    const double fx = v[i].x + t * dx - point.x;
    const double fy = v[i].y + t * dy - point.y;
    const double dist2 = fx * fx + fy * fy;
    if (dist2 < best_dist2) {
      best_dist2 = dist2;
      best.arclength = s[i] + t * seg;
      best.lateral = cross(dx, dy, px, py) / seg;
    }
  }
  return best;
}

CrossingPoint find_crossing(const ReferencePath & path_a, const ReferencePath & path_b)
{
  const auto & va = path_a.vertices();
  const auto & vb = path_b.vertices();
  const auto & sa = path_a.cumulative_arclength();
  const auto & sb = path_b.cumulative_arclength();

  std::optional<CrossingPoint> best;
  for (std::size_t i = 0; i + 1 < va.size(); ++i) {
    for (std::size_t j = 0; j + 1 < vb.size(); ++j) {
      const auto hit = intersect_segments(va[i], va[i + 1], vb[j], vb[j + 1]);
      if (!hit) {
        continue;
      }
      CrossingPoint c;
      c.station_on_a = sa[i] + hit->t_a * (sa[i + 1] - sa[i]);
      c.station_on_b = sb[j] + hit->t_b * (sb[j + 1] - sb[j]);
      c.location = {
        va[i].x + hit->t_a * (va[i + 1].x - va[i].x),
        va[i].y + hit->t_a * (va[i + 1].y - va[i].y)};
      if (
        !best || c.station_on_a < best->station_on_a ||
        (c.station_on_a == best->station_on_a && c.station_on_b < best->station_on_b)) {
        best = c;
      }
    }
  }
  if (!best) {
    fail(ErrorCode::NoCrossing, "reference paths do not intersect");
  }
  return *best;
}

std::vector<TimedPose> to_shared_frenet(
  const ReferencePath & path, double crossing_station, std::span<const TimedPoint> points)
{
  if (!(crossing_station >= 0.0 && crossing_station <= path.length())) {
    fail(ErrorCode::InvalidArgument, "crossing station outside the path");
  }
  std::vector<TimedPose> out;
  out.reserve(points.size());
  for (const auto & p : points) {
    const auto proj = project_to_path(path, p.point);
    out.push_back({p.t, {proj.arclength - crossing_station, proj.lateral}});
  }
  return out;
}

}  // namespace prospect_drive::geometry
