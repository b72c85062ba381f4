#include "oracles.hpp"

#include "prospect_drive/errors.hpp"
#include "prospect_drive/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace prospect_drive;
using namespace prospect_drive::geometry;

namespace
{

ReferencePath quarter_circle(double radius, std::size_t segments)
{
  std::vector<Point2> v;
  for (std::size_t i = 0; i <= segments; ++i) {
    const double t = 0.5 * std::numbers::pi * static_cast<double>(segments - i) / static_cast<double>(segments);
    v.push_back({radius * std::cos(t), radius * std::sin(t)});
  }
  return ReferencePath(v);
}

ReferencePath random_path(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> coord(-20.0, 20.0);
  std::uniform_int_distribution<int> count(2, 8);
  std::vector<Point2> v;
  const int n = count(rng);
  while (static_cast<int>(v.size()) < n) {
    Point2 p{coord(rng), coord(rng)};
    if (v.empty() || std::hypot(p.x - v.back().x, p.y - v.back().y) > 1e-3) {
      v.push_back(p);
    }
  }
  return ReferencePath(v);
}

}  // namespace

TEST_SUITE("geometry")
{
  TEST_CASE("reference path validation and arc length")
  {
    CHECK_THROWS_AS(ReferencePath({{0, 0}}), Error);
    CHECK_THROWS_AS(ReferencePath({{0, 0}, {0, 0}}), Error);
    CHECK_THROWS_AS(ReferencePath({{0, 0}, {NAN, 1}}), Error);
    const ReferencePath path({{0, 0}, {3, 4}, {3, 10}});
    REQUIRE(path.cumulative_arclength().size() == 3);
    CHECK(path.cumulative_arclength()[0] == 0.0);
    CHECK(path.cumulative_arclength()[1] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(path.length() == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(path.point_at(8.0).y == doctest::Approx(7.0));
    CHECK(path.point_at(-1.0).x == 0.0);
  }

  TEST_CASE("projection onto a straight path")
  {
    const ReferencePath path({{0, 0}, {10, 0}});
    const auto inside = project_to_path(path, {3, 1});
    CHECK(inside.arclength == doctest::Approx(3.0));
    CHECK(inside.lateral == doctest::Approx(1.0));
    const auto beyond = project_to_path(path, {12, 0});
    CHECK(beyond.arclength == doctest::Approx(10.0));
    CHECK(beyond.lateral == doctest::Approx(0.0));
    CHECK(project_to_path(path, {4, -2}).lateral == doctest::Approx(-2.0));
  }

  TEST_CASE("projection onto a quarter circle matches dense sampling")
  {
    const auto path = quarter_circle(10.0, 64);
    const Point2 p{7.07, 7.07};
    const auto proj = project_to_path(path, p);
    double dense_s = 0.0;
    oracle::dense_projection_distance(path, p, static_cast<std::size_t>(path.length() / 1e-4), &dense_s);
    CHECK(proj.arclength == doctest::Approx(dense_s).epsilon(1e-5));
    CHECK(proj.arclength == doctest::Approx(10.0 * std::numbers::pi / 4.0).epsilon(1e-3));
    CHECK(std::abs(proj.lateral) < 0.01);
  }

  TEST_CASE("projection is optimal against dense samples")
  {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(-30.0, 30.0);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto path = random_path(rng);
      const Point2 p{coord(rng), coord(rng)};
      const auto proj = project_to_path(path, p);
      REQUIRE(std::isfinite(proj.arclength));
      REQUIRE(std::isfinite(proj.lateral));
      const auto foot = path.point_at(proj.arclength);
      const double d = std::hypot(foot.x - p.x, foot.y - p.y);
      CHECK(d <= oracle::dense_projection_distance(path, p, 10000) + 1e-6);
    }
  }

  TEST_CASE("perpendicular crossing")
  {
    const ReferencePath a({{0, -10}, {0, 10}});
    const ReferencePath b({{-10, 0}, {10, 0}});
    const auto c = find_crossing(a, b);
    CHECK(c.location.x == doctest::Approx(0.0));
    CHECK(c.location.y == doctest::Approx(0.0));
    CHECK(c.station_on_a == doctest::Approx(10.0));
    CHECK(c.station_on_b == doctest::Approx(10.0));
  }

  TEST_CASE("parallel paths do not cross")
  {
    const ReferencePath a({{0, 0}, {10, 0}});
    const ReferencePath b({{0, 1}, {10, 1}});
    try {
      (void)find_crossing(a, b);
      FAIL("expected NoCrossing");
    } catch (const Error & e) {
      CHECK(e.code() == ErrorCode::NoCrossing);
    }
  }

  TEST_CASE("zig-zag crossings pick the smallest station on A")
  {
    const ReferencePath a({{0, -5}, {5, 5}, {10, -5}, {15, 5}});
    const ReferencePath b({{-5, 0}, {20, 0}});
    const auto hits = oracle::all_intersections(a, b);
    REQUIRE(hits.size() == 3);
    double best = hits[0].station_a;
    for (const auto & h : hits) {
      best = std::min(best, h.station_a);
    }
    const auto c = find_crossing(a, b);
    CHECK(c.station_on_a == doctest::Approx(best));
    CHECK(c.location.x == doctest::Approx(2.5));
  }

  TEST_CASE("crossing location reprojects to its stations")
  {
    std::mt19937_64 rng(5);
    int checked = 0;
    for (int trial = 0; trial < 2000 && checked < 200; ++trial) {
      const auto a = random_path(rng);
      const auto b = random_path(rng);
      if (oracle::all_intersections(a, b).empty()) {
        continue;
      }
      const auto c = find_crossing(a, b);
      const auto pa = a.point_at(c.station_on_a);
      const auto pb = b.point_at(c.station_on_b);
      CHECK(std::hypot(pa.x - c.location.x, pa.y - c.location.y) < 1e-6);
      CHECK(std::hypot(pb.x - c.location.x, pb.y - c.location.y) < 1e-6);
      double smallest = std::numeric_limits<double>::infinity();
      for (const auto & h : oracle::all_intersections(a, b)) {
        smallest = std::min(smallest, h.station_a);
      }
      CHECK(c.station_on_a <= smallest + 1e-9);
      ++checked;
    }
    CHECK(checked > 50);
  }

  TEST_CASE("shared Frenet stations")
  {
    const ReferencePath path({{0, 0}, {20, 0}});
    const std::vector<TimedPoint> pts{{0.0, {4, 0}}, {0.1, {10, 0.5}}, {0.2, {13, -1}}};
    const auto poses = to_shared_frenet(path, 10.0, pts);
    REQUIRE(poses.size() == 3);
    CHECK(poses[0].pose.station == doctest::Approx(-6.0));
    CHECK(poses[1].pose.station == doctest::Approx(0.0));
    CHECK(poses[2].pose.station == doctest::Approx(3.0));
    CHECK(poses[2].pose.lateral == doctest::Approx(-1.0));
    CHECK(poses[1].t == 0.1);
    CHECK_THROWS_AS(to_shared_frenet(path, 25.0, pts), Error);
  }

  TEST_CASE("forward motion on a curved path gives increasing stations")
  {
    const auto path = quarter_circle(20.0, 40);
    std::vector<TimedPoint> pts;
    for (int k = 0; k <= 30; ++k) {
      const double t = 0.5 * std::numbers::pi * (1.0 - k / 30.0);
      pts.push_back({0.1 * k, {20.3 * std::cos(t), 20.3 * std::sin(t)}});
    }
    const double crossing = 0.5 * path.length();
    const auto poses = to_shared_frenet(path, crossing, pts);
    for (std::size_t i = 1; i < poses.size(); ++i) {
      CHECK(poses[i].pose.station > poses[i - 1].pose.station);
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double dense = 0.0;
      oracle::dense_projection_distance(path, pts[i].point, 200000, &dense);
      CHECK(poses[i].pose.station == doctest::Approx(dense - crossing).epsilon(1e-3));
    }
    CHECK(poses.front().pose.station < 0.0);
    CHECK(poses.back().pose.station > 0.0);
  }
}
