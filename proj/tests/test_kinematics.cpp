#include "oracles.hpp"

#include "prospect_drive/errors.hpp"
#include "prospect_drive/kinematics.hpp"

#include <doctest.h>

#include <random>

using namespace prospect_drive;

TEST_SUITE("kinematics")
{
  TEST_CASE("uniform motion")
  {
    const auto k = kinematics(Trajectory{1.0, {0, 1, 2, 3}});
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(k.speeds[i] == 1.0);
      CHECK(k.accelerations[i] == 0.0);
      CHECK(k.jerks[i] == 0.0);
    }
  }

  TEST_CASE("stationary vehicle")
  {
    const auto k = kinematics(Trajectory{0.1, std::vector<double>(6, -7.5)});
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(k.speeds[i] == 0.0);
      CHECK(k.accelerations[i] == 0.0);
      CHECK(k.jerks[i] == 0.0);
    }
  }

  TEST_CASE("constant acceleration")
  {
    const double dt = 0.1;
    Trajectory t{dt, {}};
    for (int k = 0; k < 20; ++k) {
      t.stations.push_back(0.5 * k * k * dt * dt);
    }
    const auto prof = kinematics(t);
    for (std::size_t k = 2; k < 20; ++k) {
      CHECK(prof.accelerations[k] == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(prof.accelerations[0] == prof.accelerations[2]);
    CHECK(prof.speeds[0] == prof.speeds[1]);
    CHECK(prof.jerks[0] == prof.jerks[3]);
  }

  TEST_CASE("short trajectories")
  {
    const auto two = kinematics(Trajectory{0.5, {0.0, 2.0}});
    CHECK(two.speeds == std::vector<double>{4.0, 4.0});
    CHECK(two.accelerations == std::vector<double>{0.0, 0.0});
    const auto three = kinematics(Trajectory{1.0, {0.0, 1.0, 3.0}});
    CHECK(three.accelerations == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(three.jerks == std::vector<double>{0.0, 0.0, 0.0});
    CHECK_THROWS_AS(kinematics(Trajectory{0.1, {1.0}}), Error);
    CHECK_THROWS_AS(kinematics(Trajectory{0.0, {1.0, 2.0}}), Error);
  }

  TEST_CASE("matches the direct backward-difference oracle and integrates back")
  {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const auto t = oracle::random_trajectory(rng, 5 + trial % 40, 0.1);
      const auto k = kinematics(t);
      const auto o = oracle::backward(t.stations, t.dt);
      for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(k.speeds[i] == doctest::Approx(o.v[i]).epsilon(1e-12));
        CHECK(k.accelerations[i] == doctest::Approx(o.a[i]).epsilon(1e-12));
        CHECK(k.jerks[i] == doctest::Approx(o.j[i]).epsilon(1e-12));
      }
      double s = t.stations[0];
      for (std::size_t i = 1; i < t.size(); ++i) {
        s += k.speeds[i] * t.dt;
        CHECK(std::abs(s - t.stations[i]) < 1e-9);
      }
    }
  }

  TEST_CASE("frame slicing")
  {
    InteractionPair pair{"p", {0.1, std::vector<double>(30, -5.0)}, {0.1, std::vector<double>(30, -9.0)}, Decision::Pass};
    const auto frames = slice_frames(pair, 10, 1);
    CHECK(frames.size() == 21);
    CHECK(frames.front().start == 0);
    CHECK(frames.back().start == 20);
    CHECK(frames[3].label == Decision::Pass);
    CHECK(frames[3].target.size() == 10);
    CHECK(frames[3].pair_id == "p");

    pair.target.stations.resize(10);
    pair.interacting.stations.resize(10);
    CHECK(slice_frames(pair, 10, 1).size() == 1);
    try {
      (void)slice_frames(pair, 11, 1);
      FAIL("expected WindowTooLong");
    } catch (const Error & e) {
      CHECK(e.code() == ErrorCode::WindowTooLong);
    }
    CHECK_THROWS_AS(slice_frames(pair, 5, 0), Error);
    CHECK_THROWS_AS(slice_frames(pair, 1, 1), Error);
  }

  TEST_CASE("frame count formula")
  {
    for (std::size_t len = 2; len < 40; ++len) {
      for (std::size_t window = 2; window <= len; window += 3) {
        for (std::size_t stride = 1; stride < 6; ++stride) {
          InteractionPair pair{"p", {0.1, std::vector<double>(len, 0.0)}, {0.1, std::vector<double>(len, 0.0)}, {}};
          CHECK(slice_frames(pair, window, stride).size() == (len - window) / stride + 1);
        }
      }
    }
  }

  TEST_CASE("paper-scale corpus yields 2680 frames")
  {
    std::size_t total = 0;
    for (int i = 0; i < 67; ++i) {
      InteractionPair pair{std::to_string(i), {0.1, std::vector<double>(49, 0.0)}, {0.1, std::vector<double>(49, 0.0)}, {}};
      total += slice_frames(pair).size();
    }
    CHECK(total == 2680);
  }

  TEST_CASE("pair consistency")
  {
    InteractionPair pair{"p", {0.1, {0, 1, 2}}, {0.1, {0, 1}}, {}};
    CHECK_THROWS_AS(pair.validate(), Error);
    pair.interacting = {0.2, {0, 1, 2}};
    CHECK_THROWS_AS(pair.validate(), Error);
  }

  TEST_CASE("time to collision")
  {
    CHECK(ttc(-20.0, 10.0) == 2.0);
    CHECK_THROWS_AS(ttc(-20.0, 0.0), Error);
    CHECK_THROWS_AS(ttc(1.0, 5.0), Error);
    CHECK_THROWS_AS(ttc(-20.0, 1e-3), Error);
    CHECK_FALSE(try_ttc(0.0, 5.0).has_value());
    CHECK(try_ttc(-3.0, 1.5).value() == 2.0);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> s(-50.0, -0.5), v(0.5, 20.0), c(0.1, 10.0);
    for (int i = 0; i < 500; ++i) {
      const double si = s(rng), vi = v(rng), ci = c(rng);
      CHECK(ttc(ci * si, ci * vi) == doctest::Approx(ttc(si, vi)).epsilon(1e-12));
    }
  }

  TEST_CASE("decision text")
  {
    CHECK(parse_decision("pass") == Decision::Pass);
    CHECK(parse_decision("yield") == Decision::Yield);
    CHECK(to_string(Decision::Yield) == "yield");
    CHECK_THROWS_AS(parse_decision("Pass"), Error);
  }
}
