#include "oracles.hpp"

#include "prospect_drive/errors.hpp"
#include "prospect_drive/features.hpp"
#include "prospect_drive/synthesis.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace prospect_drive;
using namespace prospect_drive::synthesis;

namespace
{

const UtilityWeights kTheta{1.0, 0.5, 0.5, 0.0};

/// Best piecewise-constant acceleration profile: `levels` values per block of
/// `block` samples, exhaustively enumerated.
double grid_best(
  const InitialState & init, const UtilityWeights & theta, const UtilityConfig & cfg,
  const MotionLimits & limits, std::size_t horizon, double dt, std::size_t block, int levels,
  const std::optional<YieldConstraint> & constraint = std::nullopt)
{
  const std::size_t blocks = (horizon - 1 + block - 1) / block;
  std::vector<double> accel_levels;
  for (int i = 0; i < levels; ++i) {
    accel_levels.push_back(limits.a_min + (limits.a_max - limits.a_min) * i / (levels - 1));
  }
  std::vector<int> idx(blocks, 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    Trajectory t{dt, {init.station}};
    double v = init.speed;
    for (std::size_t k = 1; k < horizon; ++k) {
      const double a = accel_levels[static_cast<std::size_t>(idx[(k - 1) / block])];
      v = std::clamp(v + a * dt, 0.0, limits.v_max);
      t.stations.push_back(t.stations.back() + v * dt);
    }
    if (is_feasible(t, init, limits, constraint)) {
      best = std::max(best, utility_solo(t, theta, cfg));
    }
    std::size_t d = 0;
    while (d < blocks && ++idx[d] == levels) {
      idx[d++] = 0;
    }
    if (d == blocks) {
      break;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("synthesis")
{
  TEST_CASE("constant speed rollout")
  {
    const auto still = constant_speed_trajectory({-5.0, 0.0, 0.0}, 5, 0.1);
    for (double s : still.stations) {
      CHECK(s == -5.0);
    }
    const auto moving = constant_speed_trajectory({-30.0, 10.0, 1.0}, 11, 0.1);
    CHECK(moving.stations.back() == doctest::Approx(-20.0).epsilon(1e-12));
    for (double a : kinematics(moving).accelerations) {
      CHECK(std::abs(a) < 1e-9);
    }
    CHECK_THROWS_AS(constant_speed_trajectory({0.0, 1.0, 0.0}, 1, 0.1), Error);
  }

  TEST_CASE("braking distance matches the discrete rollout")
  {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> v(0.0, 20.0), a(-8.0, -0.5);
    for (int i = 0; i < 500; ++i) {
      const double vi = v(rng), ai = a(rng);
      const std::size_t steps = static_cast<std::size_t>(i % 7 == 0 ? 5 : 100000);
      const auto roll = oracle::braking_rollout(0.0, vi, ai, 0.1, steps);
      CHECK(braking_distance(vi, ai, 0.1, steps) == doctest::Approx(roll.back()).epsilon(1e-9));
    }
    CHECK(braking_distance(0.0, -4.0, 0.1) == 0.0);
    CHECK(braking_distance(10.0, -5.0, 0.1) == doctest::Approx(9.5));
  }

  TEST_CASE("limits validation")
  {
    CHECK_THROWS_AS((MotionLimits{1.0, 2.0, 10.0}.validate()), Error);
    CHECK_THROWS_AS((MotionLimits{-1.0, 0.0, 10.0}.validate()), Error);
    CHECK_THROWS_AS((MotionLimits{-1.0, 1.0, 0.0}.validate()), Error);
  }

  TEST_CASE("projection produces feasible trajectories")
  {
    const MotionLimits limits;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> noise(0.0, 0.5);
    for (int trial = 0; trial < 200; ++trial) {
      InitialState init{-30.0, 6.0, 0.0};
      auto raw = constant_speed_trajectory(init, 30, 0.1);
      for (double & s : raw.stations) {
        s += noise(rng);
      }
      const auto p = project_feasible(raw, init, limits);
      CHECK(is_feasible(p, init, limits));
      const YieldConstraint bar{-20.0, 1.0, std::nullopt};
      const auto q = project_feasible(raw, init, limits, bar);
      CHECK(is_feasible(q, init, limits, bar));
      CHECK(q.stations.back() <= -20.0 + 1e-12);
    }
  }

  TEST_CASE("cruising at the traffic speed is already optimal")
  {
    const UtilityConfig cfg;
    const InitialState init{-30.0, cfg.v_traffic, 0.0};
    const auto start = constant_speed_trajectory(init, 30, 0.1);
    const auto best = optimal_pass_trajectory(init, kTheta, cfg, {}, 30, 0.1);
    CHECK(std::abs(utility_solo(best, kTheta, cfg) - utility_solo(start, kTheta, cfg)) < 1e-9);
    for (std::size_t k = 0; k < best.size(); ++k) {
      CHECK(best.stations[k] == doctest::Approx(start.stations[k]).epsilon(1e-12));
    }
  }

  TEST_CASE("zero weights return the initialization")
  {
    const InitialState init{-30.0, 3.0, 0.0};
    const auto best = optimal_pass_trajectory(init, {0, 0, 0, 0}, {}, {}, 20, 0.1);
    const auto start = constant_speed_trajectory(init, 20, 0.1);
    for (std::size_t k = 0; k < best.size(); ++k) {
      CHECK(best.stations[k] == doctest::Approx(start.stations[k]).epsilon(1e-12));
    }
  }

  TEST_CASE("slow start accelerates toward the traffic speed and beats the profile grid")
  {
    const UtilityConfig cfg;
    const MotionLimits limits;
    const InitialState init{-40.0, cfg.v_traffic / 2.0, 0.0};
    const std::size_t horizon = 31;
    const auto best = optimal_pass_trajectory(init, kTheta, cfg, limits, horizon, 0.1);
    CHECK(is_feasible(best, init, limits));
    const auto k = kinematics(best);
    CHECK(k.speeds.back() > init.speed);
    CHECK(std::abs(k.speeds.back() - cfg.v_traffic) < 0.1 * cfg.v_traffic);
    const double grid = grid_best(init, kTheta, cfg, limits, horizon, 0.1, 5, 7);
    CHECK(utility_solo(best, kTheta, cfg) >= grid - 1e-9);
  }

  TEST_CASE("braking composition: closed-form onset")
  {
    const MotionLimits limits{-5.0, 2.5, 15.0};
    const std::size_t n = 80;
    const auto pass = constant_speed_trajectory({-50.0, 10.0, 0.0}, n, 0.1);
    const auto far = constant_speed_trajectory({-200.0, 1.0, 0.0}, n, 0.1);
    const auto composed = compose_pass_nonyield(pass, far, limits, 0.0);
    CHECK(composed.k0 == 40);
    CHECK(composed.trajectory.stations.back() == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(oracle::stop_condition_by_simulation(pass, far, 40, limits.a_min, 0.0));
    CHECK_FALSE(oracle::stop_condition_by_simulation(pass, far, 41, limits.a_min, 0.0));
    for (std::size_t k = 0; k <= 40; ++k) {
      CHECK(composed.trajectory.stations[k] == pass.stations[k]);
    }
  }

  TEST_CASE("stopped target needs no braking")
  {
    const auto pass = constant_speed_trajectory({-10.0, 0.0, 0.0}, 30, 0.1);
    const auto other = constant_speed_trajectory({-20.0, 8.0, 0.0}, 30, 0.1);
    const auto composed = compose_pass_nonyield(pass, other, {}, 1.0);
    CHECK(composed.k0 == 30);
    CHECK(composed.trajectory.stations == pass.stations);
  }

  TEST_CASE("braking composition falls back to immediate braking")
  {
    const MotionLimits limits;
    const auto pass = constant_speed_trajectory({-2.0, 12.0, 0.0}, 30, 0.1);
    const auto other = constant_speed_trajectory({-100.0, 1.0, 0.0}, 30, 0.1);
    const auto composed = compose_pass_nonyield(pass, other, limits, 1.0);
    CHECK(composed.k0 == 0);
    CHECK(composed.trajectory.stations == brake_from(pass, 0, limits).stations);
  }

  TEST_CASE("braking composition: k0 is maximal on random scenarios")
  {
    const UtilityConfig cfg;
    const MotionLimits limits;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> s(-40.0, -5.0), v(1.0, 12.0);
    int interior = 0;
    for (int trial = 0; trial < 60; ++trial) {
      const InitialState target{s(rng), v(rng), 0.0};
      const InitialState inter{s(rng), v(rng), 0.0};
      const auto pass = optimal_pass_trajectory(target, kTheta, cfg, limits, 30, 0.1);
      const auto other = constant_speed_trajectory(inter, 30, 0.1);
      const auto composed = compose_pass_nonyield(pass, other, limits, 1.0);
      if (composed.k0 == pass.size()) {
        CHECK(oracle::stop_condition_by_simulation(pass, other, pass.size(), limits.a_min, 1.0));
        continue;
      }
      if (composed.k0 > 0) {
        CHECK(oracle::stop_condition_by_simulation(pass, other, composed.k0, limits.a_min, 1.0));
        ++interior;
      }
      for (std::size_t later = composed.k0 + 1; later < pass.size(); ++later) {
        CHECK_FALSE(oracle::stop_condition_by_simulation(pass, other, later, limits.a_min, 1.0));
      }
      for (std::size_t k = 1; k < pass.size(); ++k) {
        const double step = composed.trajectory.stations[k] - composed.trajectory.stations[k - 1];
        CHECK(step >= -1e-12);
        CHECK(step <= limits.v_max * 0.1 + 1e-12);
      }
    }
    CHECK(interior > 5);
  }

  TEST_CASE("yield: resting at the bound stays there")
  {
    const UtilityConfig cfg;
    const YieldConstraint bar{-3.0, 1.0, std::nullopt};
    const InitialState init{-3.0, 0.0, 0.0};
    const auto y = optimal_yield_trajectory(init, bar, kTheta, cfg, {}, 30, 0.1);
    for (double s : y.stations) {
      CHECK(s == doctest::Approx(-3.0).epsilon(1e-12));
    }
  }

  TEST_CASE("yield: decelerates to the bound and beats the profile grid")
  {
    const UtilityConfig cfg;
    const MotionLimits limits;
    const YieldConstraint bar{-3.0, 1.0, std::nullopt};
    const InitialState init{-23.0, cfg.v_traffic, 0.0};
    const std::size_t horizon = 31;
    const auto y = optimal_yield_trajectory(init, bar, kTheta, cfg, limits, horizon, 0.1);
    CHECK(is_feasible(y, init, limits, bar));
    CHECK(y.stations.back() <= -3.0 + 1e-12);
    const auto k = kinematics(y);
    CHECK(k.speeds.back() < init.speed);
    const double grid = grid_best(init, kTheta, cfg, limits, horizon, 0.1, 5, 7, bar);
    CHECK(utility_solo(y, kTheta, cfg) >= grid - 1e-9);
  }

  TEST_CASE("yield: optimum beats projected perturbations")
  {
    const UtilityConfig cfg;
    const MotionLimits limits;
    const YieldConstraint bar{-3.0, 1.0, std::nullopt};
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> s0(-35.0, -15.0), v0(2.0, 10.0);
    int checked = 0;
    while (checked < 10) {
      const InitialState init{s0(rng), v0(rng), 0.0};
      if (braking_distance(init.speed, limits.a_min, 0.1) + init.station > bar.stop_station - 1.0) {
        continue;
      }
      ++checked;
      const auto best = optimal_yield_trajectory(init, bar, kTheta, cfg, limits, 30, 0.1);
      REQUIRE(is_feasible(best, init, limits, bar));
      const double u = utility_solo(best, kTheta, cfg);
      for (const double scale : {0.05, 1e-3}) {
        std::normal_distribution<double> noise(0.0, scale);
        for (int i = 0; i < 200; ++i) {
          auto p = best;
          for (std::size_t k = 1; k < p.size(); ++k) {
            p.stations[k] += noise(rng);
          }
          CHECK(utility_solo(project_feasible(p, init, limits, bar), kTheta, cfg) <= u + 1e-9);
        }
      }
    }
  }

  TEST_CASE("yield: released bound and inactive bound")
  {
    const UtilityConfig cfg;
    const MotionLimits limits;
    const InitialState init{-20.0, 6.0, 0.0};
    const YieldConstraint none{-std::numeric_limits<double>::infinity(), 1.0, std::nullopt};
    const YieldConstraint open{std::numeric_limits<double>::infinity(), 1.0, std::nullopt};
    const auto free_pass = optimal_pass_trajectory(init, kTheta, cfg, limits, 30, 0.1);
    CHECK(optimal_yield_trajectory(init, open, kTheta, cfg, limits, 30, 0.1).stations == free_pass.stations);
    CHECK_FALSE(none.active());

    const YieldConstraint until{-12.0, 1.0, std::size_t{10}};
    const auto y = optimal_yield_trajectory(init, until, kTheta, cfg, limits, 30, 0.1);
    CHECK(is_feasible(y, init, limits, until));
    for (std::size_t k = 0; k < 10; ++k) {
      CHECK(y.stations[k] <= -12.0 + 1e-12);
    }
    CHECK(y.stations.back() > -12.0);
  }

  TEST_CASE("yield: infeasible starts")
  {
    const UtilityConfig cfg;
    const YieldConstraint bar{-3.0, 1.0, std::nullopt};
    try {
      (void)optimal_yield_trajectory({-1.0, 0.0, 0.0}, bar, kTheta, cfg, {}, 30, 0.1);
      FAIL("expected InfeasibleStart");
    } catch (const Error & e) {
      CHECK(e.code() == ErrorCode::InfeasibleStart);
    }
    CHECK_THROWS_AS(optimal_yield_trajectory({-5.0, 12.0, 0.0}, bar, kTheta, cfg, {}, 30, 0.1), Error);
  }

  TEST_CASE("optima beat projected random perturbations")
  {
    const UtilityConfig cfg;
    const MotionLimits limits;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> s(-40.0, -20.0), v(2.0, 12.0);
    std::normal_distribution<double> noise(0.0, 0.05);
    for (int trial = 0; trial < 4; ++trial) {
      const InitialState init{s(rng), v(rng), 0.0};
      const auto best = optimal_pass_trajectory(init, kTheta, cfg, limits, 30, 0.1);
      const double u = utility_solo(best, kTheta, cfg);
      for (int i = 0; i < 200; ++i) {
        auto p = best;
        for (std::size_t k = 1; k < p.size(); ++k) {
          p.stations[k] += noise(rng);
        }
        const auto q = project_feasible(p, init, limits);
        CHECK(utility_solo(q, kTheta, cfg) <= u + 1e-9);
      }
    }
  }
}
