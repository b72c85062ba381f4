#include "oracles.hpp"

#include "prospect_drive/errors.hpp"
#include "prospect_drive/estimation.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace prospect_drive;
using namespace prospect_drive::estimation;

namespace
{

std::vector<Demonstration> random_demos(std::mt19937_64 & rng, std::size_t count, std::size_t n)
{
  std::vector<Demonstration> demos;
  for (std::size_t i = 0; i < count; ++i) {
    demos.push_back({oracle::random_trajectory(rng, n, 0.1, -30.0, -5.0), oracle::random_trajectory(rng, n, 0.1)});
  }
  return demos;
}

double loglik_oracle(
  const UtilityWeights & theta, const std::vector<Demonstration> & demos,
  const std::vector<std::vector<Trajectory>> & cands, const UtilityConfig & cfg)
{
  double total = 0.0;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    double z = 0.0;
    for (const auto & c : cands[i]) {
      z += std::exp(oracle::utility(c, &demos[i].interacting, theta, cfg));
    }
    total += oracle::utility(demos[i].target, &demos[i].interacting, theta, cfg) - std::log(z);
  }
  return total;
}

CptObservation random_observation(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> u(0.0, 12.0), p(0.0, 1.0);
  return {{u(rng), u(rng), u(rng)}, p(rng), p(rng) < 0.5 ? Decision::Pass : Decision::Yield};
}

}  // namespace

TEST_SUITE("estimation")
{
  TEST_CASE("singleton and symmetric candidate sets")
  {
    const UtilityConfig cfg;
    std::mt19937_64 rng(1);
    const auto demos = random_demos(rng, 3, 12);
    std::vector<std::vector<Trajectory>> single, doubled;
    for (const auto & d : demos) {
      single.push_back({d.target});
      doubled.push_back({d.target, d.target});
    }
    for (const UtilityWeights theta : {UtilityWeights{0, 0, 0, 0}, UtilityWeights{1.0, -2.0, 0.5, 3.0}}) {
      const auto one = irl_loglik_and_grad(theta, demos, single, cfg);
      CHECK(one.value == doctest::Approx(0.0));
      const auto two = irl_loglik_and_grad(theta, demos, doubled, cfg);
      CHECK(two.value == doctest::Approx(3.0 * std::log(0.5)).epsilon(1e-12));
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        CHECK(std::abs(one.gradient[f]) < 1e-12);
        CHECK(std::abs(two.gradient[f]) < 1e-12);
      }
    }
    std::vector<std::vector<Trajectory>> empty(3);
    try {
      (void)irl_loglik_and_grad({}, demos, empty, cfg);
      FAIL("expected EmptyCandidates");
    } catch (const Error & e) {
      CHECK(e.code() == ErrorCode::EmptyCandidates);
    }
  }

  TEST_CASE("log-likelihood matches the direct sum and its gradient matches finite differences")
  {
    const UtilityConfig cfg;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> th(-1.0, 1.0);
    IrlConfig icfg;
    icfg.candidate_count = 8;
    for (int trial = 0; trial < 100; ++trial) {
      const auto demos = random_demos(rng, 1 + trial % 3, 10);
      std::vector<std::vector<Trajectory>> cands;
      for (std::size_t i = 0; i < demos.size(); ++i) {
        cands.push_back(generate_candidates(demos[i].target, icfg, static_cast<std::uint64_t>(trial * 10 + i)));
      }
      const UtilityWeights theta{th(rng), th(rng), th(rng), th(rng)};
      const auto ll = irl_loglik_and_grad(theta, demos, cands, cfg);
      CHECK(ll.value == doctest::Approx(loglik_oracle(theta, demos, cands, cfg)).epsilon(1e-10));
      const auto fd = oracle::central_difference4(
        [&](const std::vector<double> & t) {
          return irl_loglik_and_grad({t[0], t[1], t[2], t[3]}, demos, cands, cfg).value;
        },
        {theta.begin(), theta.end()}, 1e-5);
      CHECK(oracle::relative_error({ll.gradient.begin(), ll.gradient.end()}, fd) < 1e-5);
    }
  }

  TEST_CASE("candidate generation")
  {
    std::mt19937_64 rng(3);
    const auto demo = oracle::random_trajectory(rng, 20, 0.1);
    IrlConfig cfg;
    const auto a = generate_candidates(demo, cfg, 4);
    const auto b = generate_candidates(demo, cfg, 4);
    const auto c = generate_candidates(demo, cfg, 5);
    REQUIRE(a.size() == cfg.candidate_count);
    CHECK(a[0].stations == demo.stations);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].stations == b[i].stations);
      CHECK(a[i].stations[0] == demo.stations[0]);
      for (std::size_t k = 1; k < a[i].size(); ++k) {
        CHECK(a[i].stations[k] >= a[i].stations[k - 1]);
      }
    }
    CHECK(a[1].stations != c[1].stations);
    cfg.candidate_count = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }

  TEST_CASE("IRL on a separable pair drives the softmax to the demonstration")
  {
    const UtilityConfig cfg;
    std::mt19937_64 rng(4);
    const auto demos = random_demos(rng, 1, 15);
    auto other = demos[0].target;
    for (std::size_t k = 1; k < other.size(); ++k) {
      other.stations[k] = other.stations[k - 1] + 0.6 * (demos[0].target.stations[k] - demos[0].target.stations[k - 1]);
    }
    const std::vector<std::vector<Trajectory>> cands{{demos[0].target, other}};
    const auto fit = irl_fit_with_candidates(demos, cands, IrlConfig{}, cfg);
    REQUIRE(fit.theta.has_value());
    CHECK(fit.converged);
    const double ud = utility(demos[0].target, demos[0].interacting, *fit.theta, cfg);
    const double uo = utility(other, demos[0].interacting, *fit.theta, cfg);
    CHECK(1.0 / (1.0 + std::exp(uo - ud)) > 0.99);
    for (std::size_t i = 1; i < fit.trace.size(); ++i) {
      CHECK(fit.trace[i] <= fit.trace[i - 1] + 1e-12);
    }
  }

  TEST_CASE("IRL needs demonstrations")
  {
    try {
      (void)irl_fit({}, IrlConfig{}, UtilityConfig{});
      FAIL("expected EmptyDataset");
    } catch (const Error & e) {
      CHECK(e.code() == ErrorCode::EmptyDataset);
    }
  }

  TEST_CASE("IRL moment matching on generated candidates")
  {
    const UtilityConfig cfg;
    std::mt19937_64 rng(5);
    const auto demos = random_demos(rng, 6, 10);
    IrlConfig icfg;
    icfg.candidate_count = 16;
    const auto fit = irl_fit(demos, icfg, cfg);
    const auto again = irl_fit(demos, icfg, cfg);
    CHECK(*fit.theta == *again.theta);
    if (fit.converged) {
      std::vector<std::vector<Trajectory>> cands;
      for (std::size_t i = 0; i < demos.size(); ++i) {
        cands.push_back(generate_candidates(demos[i].target, icfg, i));
      }
      const auto ll = irl_loglik_and_grad(*fit.theta, demos, cands, cfg);
      for (double g : ll.gradient) {
        CHECK(std::abs(g) < 1e-3);
      }
    }
  }

  TEST_CASE("cpt loss")
  {
    std::vector<CptObservation> flat(5, CptObservation{{3.0, 3.0, 3.0}, 0.3, Decision::Pass});
    flat[2].label = Decision::Yield;
    CHECK(cpt_loss(0.6, 0.4, flat, cpt::WeightingMode::PaperExact) == doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(cpt_loss(0.6, 0.4, {}, cpt::WeightingMode::PaperExact) == 0.0);

    std::mt19937_64 rng(6);
    std::vector<CptObservation> batch;
    for (int i = 0; i < 50; ++i) {
      batch.push_back(random_observation(rng));
    }
    for (auto mode : {cpt::WeightingMode::PaperExact, cpt::WeightingMode::RankOrdered}) {
      double expected = 0.0;
      for (const auto & o : batch) {
        const auto v = cpt::driving_values(o.utilities, o.p_yield, cpt::CptParams::driving(0.8, 0.6), mode);
        const double pp = 1.0 / (1.0 + std::exp(v.yield - v.pass));
        expected -= std::log(o.label == Decision::Pass ? pp : 1.0 - pp);
      }
      CHECK(cpt_loss(0.8, 0.6, batch, mode) == doctest::Approx(expected).epsilon(1e-12));
    }
    double eut = 0.0;
    for (const auto & o : batch) {
      const double vp = o.utilities.pass_yield * (1.0 - o.p_yield) + o.utilities.pass_nonyield * o.p_yield;
      const double pp = 1.0 / (1.0 + std::exp(o.utilities.yield - vp));
      eut -= std::log(o.label == Decision::Pass ? pp : 1.0 - pp);
    }
    CHECK(cpt_loss(1.0, 1.0, batch, cpt::WeightingMode::PaperExact) == doctest::Approx(eut).epsilon(1e-12));

    const std::vector<CptObservation> extreme{{{1000.0, 1000.0, 0.0}, 0.5, Decision::Yield}};
    const auto detail = cpt_loss_detail(1.0, 1.0, extreme, cpt::WeightingMode::PaperExact);
    CHECK(detail.clamped == 1);
    CHECK(detail.loss == doctest::Approx(-std::log(1e-12)));
  }

  TEST_CASE("cpt fit on a flat objective")
  {
    const std::vector<CptObservation> flat(4, CptObservation{{2.0, 2.0, 2.0}, 0.5, Decision::Pass});
    const auto fit = cpt_fit(flat, cpt::WeightingMode::PaperExact);
    CHECK(*fit.alpha == 1.0);
    CHECK(*fit.gamma == 1.0);
    CHECK_FALSE(fit.converged);
    CHECK_FALSE(fit.warnings.empty());
    CHECK_THROWS_AS(cpt_fit({}, cpt::WeightingMode::PaperExact), Error);
  }

  TEST_CASE("cpt fit beats every grid point and is deterministic")
  {
    std::mt19937_64 rng(7);
    const auto truth = cpt::CptParams::driving(0.7, 0.5);
    std::vector<CptObservation> obs;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 400; ++i) {
      auto o = random_observation(rng);
      const auto v = cpt::driving_values(o.utilities, o.p_yield, truth);
      o.label = unit(rng) < cpt::decision_probabilities(v.pass, v.yield).pass ? Decision::Pass : Decision::Yield;
      obs.push_back(o);
    }
    const auto fit = cpt_fit(obs, cpt::WeightingMode::PaperExact);
    REQUIRE(fit.alpha.has_value());
    CHECK(*fit.alpha > 0.0);
    CHECK(*fit.alpha <= 1.0);
    CHECK(*fit.gamma <= 1.0);
    CHECK(fit.loss == doctest::Approx(cpt_loss(*fit.alpha, *fit.gamma, obs, cpt::WeightingMode::PaperExact)));
    for (int i = 1; i <= 20; ++i) {
      for (int j = 1; j <= 20; ++j) {
        CHECK(fit.loss <= cpt_loss(i / 20.0, j / 20.0, obs, cpt::WeightingMode::PaperExact) + 1e-12);
      }
    }
    for (std::size_t i = 1; i < fit.trace.size(); ++i) {
      CHECK(fit.trace[i] <= fit.trace[i - 1]);
    }
    const auto again = cpt_fit(obs, cpt::WeightingMode::PaperExact);
    CHECK(*again.alpha == *fit.alpha);
    CHECK(*again.gamma == *fit.gamma);

    std::vector<CptObservation> one_sided = obs;
    for (auto & o : one_sided) {
      o.label = Decision::Pass;
    }
    const auto degenerate = cpt_fit(one_sided, cpt::WeightingMode::PaperExact);
    CHECK_FALSE(degenerate.warnings.empty());
  }
}
