#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "studies.hpp"
#include "stochopt/conditional.hpp"
#include "stochopt/martingale.hpp"
#include "stochopt/simulate.hpp"

using namespace stochopt;

namespace {

const MarketParams kGbm{1.0, 0.08, 0.04, 0.05};

PathEnsemble gbm(const MarketParams& m, const TimeGrid& grid, std::size_t n, std::uint64_t seed) {
  return simulate_gbm_exact(m, sample_brownian(grid, n, seed));
}

std::vector<double> analytic_conditional_mean(const PathEnsemble& x, std::size_t n_idx, std::size_t m_idx,
                                              double mu) {
  const double dt = x.grid()[m_idx] - x.grid()[n_idx];
  std::vector<double> out;
  for (double v : x.column(n_idx)) out.push_back(v * std::exp(mu * dt));
  return out;
}

CondExpContext weighted(std::span<const double> w) {
  CondExpContext ctx;
  ctx.weights = w;
  return ctx;
}

CondExpContext driven_by(const MarketParams& m) {
  CondExpContext ctx;
  ctx.dynamics = &m;
  return ctx;
}

}  // namespace

TEST(CondExp, SameIndexReturnsValuesExactly) {
  const auto x = gbm(kGbm, TimeGrid::uniform(1.0, 4), 100, 1);
  EXPECT_EQ(conditional_expectation(x, 2, 2, {}), x.column(2));
  const std::vector<double> w{1, 2, 3, 4, 5};
  const auto y = conditional_expectation(x, 3, 3, {}, weighted(w));
  for (std::size_t p = 0; p < 100; ++p) EXPECT_EQ(y[p], 4.0 * x(p, 3));
}

TEST(CondExp, DeterministicPathsGiveTheFutureValue) {
  const auto x = gbm(MarketParams{2.0, 0.07, 0.0, 0.0}, TimeGrid::uniform(1.0, 4), 50, 2);
  for (auto method : {CondExpMethod::regression, CondExpMethod::nested_mc}) {
    const MarketParams dyn{2.0, 0.07, 0.0, 0.0};
    const auto e = conditional_expectation(x, 1, 3, CondExpEstimator{method, 3, 32}, driven_by(dyn));
    for (std::size_t p = 0; p < 50; ++p) EXPECT_NEAR(e[p], x(p, 3), 1e-13 * x(p, 3));
  }
}

TEST(CondExp, RegressionMatchesAnalyticGbmMoment) {
  const auto x = gbm(kGbm, TimeGrid::uniform(1.0, 4), 100000, 3);
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{1, 2}, {2, 4}, {1, 4}}) {
    const auto e = conditional_expectation(x, n, m, CondExpEstimator{});
    EXPECT_LE(oracle::mare(e, analytic_conditional_mean(x, n, m, kGbm.mu)), 0.02) << n << "->" << m;
  }
}

TEST(CondExp, NestedMonteCarloMatchesAnalyticGbmMoment) {
  const auto x = gbm(kGbm, TimeGrid::uniform(1.0, 4), 2000, 4);
  const CondExpEstimator est{CondExpMethod::nested_mc, 3, 256};
  const auto e = conditional_expectation(x, 1, 3, est, driven_by(kGbm));
  EXPECT_LE(oracle::mare(e, analytic_conditional_mean(x, 1, 3, kGbm.mu)), 0.02);
  EXPECT_EQ(e, conditional_expectation(x, 1, 3, est, driven_by(kGbm)));
}

TEST(CondExp, TowerConsistency) {
  const auto x = gbm(kGbm, TimeGrid::uniform(1.0, 4), 100000, 5);
  const auto direct = conditional_expectation(x, 1, 4, CondExpEstimator{});
  const auto inner = conditional_expectation(x, 2, 4, CondExpEstimator{});
  const auto two_stage = regress_on_state(x.column(1), {}, inner, 3);
  EXPECT_LE(oracle::mare(two_stage, direct), 2 * 0.02);
  EXPECT_LE(oracle::mare(two_stage, analytic_conditional_mean(x, 1, 4, kGbm.mu)), 2 * 0.02);
}

TEST(CondExp, StrategyColumnsJoinTheState) {
  const auto x = gbm(kGbm, TimeGrid::uniform(1.0, 4), 20000, 6);
  const auto s = make_strategy(policies::constant_mix(0.5, kGbm.r), x);
  CondExpContext ctx;
  ctx.strategy = &s;
  const auto e = conditional_expectation(x, 2, 3, CondExpEstimator{}, ctx);
  EXPECT_LE(oracle::mare(e, analytic_conditional_mean(x, 2, 3, kGbm.mu)), 0.02);
  EXPECT_NE(e, conditional_expectation(x, 2, 3, CondExpEstimator{}));
}

TEST(CondExp, RankDeficientBasisFallsBackWithWarning) {
  std::vector<double> state, target;
  for (int k = 0; k < 100; ++k) {
    state.push_back(k % 2 ? 3.0 : 1.0);
    target.push_back(k % 2 ? 6.0 : 2.0);
  }
  std::vector<std::string> warnings;
  const auto fit = regress_on_state(state, {}, target, 3, [&](std::string_view m) { warnings.emplace_back(m); });
  EXPECT_FALSE(warnings.empty());
  for (std::size_t k = 0; k < fit.size(); ++k) EXPECT_NEAR(fit[k], target[k], 1e-10);
}

TEST(CondExp, RedundantStateColumnIsDroppedSilently) {
  const auto x = gbm(kGbm, TimeGrid::uniform(1.0, 4), 5000, 13);
  const auto state = x.column(2);
  std::vector<double> affine;
  for (double v : state) affine.push_back(2.0 * v + 1.0);
  const std::vector<std::vector<double>> extra{affine};
  std::vector<std::string> warnings;
  const auto with = regress_on_state(state, extra, x.column(3), 3, [&](std::string_view m) { warnings.emplace_back(m); });
  const auto without = regress_on_state(state, {}, x.column(3), 3);
  EXPECT_TRUE(warnings.empty());
  for (std::size_t p = 0; p < with.size(); ++p) EXPECT_NEAR(with[p], without[p], 1e-12);
}

TEST(CondExp, UsageErrors) {
  const auto x = gbm(kGbm, TimeGrid::uniform(1.0, 4), 50, 7);
  EXPECT_THROW(conditional_expectation(x, 3, 2, {}), UsageError);
  EXPECT_THROW(conditional_expectation(x, 1, 5, {}), UsageError);
  EXPECT_THROW(conditional_expectation(x, 1, 2, CondExpEstimator{CondExpMethod::nested_mc, 3, 64}), UsageError);
  EXPECT_THROW(conditional_expectation(x, 1, 2, CondExpEstimator{CondExpMethod::regression, 11, 64}), DomainError);
  EXPECT_THROW(conditional_expectation(x, 1, 2, CondExpEstimator{CondExpMethod::nested_mc, 3, 8}), DomainError);
  const std::vector<double> short_weights{1.0, 2.0};
  EXPECT_THROW(conditional_expectation(x, 1, 2, {}, weighted(short_weights)), UsageError);
}

TEST(Defect, RiskNeutralDriftIsBelowEpsilon) {
  const auto x = gbm(MarketParams{1.0, 0.05, 0.04, 0.05}, TimeGrid::uniform(1.0, 4), 100000, 8);
  const auto r = martingale_defect(x, 0.05, CondExpEstimator{}, 0.005);
  EXPECT_LT(r.max_defect, 0.005);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.theta_history.empty());
  EXPECT_EQ(r.defect_by_index.size(), 4u);
  EXPECT_EQ(r.max_defect, *std::max_element(r.defect_by_index.begin(), r.defect_by_index.end()));
}

TEST(Defect, DeterministicMartingaleHasNoDefect) {
  const auto x = gbm(MarketParams{1.0, 0.05, 0.0, 0.05}, TimeGrid::uniform(1.0, 6), 100, 9);
  const auto r = martingale_defect(x, 0.05, CondExpEstimator{}, 0.005);
  for (double d : r.defect_by_index) EXPECT_LE(d, 1e-14);
}

TEST(Defect, GrowsWithDriftMismatch) {
  const double rate = 0.05;
  std::vector<std::pair<double, double>> by_gap;
  for (double mu : {rate - 0.10, rate - 0.05, rate, rate + 0.05, rate + 0.10}) {
    const auto x = gbm(MarketParams{1.0, mu, 0.04, rate}, TimeGrid::uniform(1.0, 4), 100000, 10);
    by_gap.emplace_back(std::abs(mu - rate), martingale_defect(x, rate, CondExpEstimator{}, 0.005).max_defect);
  }
  for (const auto& [gap_a, def_a] : by_gap) {
    for (const auto& [gap_b, def_b] : by_gap) {
      if (gap_a < gap_b - 1e-9) {
        EXPECT_LT(def_a, def_b) << gap_a << " vs " << gap_b;
      }
    }
  }
}

TEST(Defect, ShrinksWithMorePaths) {
  // Averaged over seeds: a single realization of a folded-normal error is too noisy.
  const MarketParams m{1.0, 0.05, 0.04, 0.05};
  const auto grid = TimeGrid::uniform(1.0, 4);
  double small = 0.0, large = 0.0;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    small += martingale_defect(gbm(m, grid, 100000, seed), 0.05, CondExpEstimator{}, 1.0).max_defect;
    large += martingale_defect(gbm(m, grid, 400000, seed + 1000), 0.05, CondExpEstimator{}, 1.0).max_defect;
  }
  EXPECT_LE(large, 0.6 * small);
}

TEST(Defect, RawModeTestsTheUndiscountedPrice) {
  const auto x = gbm(MarketParams{1.0, 0.0, 0.04, 0.05}, TimeGrid::uniform(1.0, 4), 100000, 11);
  EXPECT_LT(martingale_defect(x, 0.0, CondExpEstimator{}, 0.005).max_defect, 0.005);
  EXPECT_GT(martingale_defect(x, 0.05, CondExpEstimator{}, 0.005).max_defect, 0.005);
}

TEST(Defect, Errors) {
  const auto x = gbm(kGbm, TimeGrid::uniform(1.0, 4), 50, 12);
  EXPECT_THROW(martingale_defect(x, 0.05, {}, 0.0), DomainError);
  const auto b = sample_brownian(TimeGrid::uniform(1.0, 4), 50, 12);
  EXPECT_THROW(martingale_defect(b, 0.05, {}, 0.1), UsageError);
}

namespace {
const TimeGrid kOptGrid = TimeGrid::uniform(2.0, 2);
const MarketParams kShifted{1.0, 0.10, 0.04, 0.05};
}  // namespace

TEST(Optimize, AlreadyMartingaleStaysAtZero) {
  const auto r = adaptive_optimize(MarketParams{1.0, 0.05, 0.04, 0.05}, kOptGrid, 100000, 1, {}, 0.005, 15);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 3u);
  EXPECT_LE(std::abs(r.theta_history.back()), 0.02);
}

TEST(Optimize, RecoversGirsanovShift) {
  const auto r = adaptive_optimize(kShifted, kOptGrid, 100000, 2, {}, 0.005, 15);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 15u);
  EXPECT_NEAR(r.theta_history.back(), 0.25, 0.05);
  EXPECT_EQ(r.theta_history.size(), r.iterations);
  EXPECT_EQ(r.max_defect_history.size(), r.iterations);
  EXPECT_LT(r.max_defect, 0.005);
}

TEST(Optimize, BruteForceSweepAgreesWithAnalyticShift) {
  const double argmin = studies::theta_sweep_argmin(kShifted, kOptGrid, 100000, 3, 0.0, 0.5, 0.01);
  EXPECT_NEAR(argmin, 0.25, 0.05);
}

TEST(Optimize, NestedEstimatorAlsoConverges) {
  // Inner sampling noise enters the absolute defect directly, so the inner
  // count has to push it well below epsilon.
  const CondExpEstimator nested{CondExpMethod::nested_mc, 3, 8192};
  const auto r = adaptive_optimize(kShifted, kOptGrid, 2000, 4, nested, 0.005, 15);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.theta_history.back(), 0.25, 0.05);
}

TEST(Optimize, DeterministicGivenSeed) {
  const auto a = adaptive_optimize(kShifted, kOptGrid, 20000, 5, {}, 0.005, 15);
  const auto b = adaptive_optimize(kShifted, kOptGrid, 20000, 5, {}, 0.005, 15);
  EXPECT_EQ(a.theta_history, b.theta_history);
  EXPECT_EQ(a.defect_by_index, b.defect_by_index);
}

TEST(Optimize, ScaleInvariantInX0) {
  MarketParams scaled = kShifted;
  scaled.x0 = 4.0;
  const auto a = adaptive_optimize(kShifted, kOptGrid, 20000, 6, {}, 0.005, 15);
  EXPECT_EQ(a.theta_history, adaptive_optimize(scaled, kOptGrid, 20000, 6, {}, 0.005, 15).theta_history);
  scaled.x0 = 3.7;
  const auto c = adaptive_optimize(scaled, kOptGrid, 20000, 6, {}, 0.005, 15);
  ASSERT_EQ(a.theta_history.size(), c.theta_history.size());
  for (std::size_t k = 0; k < a.theta_history.size(); ++k)
    EXPECT_NEAR(a.theta_history[k], c.theta_history[k], 1e-9);
}

TEST(Optimize, DampedErrorIsMonotone) {
  for (double damping : {0.3, 0.8, 1.0}) {
    OptimizerOptions opt;
    opt.damping = damping;
    const auto r = adaptive_optimize(kShifted, TimeGrid::uniform(1.0, 4), 100000, 7, {}, 1e-9, 8, opt);
    EXPECT_FALSE(r.converged);
    for (std::size_t k = 1; k < r.theta_history.size(); ++k)
      EXPECT_LE(std::abs(r.theta_history[k] - 0.25), std::abs(r.theta_history[k - 1] - 0.25) + 0.02)
          << "damping " << damping << " iteration " << k;
  }
}

TEST(Optimize, ExhaustionIsReportedNotThrown) {
  const auto r = adaptive_optimize(kShifted, kOptGrid, 10000, 8, {}, 0.005, 1);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1u);
}

TEST(Optimize, DegenerateDiffusion) {
  EXPECT_THROW(adaptive_optimize(MarketParams{1.0, 0.10, 0.0, 0.05}, kOptGrid, 1000, 9, {}, 0.005, 15),
               DegenerateDiffusionError);
  const auto r = adaptive_optimize(MarketParams{1.0, 0.05, 0.0, 0.05}, kOptGrid, 1000, 9, {}, 0.005, 15);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.theta_history, std::vector<double>{0.0});
}

TEST(Optimize, RawModeTargetsZeroDrift) {
  OptimizerOptions opt;
  opt.discount = false;
  const auto r = adaptive_optimize(kShifted, kOptGrid, 100000, 10, {}, 0.005, 15, opt);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.theta_history.back(), 0.10 / 0.2, 0.05);
  EXPECT_THROW(adaptive_optimize(MarketParams{1.0, 0.05, 0.0, 0.05}, kOptGrid, 100, 1, {}, 0.005, 3, opt),
               DegenerateDiffusionError);
}

TEST(Optimize, ConditioningOnHoldingsKeepsTheFixedPoint) {
  OptimizerOptions opt;
  opt.conditioning_policy = policies::threshold(1.0);
  const auto r = adaptive_optimize(kShifted, kOptGrid, 50000, 11, {}, 0.005, 15, opt);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.theta_history.back(), 0.25, 0.05);
}

TEST(Optimize, ArgumentValidation) {
  EXPECT_THROW(adaptive_optimize(kShifted, kOptGrid, 100, 1, {}, 0.0, 5), DomainError);
  EXPECT_THROW(adaptive_optimize(kShifted, kOptGrid, 100, 1, {}, 0.01, 0), DomainError);
  OptimizerOptions opt;
  opt.damping = 1.5;
  EXPECT_THROW(adaptive_optimize(kShifted, kOptGrid, 100, 1, {}, 0.01, 5, opt), DomainError);
}
