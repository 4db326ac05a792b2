#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "stochopt/conditional.hpp"
#include "stochopt/ensemble.hpp"
#include "stochopt/errors.hpp"
#include "stochopt/market.hpp"
#include "stochopt/parallel.hpp"
#include "stochopt/simulate.hpp"

namespace stochopt {

struct MartingaleReport {
  std::vector<double> defect_by_index;  // one entry per adjacent pair (i, i+1)
  double max_defect = 0.0;
  double epsilon = 0.0;
  bool converged = false;
  std::vector<double> theta_history;       // drift shift evaluated at each iteration
  std::vector<double> max_defect_history;  // max_defect at each iteration
  std::size_t iterations = 0;
};

struct DefectOptions {
  // GBM coefficients, required only for nested_mc.
  const MarketParams* dynamics = nullptr;
  // Adds (a_n, b_n) to the regression state.
  const TradingStrategy* strategy = nullptr;
  WarningSink warn;
};

namespace detail {

struct DefectMeasurement {
  std::vector<double> defect;         // mean |E[Y_{i+1}|F_i] - Y_i| / x0
  std::vector<double> relative_gain;  // sum(E[Y_{i+1}|F_i] - Y_i) / sum(Y_i)
};

inline DefectMeasurement measure_defect(const PathEnsemble& prices, double discount_rate,
                                        const CondExpEstimator& est, const DefectOptions& opt) {
  if (prices.kind() != EnsembleKind::price) throw UsageError("martingale_defect expects a price ensemble");
  const std::size_t n_times = prices.n_times();
  const std::size_t n_paths = prices.n_paths();
  std::vector<double> weights(n_times);
  for (std::size_t i = 0; i < n_times; ++i) weights[i] = std::exp(-discount_rate * prices.grid()[i]);
  const double x0 = pairwise_mean(prices.column(0));

  const CondExpContext ctx{weights, opt.dynamics, opt.strategy, opt.warn};
  DefectMeasurement out;
  out.defect.resize(n_times - 1);
  out.relative_gain.resize(n_times - 1);
  std::vector<double> abs_gap(n_paths), gap(n_paths), level(n_paths);
  for (std::size_t i = 0; i + 1 < n_times; ++i) {
    const std::vector<double> expected = conditional_expectation(prices, i, i + 1, est, ctx);
    for (std::size_t p = 0; p < n_paths; ++p) {
      level[p] = weights[i] * prices(p, i);
      gap[p] = expected[p] - level[p];
      abs_gap[p] = std::abs(gap[p]);
    }
    out.defect[i] = pairwise_mean(abs_gap) / x0;
    out.relative_gain[i] = pairwise_sum(gap) / pairwise_sum(level);
  }
  return out;
}

}  // namespace detail

// Empirical martingale defect of Y_i = e^{-r t_i} X_i over adjacent pairs.
// Pass discount_rate = 0 to test X itself.
inline MartingaleReport martingale_defect(const PathEnsemble& prices, double discount_rate,
                                          const CondExpEstimator& est, double epsilon,
                                          const DefectOptions& options = {}) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0");
  if (prices.n_times() < 2) throw UsageError("martingale_defect needs at least two time points");
  auto m = detail::measure_defect(prices, discount_rate, est, options);
  MartingaleReport report;
  report.defect_by_index = std::move(m.defect);
  report.max_defect = *std::max_element(report.defect_by_index.begin(), report.defect_by_index.end());
  report.epsilon = epsilon;
  report.converged = report.max_defect < epsilon;
  return report;
}

struct OptimizerOptions {
  double damping = 0.8;
  // false tests X itself instead of e^{-rt} X.
  bool discount = true;
  // When set, each iteration conditions on the holdings this policy takes on
  // that iteration's prices.
  Policy conditioning_policy;
  WarningSink warn;
};

// Repeat until the martingale defect drops below epsilon, adjusting the
// Girsanov drift shift theta (simulated drift mu - sqrt(alpha) theta).
// The Brownian ensemble is drawn once and reused by every iteration, so the
// iteration is deterministic. Exhausting max_iter is reported, not thrown.
inline MartingaleReport adaptive_optimize(const MarketParams& params, const TimeGrid& grid,
                                          std::size_t n_paths, std::uint64_t seed,
                                          const CondExpEstimator& est, double epsilon,
                                          std::size_t max_iter, const OptimizerOptions& options = {}) {
  params.validate();
  est.validate();
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0");
  if (max_iter == 0) throw DomainError("max_iter must be >= 1");
  if (!(options.damping > 0.0 && options.damping <= 1.0))
    throw DomainError("damping must lie in (0, 1]");

  const double target = options.discount ? params.r : 0.0;
  if (params.alpha == 0.0 && params.mu != target) throw DegenerateDiffusionError();

  const PathEnsemble brownian = sample_brownian(grid, n_paths, seed);
  const double vol = params.diffusion();
  const double horizon = grid.horizon();

  MartingaleReport report;
  report.epsilon = epsilon;
  double theta = 0.0;
  for (std::size_t k = 0; k < max_iter; ++k) {
    MarketParams shifted = params;
    shifted.mu = params.mu - vol * theta;
    const PathEnsemble prices = simulate_gbm_exact(shifted, brownian);
    std::optional<TradingStrategy> holdings;
    if (options.conditioning_policy) holdings.emplace(make_strategy(options.conditioning_policy, prices));
    const DefectOptions defect_opt{&shifted, holdings ? &*holdings : nullptr, options.warn};
    auto m = detail::measure_defect(prices, target, est, defect_opt);

    report.theta_history.push_back(theta);
    report.defect_by_index = std::move(m.defect);
    report.max_defect =
        *std::max_element(report.defect_by_index.begin(), report.defect_by_index.end());
    report.max_defect_history.push_back(report.max_defect);
    report.iterations = k + 1;
    if (report.max_defect < epsilon) {
      report.converged = true;
      break;
    }
    if (vol == 0.0) break;

    // Excess drift implied by the conditional expectations, per unit time.
    double log_growth = 0.0;
    for (double g : m.relative_gain) log_growth += std::log1p(g);
    const double excess_drift = log_growth / horizon;
    theta += options.damping * excess_drift / vol;
  }
  return report;
}

}  // namespace stochopt
