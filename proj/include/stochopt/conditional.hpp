#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stochopt/ensemble.hpp"
#include "stochopt/errors.hpp"
#include "stochopt/market.hpp"
#include "stochopt/parallel.hpp"
#include "stochopt/random.hpp"
#include "stochopt/strategy.hpp"

namespace stochopt {

enum class CondExpMethod { regression, nested_mc };

constexpr std::string_view to_string(CondExpMethod m) noexcept {
  return m == CondExpMethod::regression ? "regression" : "nested_mc";
}

struct CondExpEstimator {
  CondExpMethod method = CondExpMethod::regression;
  int basis_degree = 3;
  std::size_t n_inner = 256;

  void validate() const {
    if (basis_degree < 0 || basis_degree > 10)
      throw DomainError("basis_degree must lie in [0, 10]");
    if (n_inner < 16) throw DomainError("n_inner must be >= 16");
  }

  friend bool operator==(const CondExpEstimator&, const CondExpEstimator&) = default;
};

// Everything besides the ensemble that an estimate may depend on.
struct CondExpContext {
  // Y_i = weights[i] * X_i; empty means Y = X.
  std::span<const double> weights;
  // GBM coefficients for nested resimulation (mu and alpha are used).
  const MarketParams* dynamics = nullptr;
  // Adds (a_n, b_n) to the regression state.
  const TradingStrategy* strategy = nullptr;
  WarningSink warn;
};

namespace detail {

struct Standardized {
  std::vector<double> z;
  bool constant = false;
};

inline Standardized standardize(std::span<const double> x) {
  const double mean = pairwise_mean(x);
  std::vector<double> sq(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) sq[k] = (x[k] - mean) * (x[k] - mean);
  const double sd = std::sqrt(pairwise_mean(sq));
  Standardized out;
  if (!(sd > 1e-13 * std::max(1.0, std::abs(mean)))) {
    out.constant = true;
    return out;
  }
  out.z.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out.z[k] = (x[k] - mean) / sd;
  return out;
}

}  // namespace detail

// Least-squares projection of target onto {1, z, ..., z^degree} of the
// standardized primary state plus linear terms in each extra state column.
// Constant columns are dropped; a rank-deficient design falls back to lower
// degrees with a warning.
inline std::vector<double> regress_on_state(std::span<const double> state,
                                            std::span<const std::vector<double>> extra_state,
                                            std::span<const double> target, int degree,
                                            const WarningSink& warn_sink = {}) {
  const std::size_t n = target.size();
  if (state.size() != n) throw UsageError("state and target lengths differ");
  const detail::Standardized primary = detail::standardize(state);
  std::vector<detail::Standardized> extras;
  for (const auto& col : extra_state) {
    if (col.size() != n) throw UsageError("extra state column length differs from target");
    auto s = detail::standardize(col);
    if (!s.constant) extras.push_back(std::move(s));
  }
  if (primary.constant) degree = 0;

  Eigen::Map<const Eigen::VectorXd> y(target.data(), static_cast<Eigen::Index>(n));
  const auto rows = static_cast<Eigen::Index>(n);
  auto full_rank = [](const Eigen::MatrixXd& m) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-12);
    return qr.rank() == m.cols();
  };
  for (int d = degree;; --d) {
    Eigen::MatrixXd design(rows, 1 + d);
    parallel_for(n, [&](std::size_t k) {
      const auto row = static_cast<Eigen::Index>(k);
      double power = 1.0;
      design(row, 0) = 1.0;
      for (int j = 1; j <= d; ++j) {
        power *= primary.z[k];
        design(row, j) = power;
      }
    });
    if (!full_rank(design) && d > 0) {
      warn(warn_sink, "rank-deficient regression basis at degree " + std::to_string(d) +
                          "; retrying with degree " + std::to_string(d - 1));
      continue;
    }
    // An extra column already spanned by the basis carries no further
    // information about the state, so it is left out.
    for (const auto& e : extras) {
      Eigen::MatrixXd wider(rows, design.cols() + 1);
      wider << design, Eigen::Map<const Eigen::VectorXd>(e.z.data(), rows);
      if (full_rank(wider)) design = std::move(wider);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-12);
    const Eigen::VectorXd coef = qr.solve(y);
    const Eigen::VectorXd fitted = design * coef;
    return std::vector<double>(fitted.data(), fitted.data() + n);
  }
}

// Per-path estimate of E[Y_m | F_n], Y_i = w_i X_i. m == n returns Y_n exactly.
inline std::vector<double> conditional_expectation(const PathEnsemble& ensemble, std::size_t n_idx,
                                                   std::size_t m_idx, const CondExpEstimator& est,
                                                   const CondExpContext& ctx = {}) {
  est.validate();
  if (n_idx > m_idx) throw UsageError("conditional_expectation requires n_idx <= m_idx");
  if (m_idx >= ensemble.n_times()) throw UsageError("time index beyond the grid");
  if (!ctx.weights.empty() && ctx.weights.size() != ensemble.n_times())
    throw UsageError("weights must have one entry per grid point");
  const auto weight = [&](std::size_t i) { return ctx.weights.empty() ? 1.0 : ctx.weights[i]; };
  const std::size_t n_paths = ensemble.n_paths();

  std::vector<double> out(n_paths);
  if (n_idx == m_idx) {
    const double w = weight(n_idx);
    for (std::size_t p = 0; p < n_paths; ++p) out[p] = w * ensemble(p, n_idx);
    return out;
  }

  if (est.method == CondExpMethod::regression) {
    const std::vector<double> state = ensemble.column(n_idx);
    std::vector<double> target = ensemble.column(m_idx);
    for (double& y : target) y *= weight(m_idx);
    std::vector<std::vector<double>> extra;
    if (ctx.strategy) {
      if (ctx.strategy->n_paths() != n_paths || !(ctx.strategy->grid() == ensemble.grid()))
        throw UsageError("conditioning strategy does not match the ensemble");
      extra.push_back(ctx.strategy->stock_column(n_idx));
      extra.push_back(ctx.strategy->bond_column(n_idx));
    }
    return regress_on_state(state, extra, target, est.basis_degree, ctx.warn);
  }

  if (!ctx.dynamics) throw UsageError("nested_mc needs the simulating dynamics");
  const MarketParams& dyn = *ctx.dynamics;
  const double dt = ensemble.grid()[m_idx] - ensemble.grid()[n_idx];
  const double drift = dyn.velocity() * dt;
  const double vol = std::sqrt(dyn.alpha * dt);
  const double w = weight(m_idx);
  const std::uint64_t key = derive_key(ensemble.seed(), (std::uint64_t{n_idx} << 32) | m_idx);
  parallel_for(n_paths, [&](std::size_t p) {
    const PathStream stream(key, p);
    const double x = ensemble(p, n_idx);
    std::vector<double> inner(est.n_inner);
    for (std::size_t k = 0; k < est.n_inner; ++k)
      inner[k] = w * x * std::exp(drift + vol * stream.normal(k));
    out[p] = pairwise_mean(inner);
  });
  return out;
}

}  // namespace stochopt
