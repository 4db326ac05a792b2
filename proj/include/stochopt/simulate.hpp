#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "stochopt/ensemble.hpp"
#include "stochopt/errors.hpp"
#include "stochopt/market.hpp"
#include "stochopt/parallel.hpp"
#include "stochopt/random.hpp"

namespace stochopt {

// Brownian paths on an arbitrary grid. Path p uses the Philox substream
// (seed, p); increment i is sqrt(step(i)) times the i-th inverse-CDF normal.
inline PathEnsemble sample_brownian(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed) {
  if (n_paths == 0) throw DomainError("sample_brownian requires n_paths >= 1");
  const std::size_t width = grid.size();
  std::vector<double> values(n_paths * width);
  std::vector<double> sqrt_dt(grid.steps());
  for (std::size_t i = 0; i < grid.steps(); ++i) sqrt_dt[i] = std::sqrt(grid.step(i));

  parallel_for(n_paths, [&](std::size_t p) {
    const PathStream stream(seed, p);
    double* row = values.data() + p * width;
    row[0] = 0.0;
    for (std::size_t i = 0; i + 1 < width; ++i) row[i + 1] = row[i] + sqrt_dt[i] * stream.normal(i);
  });
  return PathEnsemble(EnsembleKind::brownian, grid, n_paths, seed, std::move(values));
}

namespace detail {
inline void require_brownian(const PathEnsemble& e, const char* who) {
  if (e.kind() != EnsembleKind::brownian)
    throw UsageError(std::string(who) + " expects a brownian ensemble, got " +
                     std::string(to_string(e.kind())));
}
}  // namespace detail

// X_t = x0 exp((mu - alpha/2) t + sqrt(alpha) B_t), evaluated pointwise.
inline PathEnsemble simulate_gbm_exact(const MarketParams& params, const PathEnsemble& brownian) {
  params.validate();
  detail::require_brownian(brownian, "simulate_gbm_exact");
  const std::size_t width = brownian.n_times();
  const auto times = brownian.grid().times();
  const double c = params.velocity();
  const double vol = params.diffusion();
  std::vector<double> values(brownian.n_paths() * width);
  parallel_for(brownian.n_paths(), [&](std::size_t p) {
    const auto b = brownian.path(p);
    double* row = values.data() + p * width;
    for (std::size_t i = 0; i < width; ++i) row[i] = params.x0 * std::exp(c * times[i] + vol * b[i]);
  });
  return PathEnsemble(EnsembleKind::price, brownian.grid(), brownian.n_paths(), brownian.seed(),
                      std::move(values));
}

// Euler-Maruyama for dX = mu X dt + sqrt(alpha) X dB. Throws PositivityError
// naming the lowest offending path (and its first bad step) if any price
// reaches zero or below.
inline PathEnsemble simulate_gbm_euler(const MarketParams& params, const PathEnsemble& brownian) {
  params.validate();
  detail::require_brownian(brownian, "simulate_gbm_euler");
  const std::size_t width = brownian.n_times();
  const TimeGrid& grid = brownian.grid();
  const double vol = params.diffusion();
  constexpr std::size_t kOk = std::numeric_limits<std::size_t>::max();
  std::vector<double> values(brownian.n_paths() * width);
  std::vector<std::size_t> failed_step(brownian.n_paths(), kOk);

  parallel_for(brownian.n_paths(), [&](std::size_t p) {
    const auto b = brownian.path(p);
    double* row = values.data() + p * width;
    row[0] = params.x0;
    for (std::size_t i = 0; i + 1 < width; ++i) {
      row[i + 1] = row[i] * (1.0 + params.mu * grid.step(i) + vol * (b[i + 1] - b[i]));
      if (!(row[i + 1] > 0.0)) {
        failed_step[p] = i;
        return;
      }
    }
  });
  for (std::size_t p = 0; p < brownian.n_paths(); ++p) {
    if (failed_step[p] != kOk) {
      const std::size_t i = failed_step[p];
      throw PositivityError(p, i, grid.step(i), values[p * width + i + 1]);
    }
  }
  return PathEnsemble(EnsembleKind::price, grid, brownian.n_paths(), brownian.seed(),
                      std::move(values));
}

}  // namespace stochopt
