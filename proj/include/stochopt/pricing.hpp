#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stochopt/ensemble.hpp"
#include "stochopt/errors.hpp"
#include "stochopt/market.hpp"
#include "stochopt/parallel.hpp"
#include "stochopt/random.hpp"
#include "stochopt/simulate.hpp"

namespace stochopt {

struct CallContract {
  double strike = 0.0;
  double maturity = 1.0;

  void validate() const {
    if (!(strike >= 0.0) || !std::isfinite(strike)) throw DomainError("strike must be finite and >= 0");
    if (!(maturity > 0.0) || !std::isfinite(maturity))
      throw DomainError("maturity must be finite and > 0");
  }

  friend bool operator==(const CallContract&, const CallContract&) = default;
};

struct PriceQuote {
  double price = 0.0;
  double std_error = 0.0;   // 0 for the closed form
  std::size_t n_paths = 0;  // 0 for the closed form
  std::string method;
};

// Closed-form European call under the risk-neutral measure with sigma = sqrt(alpha).
// This is the call-price formula, not the GBM solution in simulate_gbm_exact.
// Normal CDF: 0.5 erfc(-x / sqrt 2), accurate to a few ulp.
inline PriceQuote bs_call_price(const MarketParams& params, const CallContract& contract) {
  params.validate();
  contract.validate();
  const double T = contract.maturity;
  const double K = contract.strike;
  PriceQuote q{0.0, 0.0, 0, "closed"};
  if (K == 0.0) {
    q.price = params.x0;
    return q;
  }
  if (params.alpha == 0.0) {
    q.price = std::exp(-params.r * T) * std::max(params.x0 * std::exp(params.r * T) - K, 0.0);
    return q;
  }
  const double sd = std::sqrt(params.alpha * T);
  const double d1 = (std::log(params.x0 / K) + (params.r + 0.5 * params.alpha) * T) / sd;
  const double d2 = d1 - sd;
  q.price = std::max(params.x0 * normal_cdf(d1) - K * std::exp(-params.r * T) * normal_cdf(d2), 0.0);
  return q;
}

// Risk-neutral Monte Carlo: simulate X_T with drift r, discount at r.
inline PriceQuote mc_call_price(const MarketParams& params, const CallContract& contract,
                                std::size_t n_paths, std::uint64_t seed) {
  params.validate();
  contract.validate();
  if (n_paths < 2) throw DomainError("mc_call_price needs n_paths >= 2 for a variance estimate");

  MarketParams risk_neutral = params;
  risk_neutral.mu = params.r;
  const TimeGrid grid({0.0, contract.maturity});
  const PathEnsemble terminal = simulate_gbm_exact(risk_neutral, sample_brownian(grid, n_paths, seed));

  std::vector<double> payoff(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p)
    payoff[p] = std::max(terminal(p, 1) - contract.strike, 0.0);

  // Shifted moments: identical payoffs give exactly zero variance.
  const double shift = payoff[0];
  std::vector<double> d(n_paths), d2(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    d[p] = payoff[p] - shift;
    d2[p] = d[p] * d[p];
  }
  const double n = static_cast<double>(n_paths);
  const double sum_d = pairwise_sum(d);
  const double mean = shift + sum_d / n;
  const double var = std::max((pairwise_sum(d2) - sum_d * sum_d / n) / (n - 1.0), 0.0);

  const double discount = std::exp(-params.r * contract.maturity);
  return PriceQuote{discount * mean, discount * std::sqrt(var / n), n_paths, "mc"};
}

}  // namespace stochopt
