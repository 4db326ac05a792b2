#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "stochopt/ensemble.hpp"
#include "stochopt/errors.hpp"
#include "stochopt/market.hpp"
#include "stochopt/parallel.hpp"

namespace stochopt {

// Bond price beta(t) = e^{r t}, the solution of d beta = r beta dt, beta(0) = 1.
inline double bond_price(double r, double t) {
  if (!(t >= 0.0)) throw DomainError("bond_price requires t >= 0");
  return std::exp(r * t);
}

struct BondCurve {
  double r = 0.0;
  std::vector<double> values;

  BondCurve(double rate, const TimeGrid& grid) : r(rate), values(grid.size()) {
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = bond_price(r, grid[i]);
  }
};

struct Holding {
  double stock = 0.0;  // a_t
  double bond = 0.0;   // b_t
};

// What a policy may observe when choosing the holding at index i: the path
// prefix up to and including i, and its own earlier holdings.
struct PolicyView {
  std::span<const double> times;        // times[0..i]
  std::span<const double> prices;       // X[0..i] on this path
  std::span<const double> prior_stock;  // a[0..i-1]
  std::span<const double> prior_bond;   // b[0..i-1]

  std::size_t index() const noexcept { return prices.size() - 1; }
  double time() const noexcept { return times.back(); }
  double price() const noexcept { return prices.back(); }
};

// Policies are called concurrently across paths and must be thread-safe.
using Policy = std::function<Holding(const PolicyView&)>;

struct StrategyOptions {
  double magnitude_cap = 1e9;
  WarningSink warn;
};

// Stock and bond holdings per path and time, row-major by path.
class TradingStrategy {
 public:
  // No adaptedness check; prefer make_strategy.
  static TradingStrategy unchecked(std::vector<double> stock, std::vector<double> bond, TimeGrid grid,
                                   std::size_t n_paths) {
    return TradingStrategy(std::move(stock), std::move(bond), std::move(grid), n_paths);
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t n_paths() const noexcept { return n_paths_; }
  std::size_t n_times() const noexcept { return grid_.size(); }
  double stock(std::size_t p, std::size_t i) const { return a_[p * grid_.size() + i]; }
  double bond(std::size_t p, std::size_t i) const { return b_[p * grid_.size() + i]; }
  std::span<const double> stock_values() const noexcept { return a_; }
  std::span<const double> bond_values() const noexcept { return b_; }

  std::vector<double> stock_column(std::size_t i) const { return column(a_, i); }
  std::vector<double> bond_column(std::size_t i) const { return column(b_, i); }

  friend TradingStrategy operator+(const TradingStrategy& x, const TradingStrategy& y) {
    x.require_same_shape(y);
    std::vector<double> a(x.a_.size()), b(x.b_.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = x.a_[k] + y.a_[k];
      b[k] = x.b_[k] + y.b_[k];
    }
    return TradingStrategy(std::move(a), std::move(b), x.grid_, x.n_paths_);
  }

  TradingStrategy scaled(double lambda) const {
    std::vector<double> a(a_.size()), b(b_.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = lambda * a_[k];
      b[k] = lambda * b_[k];
    }
    return TradingStrategy(std::move(a), std::move(b), grid_, n_paths_);
  }

 private:
  TradingStrategy(std::vector<double> a, std::vector<double> b, TimeGrid grid, std::size_t n_paths)
      : a_(std::move(a)), b_(std::move(b)), grid_(std::move(grid)), n_paths_(n_paths) {
    if (a_.size() != n_paths_ * grid_.size() || b_.size() != a_.size())
      throw UsageError("strategy holdings do not match n_paths x grid size");
    for (std::size_t k = 0; k < a_.size(); ++k)
      if (!std::isfinite(a_[k]) || !std::isfinite(b_[k]))
        throw DomainError("strategy holdings must be finite (path " +
                          std::to_string(k / grid_.size()) + ", index " +
                          std::to_string(k % grid_.size()) + ")");
  }

  void require_same_shape(const TradingStrategy& o) const {
    if (o.n_paths_ != n_paths_ || !(o.grid_ == grid_))
      throw UsageError("strategies have different shapes");
  }

  std::vector<double> column(const std::vector<double>& m, std::size_t i) const {
    std::vector<double> out(n_paths_);
    for (std::size_t p = 0; p < n_paths_; ++p) out[p] = m[p * grid_.size() + i];
    return out;
  }

  std::vector<double> a_;
  std::vector<double> b_;
  TimeGrid grid_;
  std::size_t n_paths_;
};

// Builds holdings by calling the policy on each path prefix in time order.
// Adapted by construction: the policy never sees values after index i.
inline TradingStrategy make_strategy(const Policy& policy, const PathEnsemble& prices,
                                     const StrategyOptions& options = {}) {
  if (prices.kind() != EnsembleKind::price) throw UsageError("make_strategy expects a price ensemble");
  const std::size_t width = prices.n_times();
  const auto times = prices.grid().times();
  std::vector<double> a(prices.n_paths() * width), b(a.size());
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> bad_index(prices.n_paths(), kNone);
  std::vector<std::size_t> capped_index(prices.n_paths(), kNone);

  parallel_for(prices.n_paths(), [&](std::size_t p) {
    const auto path = prices.path(p);
    const std::span<const double> a_row(a.data() + p * width, width);
    const std::span<const double> b_row(b.data() + p * width, width);
    for (std::size_t i = 0; i < width; ++i) {
      const Holding h = policy(PolicyView{times.first(i + 1), path.first(i + 1), a_row.first(i),
                                          b_row.first(i)});
      if (!std::isfinite(h.stock) || !std::isfinite(h.bond)) {
        bad_index[p] = i;
        return;
      }
      if (capped_index[p] == kNone &&
          (std::abs(h.stock) > options.magnitude_cap || std::abs(h.bond) > options.magnitude_cap))
        capped_index[p] = i;
      a[p * width + i] = h.stock;
      b[p * width + i] = h.bond;
    }
  });

  for (std::size_t p = 0; p < prices.n_paths(); ++p)
    if (bad_index[p] != kNone)
      throw DomainError("policy returned a non-finite holding on path " + std::to_string(p) +
                        " at time index " + std::to_string(bad_index[p]));
  for (std::size_t p = 0; p < prices.n_paths(); ++p) {
    if (capped_index[p] != kNone) {
      warn(options.warn, "strategy holding exceeds magnitude cap on path " + std::to_string(p) +
                             " at time index " + std::to_string(capped_index[p]));
      break;
    }
  }
  return TradingStrategy::unchecked(std::move(a), std::move(b), prices.grid(), prices.n_paths());
}

namespace policies {

inline Policy buy_and_hold() {
  return [](const PolicyView&) { return Holding{1.0, 0.0}; };
}

inline Policy bond_only() {
  return [](const PolicyView&) { return Holding{0.0, 1.0}; };
}

// One share while the price is strictly above level, nothing otherwise.
inline Policy threshold(double level) {
  return [level](const PolicyView& v) { return Holding{v.price() > level ? 1.0 : 0.0, 0.0}; };
}

// Self-financing rebalance to a fraction w of wealth in stock, starting
// from wealth X_0. Wealth is carried forward from the previous holdings.
inline Policy constant_mix(double w, double r) {
  return [w, r](const PolicyView& v) {
    const std::size_t i = v.index();
    const double beta = std::exp(r * v.time());
    const double wealth =
        i == 0 ? v.prices[0] : v.prior_stock[i - 1] * v.price() + v.prior_bond[i - 1] * beta;
    return Holding{w * wealth / v.price(), (1.0 - w) * wealth / beta};
  };
}

}  // namespace policies

namespace detail {
inline void require_conformant(const TradingStrategy& s, const PathEnsemble& prices,
                               const BondCurve& bond) {
  if (prices.kind() != EnsembleKind::price) throw UsageError("expected a price ensemble");
  if (s.n_paths() != prices.n_paths() || !(s.grid() == prices.grid()) ||
      bond.values.size() != prices.n_times())
    throw UsageError("strategy, prices and bond curve dimensions disagree");
}
}  // namespace detail

// V = a X + b beta, elementwise.
inline PathEnsemble portfolio_value(const TradingStrategy& s, const PathEnsemble& prices,
                                    const BondCurve& bond) {
  detail::require_conformant(s, prices, bond);
  const std::size_t width = prices.n_times();
  std::vector<double> v(prices.n_paths() * width);
  parallel_for(prices.n_paths(), [&](std::size_t p) {
    for (std::size_t i = 0; i < width; ++i)
      v[p * width + i] = s.stock(p, i) * prices(p, i) + s.bond(p, i) * bond.values[i];
  });
  return PathEnsemble(EnsembleKind::portfolio, prices.grid(), prices.n_paths(), prices.seed(),
                      std::move(v));
}

// Left-point gain: G_i = sum_{j<i} a_j (X_{j+1} - X_j) + b_j (beta_{j+1} - beta_j).
inline PathEnsemble gain_process(const TradingStrategy& s, const PathEnsemble& prices,
                                 const BondCurve& bond) {
  detail::require_conformant(s, prices, bond);
  const std::size_t width = prices.n_times();
  std::vector<double> g(prices.n_paths() * width);
  parallel_for(prices.n_paths(), [&](std::size_t p) {
    double* row = g.data() + p * width;
    row[0] = 0.0;
    for (std::size_t j = 0; j + 1 < width; ++j)
      row[j + 1] = row[j] + s.stock(p, j) * (prices(p, j + 1) - prices(p, j)) +
                   s.bond(p, j) * (bond.values[j + 1] - bond.values[j]);
  });
  return PathEnsemble(EnsembleKind::gain, prices.grid(), prices.n_paths(), prices.seed(),
                      std::move(g));
}

// Per-path max_i |V_i - V_0 - G_i|; zero iff the strategy is self-financing on that path.
inline std::vector<double> self_financing_defect(const TradingStrategy& s, const PathEnsemble& prices,
                                                 const BondCurve& bond) {
  const PathEnsemble v = portfolio_value(s, prices, bond);
  const PathEnsemble g = gain_process(s, prices, bond);
  std::vector<double> d(prices.n_paths(), 0.0);
  for (std::size_t p = 0; p < prices.n_paths(); ++p)
    for (std::size_t i = 0; i < prices.n_times(); ++i)
      d[p] = std::max(d[p], std::abs(v(p, i) - v(p, 0) - g(p, i)));
  return d;
}

}  // namespace stochopt
