#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stochopt/errors.hpp"

namespace stochopt {

// Ordered simulation times 0 = t_0 < t_1 < ... < t_N.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw DomainError("time grid needs at least two points");
    if (times_.front() != 0.0) throw DomainError("time grid must start at 0");
    for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
      if (!std::isfinite(times_[i + 1]) || !(times_[i + 1] > times_[i]))
        throw DomainError("time grid must be finite and strictly increasing (index " +
                          std::to_string(i + 1) + ")");
    }
  }

  static TimeGrid uniform(double horizon, std::size_t n_steps) {
    if (n_steps == 0) throw DomainError("uniform grid needs n_steps >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw DomainError("uniform grid needs a finite horizon > 0");
    std::vector<double> t(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i)
      t[i] = horizon * static_cast<double>(i) / static_cast<double>(n_steps);
    return TimeGrid(std::move(t));
  }

  std::size_t size() const noexcept { return times_.size(); }
  std::size_t steps() const noexcept { return times_.size() - 1; }
  double operator[](std::size_t i) const { return times_[i]; }
  double step(std::size_t i) const { return times_[i + 1] - times_[i]; }
  double horizon() const noexcept { return times_.back(); }
  std::span<const double> times() const noexcept { return times_; }

  // Every factor-th point; steps() must be divisible by factor.
  TimeGrid coarsened(std::size_t factor) const {
    if (factor == 0 || steps() % factor != 0)
      throw UsageError("coarsening factor must divide the number of steps");
    std::vector<double> t;
    t.reserve(steps() / factor + 1);
    for (std::size_t i = 0; i < times_.size(); i += factor) t.push_back(times_[i]);
    return TimeGrid(std::move(t));
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::vector<double> times_;
};

// GBM coefficients. alpha is the variance rate: the diffusion coefficient
// is sqrt(alpha), so the usual sigma satisfies sigma^2 = alpha.
struct MarketParams {
  double x0 = 1.0;
  double mu = 0.0;
  double alpha = 0.0;
  double r = 0.0;

  // Drift of log X: c = mu - alpha / 2.
  double velocity() const noexcept { return mu - 0.5 * alpha; }
  double diffusion() const noexcept { return std::sqrt(alpha); }

  void validate() const {
    if (!(x0 > 0.0) || !std::isfinite(x0)) throw DomainError("x0 must be finite and > 0");
    if (!std::isfinite(mu)) throw DomainError("mu must be finite");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite and >= 0");
    if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("r must be finite and >= 0");
  }

  friend bool operator==(const MarketParams&, const MarketParams&) = default;
};

}  // namespace stochopt
