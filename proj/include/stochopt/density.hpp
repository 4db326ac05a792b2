#pragma once

#include <cmath>
#include <numbers>

#include "stochopt/errors.hpp"

namespace stochopt {

// Fundamental solution of u_t = u_xx / 2: the N(0, t) density.
inline double heat_kernel(double x, double t) {
  if (!(t > 0.0)) throw DomainError("heat_kernel requires t > 0");
  return std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

// Density of c t + B_t, i.e. N(c t, t).
inline double drifted_density(double x, double t, double c) {
  if (!(t > 0.0)) throw DomainError("drifted_density requires t > 0");
  const double z = x - c * t;
  return std::exp(-z * z / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

}  // namespace stochopt
