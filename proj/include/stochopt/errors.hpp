#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stochopt {

// Argument outside the mathematical domain of an operation (t <= 0, n_paths = 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Inputs of the wrong kind or shape for an operation.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Euler step produced a non-positive price.
class PositivityError : public std::runtime_error {
 public:
  PositivityError(std::size_t path, std::size_t step, double dt, double value)
      : std::runtime_error("euler scheme lost positivity on path " + std::to_string(path) +
                           " at step " + std::to_string(step) + " (dt = " + std::to_string(dt) +
                           ", value = " + std::to_string(value) + "); refine the time grid"),
        path_(path),
        step_(step) {}

  std::size_t path() const noexcept { return path_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t path_;
  std::size_t step_;
};

// alpha = 0 and drift differs from the target rate.
class DegenerateDiffusionError : public std::runtime_error {
 public:
  DegenerateDiffusionError()
      : std::runtime_error(
            "degenerate diffusion (alpha = 0): no drift shift can restore the martingale property") {}
};

// Non-fatal diagnostics (regression degree fallback, strategy magnitude cap).
using WarningSink = std::function<void(std::string_view)>;

inline void warn(const WarningSink& sink, std::string_view message) {
  if (sink) sink(message);
}

}  // namespace stochopt
