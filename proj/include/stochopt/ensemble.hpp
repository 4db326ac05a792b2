#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stochopt/errors.hpp"
#include "stochopt/market.hpp"

namespace stochopt {

enum class EnsembleKind { brownian, price, portfolio, gain };

constexpr std::string_view to_string(EnsembleKind kind) noexcept {
  switch (kind) {
    case EnsembleKind::brownian: return "brownian";
    case EnsembleKind::price: return "price";
    case EnsembleKind::portfolio: return "portfolio";
    case EnsembleKind::gain: return "gain";
  }
  return "unknown";
}

inline std::optional<EnsembleKind> parse_kind(std::string_view s) noexcept {
  for (auto k : {EnsembleKind::brownian, EnsembleKind::price, EnsembleKind::portfolio,
                 EnsembleKind::gain})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// Immutable [n_paths x grid.size()] matrix of process values, row-major by path.
class PathEnsemble {
 public:
  PathEnsemble(EnsembleKind kind, TimeGrid grid, std::size_t n_paths, std::uint64_t seed,
               std::vector<double> values)
      : kind_(kind), grid_(std::move(grid)), n_paths_(n_paths), seed_(seed), values_(std::move(values)) {
    if (n_paths_ == 0) throw DomainError("ensemble needs at least one path");
    if (values_.size() != n_paths_ * grid_.size())
      throw UsageError("ensemble values size does not match n_paths x grid size");
    if (kind_ == EnsembleKind::brownian) {
      for (std::size_t p = 0; p < n_paths_; ++p)
        if ((*this)(p, 0) != 0.0) throw UsageError("brownian paths must start at 0");
    }
  }

  EnsembleKind kind() const noexcept { return kind_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t n_paths() const noexcept { return n_paths_; }
  std::size_t n_times() const noexcept { return grid_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }

  double operator()(std::size_t path, std::size_t index) const {
    return values_[path * grid_.size() + index];
  }
  std::span<const double> path(std::size_t p) const {
    return std::span<const double>(values_).subspan(p * grid_.size(), grid_.size());
  }
  std::span<const double> values() const noexcept { return values_; }

  std::vector<double> column(std::size_t index) const {
    std::vector<double> out(n_paths_);
    for (std::size_t p = 0; p < n_paths_; ++p) out[p] = (*this)(p, index);
    return out;
  }

  friend bool operator==(const PathEnsemble&, const PathEnsemble&) = default;

 private:
  EnsembleKind kind_;
  TimeGrid grid_;
  std::size_t n_paths_;
  std::uint64_t seed_;
  std::vector<double> values_;
};

// Restricts an ensemble to every factor-th grid point (shared-path refinement studies).
inline PathEnsemble subsample(const PathEnsemble& e, std::size_t factor) {
  TimeGrid coarse = e.grid().coarsened(factor);
  std::vector<double> v;
  v.reserve(e.n_paths() * coarse.size());
  for (std::size_t p = 0; p < e.n_paths(); ++p)
    for (std::size_t i = 0; i < e.n_times(); i += factor) v.push_back(e(p, i));
  return PathEnsemble(e.kind(), std::move(coarse), e.n_paths(), e.seed(), std::move(v));
}

}  // namespace stochopt
