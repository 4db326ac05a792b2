#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "stochopt/ensemble.hpp"
#include "stochopt/errors.hpp"
#include "stochopt/martingale.hpp"
#include "stochopt/pricing.hpp"
#include "stochopt/strategy.hpp"

namespace stochopt::io {

using nlohmann::json;

// 17 significant digits, '.' decimal point regardless of locale.
inline std::string format_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& os, const PathEnsemble& e) {
  os << "path,time_index,time,value\n";
  const auto times = e.grid().times();
  for (std::size_t p = 0; p < e.n_paths(); ++p)
    for (std::size_t i = 0; i < e.n_times(); ++i)
      os << p << ',' << i << ',' << format_double(times[i]) << ',' << format_double(e(p, i)) << '\n';
}

inline void write_csv(std::ostream& os, const TradingStrategy& s) {
  os << "path,time_index,time,a,b\n";
  const auto times = s.grid().times();
  for (std::size_t p = 0; p < s.n_paths(); ++p)
    for (std::size_t i = 0; i < s.n_times(); ++i)
      os << p << ',' << i << ',' << format_double(times[i]) << ',' << format_double(s.stock(p, i))
         << ',' << format_double(s.bond(p, i)) << '\n';
}

namespace detail {
inline json rows(std::span<const double> flat, std::size_t n_paths, std::size_t width) {
  json out = json::array();
  for (std::size_t p = 0; p < n_paths; ++p)
    out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(p * width),
                                      flat.begin() + static_cast<std::ptrdiff_t>((p + 1) * width)));
  return out;
}

inline std::vector<double> flatten(const json& rows, std::size_t n_paths, std::size_t width,
                                   const char* field) {
  if (!rows.is_array() || rows.size() != n_paths)
    throw UsageError(std::string("JSON field '") + field + "' must hold n_paths rows");
  std::vector<double> flat;
  flat.reserve(n_paths * width);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != width)
      throw UsageError(std::string("JSON field '") + field + "' rows must match the grid");
    for (const auto& v : row) flat.push_back(v.get<double>());
  }
  return flat;
}
}  // namespace detail

inline json to_json(const PathEnsemble& e) {
  return json{{"kind", to_string(e.kind())},
              {"seed", e.seed()},
              {"grid", std::vector<double>(e.grid().times().begin(), e.grid().times().end())},
              {"n_paths", e.n_paths()},
              {"values", detail::rows(e.values(), e.n_paths(), e.n_times())}};
}

inline PathEnsemble ensemble_from_json(const json& j) {
  try {
    const auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) throw UsageError("unknown ensemble kind");
    TimeGrid grid(j.at("grid").get<std::vector<double>>());
    const auto n_paths = j.at("n_paths").get<std::size_t>();
    auto flat = detail::flatten(j.at("values"), n_paths, grid.size(), "values");
    return PathEnsemble(*kind, std::move(grid), n_paths, j.at("seed").get<std::uint64_t>(),
                        std::move(flat));
  } catch (const json::exception& ex) {
    throw UsageError(std::string("malformed ensemble JSON: ") + ex.what());
  }
}

inline json to_json(const TradingStrategy& s, std::uint64_t seed) {
  return json{{"kind", "strategy"},
              {"seed", seed},
              {"grid", std::vector<double>(s.grid().times().begin(), s.grid().times().end())},
              {"n_paths", s.n_paths()},
              {"a", detail::rows(s.stock_values(), s.n_paths(), s.n_times())},
              {"b", detail::rows(s.bond_values(), s.n_paths(), s.n_times())}};
}

inline json to_json(const PriceQuote& q) {
  return json{{"price", q.price}, {"std_error", q.std_error}, {"n_paths", q.n_paths},
              {"method", q.method}};
}

inline json to_json(const MartingaleReport& r) {
  return json{{"epsilon", r.epsilon},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"max_defect", r.max_defect},
              {"defect_by_index", r.defect_by_index},
              {"theta_history", r.theta_history}};
}

// One row per optimizer iteration.
inline void write_iterations_csv(std::ostream& os, const MartingaleReport& r) {
  os << "iter,theta,max_defect\n";
  for (std::size_t k = 0; k < r.theta_history.size(); ++k)
    os << k << ',' << format_double(r.theta_history[k]) << ','
       << format_double(r.max_defect_history[k]) << '\n';
}

// One row per adjacent pair (i, i+1).
inline void write_defect_csv(std::ostream& os, const MartingaleReport& r, const TimeGrid& grid) {
  os << "time_index,time,defect\n";
  for (std::size_t i = 0; i < r.defect_by_index.size(); ++i)
    os << i << ',' << format_double(grid[i]) << ',' << format_double(r.defect_by_index[i]) << '\n';
}

}  // namespace stochopt::io
