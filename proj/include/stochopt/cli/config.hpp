#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "stochopt/conditional.hpp"
#include "stochopt/errors.hpp"
#include "stochopt/io.hpp"
#include "stochopt/market.hpp"
#include "stochopt/pricing.hpp"
#include "stochopt/strategy.hpp"

namespace stochopt::cli {

// Invalid configuration: carries the offending line (0 when not file-based) and key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, std::string field, const std::string& message)
      : std::runtime_error(describe(line, field, message)), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string describe(std::size_t line, const std::string& field, const std::string& msg) {
    std::string out = "config error";
    if (line > 0) out += " at line " + std::to_string(line);
    if (!field.empty()) out += " in field '" + field + "'";
    return out + ": " + msg;
  }

  std::size_t line_;
  std::string field_;
};

struct GridConfig {
  double horizon = 1.0;
  std::size_t n_steps = 12;
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct SimulationConfig {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 42;
  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

struct OptimizerConfig {
  double epsilon = 0.005;
  std::size_t max_iter = 15;
  double damping = 0.8;
  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};

  bool wants(std::string_view f) const {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  }
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
  MarketParams market{100.0, 0.08, 0.04, 0.05};
  GridConfig grid;
  SimulationConfig simulation;
  CondExpEstimator estimator;
  bool condition_on_strategy = false;
  OptimizerConfig optimizer;
  OutputConfig output;
  CallContract contract{100.0, 1.0};
  // Empty, or one of buy_and_hold, bond_only, threshold(level), constant_mix(w).
  std::string strategy;

  TimeGrid time_grid() const { return TimeGrid::uniform(grid.horizon, grid.n_steps); }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Parses "name" or "name(number)" into a policy; r feeds constant_mix.
inline Policy parse_policy(std::string_view spec, double r) {
  auto arg = [&](std::string_view name) -> std::optional<double> {
    if (spec.size() < name.size() + 2 || spec.substr(0, name.size()) != name ||
        spec[name.size()] != '(' || spec.back() != ')')
      return std::nullopt;
    const auto inner = spec.substr(name.size() + 1, spec.size() - name.size() - 2);
    double v = 0.0;
    const auto res = std::from_chars(inner.data(), inner.data() + inner.size(), v);
    if (res.ec != std::errc{} || res.ptr != inner.data() + inner.size())
      throw ConfigError(0, "strategy.policy", "bad numeric argument in '" + std::string(spec) + "'");
    return v;
  };
  if (spec == "buy_and_hold") return policies::buy_and_hold();
  if (spec == "bond_only") return policies::bond_only();
  if (auto level = arg("threshold")) return policies::threshold(*level);
  if (auto w = arg("constant_mix")) return policies::constant_mix(*w, r);
  throw ConfigError(0, "strategy.policy",
                    "unknown policy '" + std::string(spec) +
                        "' (expected buy_and_hold, bond_only, threshold(L), constant_mix(w))");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, const std::string& key) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ConfigError(line, key, "cannot parse '" + std::string(text) + "' as a number");
  return v;
}

inline bool parse_bool(std::string_view text, std::size_t line, const std::string& key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(line, key, "expected true or false, got '" + std::string(text) + "'");
}

struct Field {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view, std::size_t)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<Field>& fields() {
  using io::format_double;
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto real = [&f](std::string_view key, auto accessor) {
      f.push_back({key,
                   [key, accessor](RunConfig& c, std::string_view v, std::size_t line) {
                     accessor(c) = parse_number<double>(v, line, std::string(key));
                   },
                   [accessor](const RunConfig& c) {
                     return format_double(accessor(const_cast<RunConfig&>(c)));
                   }});
    };
    auto count = [&f](std::string_view key, auto accessor) {
      f.push_back({key,
                   [key, accessor](RunConfig& c, std::string_view v, std::size_t line) {
                     using T = std::remove_reference_t<decltype(accessor(c))>;
                     accessor(c) = parse_number<T>(v, line, std::string(key));
                   },
                   [accessor](const RunConfig& c) {
                     return std::to_string(accessor(const_cast<RunConfig&>(c)));
                   }});
    };
    real("market.x0", [](RunConfig& c) -> double& { return c.market.x0; });
    real("market.mu", [](RunConfig& c) -> double& { return c.market.mu; });
    real("market.alpha", [](RunConfig& c) -> double& { return c.market.alpha; });
    real("market.r", [](RunConfig& c) -> double& { return c.market.r; });
    real("grid.T", [](RunConfig& c) -> double& { return c.grid.horizon; });
    count("grid.n_steps", [](RunConfig& c) -> std::size_t& { return c.grid.n_steps; });
    count("simulation.n_paths", [](RunConfig& c) -> std::size_t& { return c.simulation.n_paths; });
    count("simulation.seed", [](RunConfig& c) -> std::uint64_t& { return c.simulation.seed; });
    f.push_back({"estimator.method",
                 [](RunConfig& c, std::string_view v, std::size_t line) {
                   if (v == "regression")
                     c.estimator.method = CondExpMethod::regression;
                   else if (v == "nested_mc")
                     c.estimator.method = CondExpMethod::nested_mc;
                   else
                     throw ConfigError(line, "estimator.method",
                                       "expected regression or nested_mc, got '" + std::string(v) + "'");
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.estimator.method)); }});
    count("estimator.basis_degree", [](RunConfig& c) -> int& { return c.estimator.basis_degree; });
    count("estimator.n_inner", [](RunConfig& c) -> std::size_t& { return c.estimator.n_inner; });
    f.push_back({"estimator.condition_on_strategy",
                 [](RunConfig& c, std::string_view v, std::size_t line) {
                   c.condition_on_strategy = parse_bool(v, line, "estimator.condition_on_strategy");
                 },
                 [](const RunConfig& c) { return std::string(c.condition_on_strategy ? "true" : "false"); }});
    real("optimizer.epsilon", [](RunConfig& c) -> double& { return c.optimizer.epsilon; });
    count("optimizer.max_iter", [](RunConfig& c) -> std::size_t& { return c.optimizer.max_iter; });
    real("optimizer.damping", [](RunConfig& c) -> double& { return c.optimizer.damping; });
    f.push_back({"output.directory",
                 [](RunConfig& c, std::string_view v, std::size_t) { c.output.directory = std::string(v); },
                 [](const RunConfig& c) { return c.output.directory; }});
    f.push_back({"output.formats",
                 [](RunConfig& c, std::string_view v, std::size_t line) {
                   std::vector<std::string> formats;
                   std::size_t start = 0;
                   while (start <= v.size()) {
                     const auto comma = v.find(',', start);
                     const auto item = trim(v.substr(start, comma == std::string_view::npos
                                                                ? std::string_view::npos
                                                                : comma - start));
                     if (item != "csv" && item != "json")
                       throw ConfigError(line, "output.formats",
                                         "formats must be csv and/or json, got '" + std::string(item) + "'");
                     if (std::find(formats.begin(), formats.end(), item) == formats.end())
                       formats.emplace_back(item);
                     if (comma == std::string_view::npos) break;
                     start = comma + 1;
                   }
                   c.output.formats = std::move(formats);
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (const auto& fmt : c.output.formats) s += (s.empty() ? "" : ",") + fmt;
                   return s;
                 }});
    real("contract.strike", [](RunConfig& c) -> double& { return c.contract.strike; });
    real("contract.maturity", [](RunConfig& c) -> double& { return c.contract.maturity; });
    f.push_back({"strategy.policy",
                 [](RunConfig& c, std::string_view v, std::size_t) { c.strategy = std::string(v); },
                 [](const RunConfig& c) { return c.strategy; }});
    return f;
  }();
  return table;
}

}  // namespace detail

// Sets one dotted key; line is used only for diagnostics.
inline void set_value(RunConfig& cfg, std::string_view key, std::string_view value, std::size_t line = 0) {
  for (const auto& f : detail::fields()) {
    if (f.key == key) {
      f.set(cfg, detail::trim(value), line);
      return;
    }
  }
  throw ConfigError(line, std::string(key), "unknown key");
}

// Applies "key=value".
inline void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError(0, std::string(assignment), "override must have the form key=value");
  set_value(cfg, detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

inline void validate(const RunConfig& cfg) {
  auto check = [](auto&& fn, const char* field) {
    try {
      fn();
    } catch (const DomainError& e) {
      throw ConfigError(0, field, e.what());
    }
  };
  check([&] { cfg.market.validate(); }, "market");
  check([&] { (void)cfg.time_grid(); }, "grid");
  if (cfg.simulation.n_paths == 0) throw ConfigError(0, "simulation.n_paths", "must be >= 1");
  check([&] { cfg.estimator.validate(); }, "estimator");
  if (!(cfg.optimizer.epsilon > 0.0)) throw ConfigError(0, "optimizer.epsilon", "must be > 0");
  if (cfg.optimizer.max_iter == 0) throw ConfigError(0, "optimizer.max_iter", "must be >= 1");
  if (!(cfg.optimizer.damping > 0.0 && cfg.optimizer.damping <= 1.0))
    throw ConfigError(0, "optimizer.damping", "must lie in (0, 1]");
  if (cfg.output.formats.empty()) throw ConfigError(0, "output.formats", "at least one format required");
  check([&] { cfg.contract.validate(); }, "contract");
  if (!cfg.strategy.empty()) (void)parse_policy(cfg.strategy, cfg.market.r);
  if (cfg.condition_on_strategy && cfg.strategy.empty())
    throw ConfigError(0, "estimator.condition_on_strategy", "requires strategy.policy");
}

// Flat "key = value" lines with optional [section] headers; '#' starts a comment.
// Keys inside a section are prefixed with "section.".
inline RunConfig parse_config(std::istream& in, RunConfig cfg = {}) {
  std::string raw;
  std::string section;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(line, "", "unterminated section header");
      section = std::string(detail::trim(text.substr(1, text.size() - 2)));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line, std::string(text), "expected key = value");
    const auto key = detail::trim(text.substr(0, eq));
    if (key.empty()) throw ConfigError(line, "", "empty key");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    set_value(cfg, full, text.substr(eq + 1), line);
  }
  return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

// Emits every key as "dotted.key = value", one per line, in a fixed order.
inline std::string emit_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : detail::fields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace stochopt::cli
