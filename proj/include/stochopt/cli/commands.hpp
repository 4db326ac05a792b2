#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "stochopt/cli/config.hpp"
#include "stochopt/io.hpp"
#include "stochopt/martingale.hpp"
#include "stochopt/pricing.hpp"
#include "stochopt/simulate.hpp"
#include "stochopt/strategy.hpp"

namespace stochopt::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalidConfig = 2,
  kIoFailure = 3,
  kEulerPositivity = 4,
  kNotConverged = 5,
  kDegenerateDiffusion = 6,
};

enum class Scheme { exact, euler };
enum class PriceMethod { closed, mc };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::filesystem::path prepare_output(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.output.directory);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  writer(out);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

template <typename T>
void write_ensemble_like(const RunConfig& cfg, const std::filesystem::path& dir, std::string_view stem,
                         const T& value, const nlohmann::json& json_form) {
  if (cfg.output.wants("csv"))
    write_file(dir / (std::string(stem) + ".csv"), [&](std::ostream& os) { io::write_csv(os, value); });
  if (cfg.output.wants("json")) write_json(dir / (std::string(stem) + ".json"), json_form);
}

inline PathEnsemble simulate_prices(const RunConfig& cfg, Scheme scheme) {
  const PathEnsemble brownian =
      sample_brownian(cfg.time_grid(), cfg.simulation.n_paths, cfg.simulation.seed);
  return scheme == Scheme::exact ? simulate_gbm_exact(cfg.market, brownian)
                                 : simulate_gbm_euler(cfg.market, brownian);
}

// Maps library and I/O failures onto the fixed exit-code table.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kInvalidConfig;
  } catch (const PositivityError& e) {
    err << e.what() << '\n';
    return kEulerPositivity;
  } catch (const DegenerateDiffusionError& e) {
    err << e.what() << '\n';
    return kDegenerateDiffusion;
  } catch (const IoError& e) {
    err << e.what() << '\n';
    return kIoFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << e.what() << '\n';
    return kIoFailure;
  } catch (const DomainError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const UsageError& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInvalidConfig;
  }
}

}  // namespace detail

// Writes prices.{csv,json}; with strategy.policy set, also the strategy,
// its portfolio value and its gain process.
inline int cmd_simulate(const RunConfig& cfg, Scheme scheme, std::ostream& err) {
  return detail::guarded(err, [&] {
    validate(cfg);
    const PathEnsemble prices = detail::simulate_prices(cfg, scheme);
    const auto dir = detail::prepare_output(cfg);
    detail::write_ensemble_like(cfg, dir, "prices", prices, io::to_json(prices));
    if (!cfg.strategy.empty()) {
      StrategyOptions opt;
      opt.warn = [&err](std::string_view m) { err << "warning: " << m << '\n'; };
      const TradingStrategy s = make_strategy(parse_policy(cfg.strategy, cfg.market.r), prices, opt);
      const BondCurve bond(cfg.market.r, prices.grid());
      const PathEnsemble v = portfolio_value(s, prices, bond);
      const PathEnsemble g = gain_process(s, prices, bond);
      detail::write_ensemble_like(cfg, dir, "strategy", s, io::to_json(s, prices.seed()));
      detail::write_ensemble_like(cfg, dir, "portfolio", v, io::to_json(v));
      detail::write_ensemble_like(cfg, dir, "gain", g, io::to_json(g));
    }
    return int{kOk};
  });
}

// Writes quote.json and echoes it on out.
inline int cmd_price(const RunConfig& cfg, PriceMethod method, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    validate(cfg);
    const PriceQuote q =
        method == PriceMethod::closed
            ? bs_call_price(cfg.market, cfg.contract)
            : mc_call_price(cfg.market, cfg.contract, cfg.simulation.n_paths, cfg.simulation.seed);
    const auto j = io::to_json(q);
    const auto dir = detail::prepare_output(cfg);
    detail::write_json(dir / "quote.json", j);
    out << j.dump() << '\n';
    return int{kOk};
  });
}

// Martingale defect of a simulated ensemble; writes defect_report.json and defect.csv.
inline int cmd_defect(const RunConfig& cfg, Scheme scheme, bool raw, std::ostream& err) {
  return detail::guarded(err, [&] {
    validate(cfg);
    const PathEnsemble prices = detail::simulate_prices(cfg, scheme);
    std::optional<TradingStrategy> strategy;
    if (cfg.condition_on_strategy)
      strategy.emplace(make_strategy(parse_policy(cfg.strategy, cfg.market.r), prices));
    DefectOptions opt{&cfg.market, strategy ? &*strategy : nullptr,
                      [&err](std::string_view m) { err << "warning: " << m << '\n'; }};
    const MartingaleReport report =
        martingale_defect(prices, raw ? 0.0 : cfg.market.r, cfg.estimator, cfg.optimizer.epsilon, opt);
    const auto dir = detail::prepare_output(cfg);
    if (cfg.output.wants("json")) detail::write_json(dir / "defect_report.json", io::to_json(report));
    if (cfg.output.wants("csv"))
      detail::write_file(dir / "defect.csv",
                         [&](std::ostream& os) { io::write_defect_csv(os, report, prices.grid()); });
    return int{kOk};
  });
}

// Runs the adaptive drift-shift optimizer; writes report.json and iterations.csv.
// Exit 5 when max_iter is exhausted (files are still written).
inline int cmd_optimize(const RunConfig& cfg, bool raw, std::ostream& err) {
  return detail::guarded(err, [&] {
    validate(cfg);
    OptimizerOptions opt;
    opt.damping = cfg.optimizer.damping;
    opt.discount = !raw;
    opt.warn = [&err](std::string_view m) { err << "warning: " << m << '\n'; };
    if (cfg.condition_on_strategy) opt.conditioning_policy = parse_policy(cfg.strategy, cfg.market.r);
    const MartingaleReport report =
        adaptive_optimize(cfg.market, cfg.time_grid(), cfg.simulation.n_paths, cfg.simulation.seed,
                          cfg.estimator, cfg.optimizer.epsilon, cfg.optimizer.max_iter, opt);
    const auto dir = detail::prepare_output(cfg);
    if (cfg.output.wants("json")) detail::write_json(dir / "report.json", io::to_json(report));
    if (cfg.output.wants("csv"))
      detail::write_file(dir / "iterations.csv",
                         [&](std::ostream& os) { io::write_iterations_csv(os, report); });
    return int{report.converged ? kOk : kNotConverged};
  });
}

}  // namespace stochopt::cli
