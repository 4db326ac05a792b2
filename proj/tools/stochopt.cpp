// stochopt: simulate GBM ensembles, price European calls, measure martingale
// defects and run the adaptive drift-shift optimizer.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stochopt/cli/commands.hpp"
#include "stochopt/parallel.hpp"

namespace {

using namespace stochopt::cli;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::vector<std::string> overrides;
  unsigned threads = 0;
  bool raw = false;
  std::string scheme = "exact";
  std::string method = "closed";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Config file (key = value, dotted sections)");
  cmd->add_option("--seed", f.seed, "Master seed (overrides simulation.seed)");
  cmd->add_option("--out", f.out_dir, "Output directory (overrides output.directory)");
  cmd->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--set", f.overrides, "Override a config key: --set market.mu=0.1")->take_all();
  cmd->add_option("--threads", f.threads, "Worker threads (0 = hardware concurrency)");
}

RunConfig load(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw ConfigError(0, "--config", "cannot read '" + f.config_path + "'");
    cfg = parse_config(in);
  }
  for (const auto& o : f.overrides) apply_override(cfg, o);
  if (f.seed) cfg.simulation.seed = *f.seed;
  if (f.out_dir) cfg.output.directory = *f.out_dir;
  if (f.format) cfg.output.formats = {*f.format};
  return cfg;
}

Scheme scheme_of(const std::string& s) { return s == "euler" ? Scheme::euler : Scheme::exact; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic simulation, call pricing and adaptive martingale optimization"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* simulate = app.add_subcommand("simulate", "Simulate a GBM price ensemble");
  auto* price = app.add_subcommand("price", "Price a European call");
  auto* defect = app.add_subcommand("defect", "Measure the martingale defect of a simulated ensemble");
  auto* optimize = app.add_subcommand("optimize", "Run the adaptive drift-shift optimizer");
  for (auto* cmd : {simulate, price, defect, optimize}) add_common(cmd, flags);
  for (auto* cmd : {simulate, defect})
    cmd->add_option("--scheme", flags.scheme, "Discretization")->check(CLI::IsMember({"exact", "euler"}));
  for (auto* cmd : {defect, optimize})
    cmd->add_flag("--raw", flags.raw, "Test X itself instead of the discounted price");
  price->add_option("--method", flags.method, "Pricing method")->check(CLI::IsMember({"closed", "mc"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalidConfig;
  }

  RunConfig cfg;
  try {
    cfg = load(flags);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kInvalidConfig;
  }
  stochopt::set_thread_count(flags.threads);

  if (simulate->parsed()) return cmd_simulate(cfg, scheme_of(flags.scheme), std::cerr);
  if (price->parsed())
    return cmd_price(cfg, flags.method == "mc" ? PriceMethod::mc : PriceMethod::closed, std::cout,
                     std::cerr);
  if (defect->parsed()) return cmd_defect(cfg, scheme_of(flags.scheme), flags.raw, std::cerr);
  return cmd_optimize(cfg, flags.raw, std::cerr);
}
