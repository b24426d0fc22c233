#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using fracvolt::cli::RunOptions;

struct Flags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  double time = 0.0;
  unsigned threads = 0;
  bool inject_fault = false;
};

void add_common(CLI::App* cmd, Flags& f, bool with_time) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (overrides config.output)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--replicas", f.replicas, "number of replicas");
  cmd->add_option("--threads", f.threads, "worker threads");
  if (with_time) cmd->add_option("--time", f.time, "evaluation time (a grid node)");
}

RunOptions to_options(const CLI::App* cmd, const Flags& f) {
  RunOptions o;
  if (cmd->count("--out")) o.out = f.out;
  if (cmd->count("--seed")) o.seed = f.seed;
  if (cmd->count("--replicas")) o.replicas = f.replicas;
  if (cmd->count("--threads")) o.threads = f.threads;
  if (cmd->get_option_no_throw("--time") != nullptr && cmd->count("--time")) o.time = f.time;
  o.inject_fault = f.inject_fault;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Volterra equations driven by Hilbert-valued fractional Brownian motion"};
  app.set_version_flag("--version", fracvolt::cli::kVersion);
  app.require_subcommand(1);

  Flags sim_f, cov_f, val_f, res_f;
  auto* sim = app.add_subcommand("simulate", "write sample paths of the weak solution");
  add_common(sim, sim_f, false);
  auto* cov = app.add_subcommand("covariance", "covariance of the stochastic convolution at one time");
  add_common(cov, cov_f, true);
  auto* val = app.add_subcommand("validate", "Monte Carlo covariance against the analytic formula");
  add_common(val, val_f, false);
  val->add_flag("--inject-fault", val_f.inject_fault, "scale the analytic covariance by 1.5 before comparing");
  auto* res = app.add_subcommand("resolvent-table", "per-mode resolvent values and residuals");
  add_common(res, res_f, false);

  fracvolt::cli::IsometryCheckOptions iso_o;
  std::string iso_out;
  auto* iso = app.add_subcommand("isometry-check", "fractional vs double-integral vs closed-form covariance");
  iso->add_option("--hurst", iso_o.hurst, "Hurst index in (0, 1)");
  iso->add_option("--time", iso_o.time, "upper limit t");
  iso->add_option("--f", iso_o.f, "first integrand: one, s, s2, exp");
  iso->add_option("--g", iso_o.g, "second integrand: one, s, s2, exp");
  iso->add_option("--steps", iso_o.steps, "grid steps on [0, t]");
  iso->add_option("--out", iso_out, "directory for isometry_check.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*iso) {
      if (!iso_out.empty()) iso_o.out = iso_out;
      return fracvolt::cli::cmd_isometry_check(iso_o, std::cout);
    }
    auto run = [](CLI::App* cmd, const Flags& f, auto fn) {
      const auto loaded = fracvolt::load_config(f.config);
      return fn(loaded, to_options(cmd, f), std::cout);
    };
    if (*sim) return run(sim, sim_f, fracvolt::cli::cmd_simulate);
    if (*cov) return run(cov, cov_f, fracvolt::cli::cmd_covariance);
    if (*val) return run(val, val_f, fracvolt::cli::cmd_validate);
    if (*res) return run(res, res_f, fracvolt::cli::cmd_resolvent_table);
  } catch (const fracvolt::config_error& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  return 2;
}
