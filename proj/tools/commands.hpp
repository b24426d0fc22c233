#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fracvolt/fracvolt.hpp"
#include "manifest.hpp"

namespace fracvolt::cli {

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<double> time;
  std::optional<unsigned> threads;
  bool inject_fault = false;
};

/// Applies command-line overrides and re-checks the config.
inline ExperimentConfig with_overrides(ExperimentConfig c, const RunOptions& opt) {
  if (opt.seed) c.seed = *opt.seed;
  if (opt.replicas) c.replicas = *opt.replicas;
  if (opt.threads) c.threads = *opt.threads;
  if (opt.out) c.output = opt.out->string();
  validate_config(c);
  return c;
}

inline std::filesystem::path prepare_output(const ExperimentConfig& c) {
  std::filesystem::path dir(c.output);
  std::filesystem::create_directories(dir);
  return dir;
}

struct Setup {
  TimeGrid grid;
  SpectralModel model;
  Kernel kernel;
  OperatorField field;
  ResolventTable table;
  HurstParameter hurst;
};

inline Setup build_setup(const ExperimentConfig& c, const std::filesystem::path& base) {
  const TimeGrid grid = make_grid(c);
  SpectralModel model = make_model(c);
  Kernel kernel = make_kernel(c, base);
  OperatorField field = make_field(c, base);
  ResolventTable table = build_resolvent_table(model.mu, kernel, grid);
  return Setup{grid, std::move(model), std::move(kernel), std::move(field), std::move(table), HurstParameter(c.hurst)};
}

inline void warn_slow_riemann(const ExperimentConfig& c, std::ostream& log) {
  if (c.hurst < 0.4) {
    log << "warning: H=" << c.hurst << " < 0.4; the left-point route converges slowly here, "
        << "prefer sampler=exact_gaussian for validation\n";
  }
}

// ---- simulate ---------------------------------------------------------------

inline int cmd_simulate(const LoadedConfig& loaded, const RunOptions& opt, std::ostream& log) {
  const ExperimentConfig c = with_overrides(loaded.config, opt);
  const Setup s = build_setup(c, loaded.base_dir);
  warn_slow_riemann(c, log);
  if (c.sampler == "exact_gaussian") log << "note: simulate writes whole paths and always uses the left-point route\n";

  const auto dir = prepare_output(c);
  std::filesystem::create_directories(dir / "paths");
  Manifest manifest(dir, "simulate", config_to_json(c));
  FbmSampler sampler(s.grid, s.hurst);
  const auto x0 = make_initial(c);
  for (std::size_t r = 0; r < c.replicas; ++r) {
    const auto noise = sample_hilbert_fbm(s.model, sampler, replica_seed(c.seed, r));
    const auto path = simulate_weak_solution(x0, s.table, s.field, noise);
    std::ostringstream name;
    name << "replica_" << std::setw(5) << std::setfill('0') << r << ".csv";
    const auto file = dir / "paths" / name.str();
    auto out = open_csv(file);
    out << "replica,node,t,k,value\n";
    for (std::size_t j = 0; j < s.grid.size(); ++j)
      for (Eigen::Index k = 0; k < path.coords.rows(); ++k)
        out << r << ',' << j << ',' << s.grid.node(j) << ',' << k + 1 << ',' << path.coords(k, static_cast<Eigen::Index>(j))
            << '\n';
    out.close();
    manifest.add(file);
  }
  const auto mf = manifest.write();
  log << "simulate: " << c.replicas << " replica(s), fBm sampler " << to_string(sampler.method()) << ", manifest "
      << mf.string() << '\n';
  return 0;
}

// ---- covariance -------------------------------------------------------------

inline void write_covariance_csv(const std::filesystem::path& file, const CovarianceMatrix& q, const Kernel& kernel) {
  auto out = open_csv(file);
  out << "# t=" << q.t << ", H=" << q.hurst.value() << ", K=" << q.dim() << ", kernel=" << kernel.describe() << '\n';
  out << "row,col,value\n";
  for (std::size_t i = 0; i < q.dim(); ++i)
    for (std::size_t j = 0; j < q.dim(); ++j) out << i + 1 << ',' << j + 1 << ',' << q(i, j) << '\n';
}

inline int cmd_covariance(const LoadedConfig& loaded, const RunOptions& opt, std::ostream& log) {
  const ExperimentConfig c = with_overrides(loaded.config, opt);
  const Setup s = build_setup(c, loaded.base_dir);
  const double t = opt.time.value_or(c.horizon);
  s.grid.index_of(t);  // off-grid times are rejected before any output
  const auto q = convolution_covariance(s.table, s.field, s.model, s.hurst, t);

  const auto dir = prepare_output(c);
  Manifest manifest(dir, "covariance", config_to_json(c));
  const auto file = dir / "covariance.csv";
  write_covariance_csv(file, q, s.kernel);
  manifest.add(file);
  manifest.write();
  log << "covariance at t=" << t << " (K=" << q.dim() << ") written to " << file.string() << '\n';
  return 0;
}

// ---- validate ---------------------------------------------------------------

inline void write_report(const std::filesystem::path& csv, const std::filesystem::path& txt, const ValidationReport& r) {
  {
    auto out = open_csv(csv);
    out << "node,t,row,col,empirical,analytic,standard_error,z,pass\n";
    for (const auto& e : r.entries)
      out << e.node << ',' << e.t << ',' << e.row + 1 << ',' << e.col + 1 << ',' << e.empirical << ',' << e.analytic << ','
          << e.standard_error << ',' << e.z << ',' << (e.pass ? 1 : 0) << '\n';
  }
  std::ofstream out(txt);
  out << "experiment: " << r.config_echo << '\n';
  out << "sampler: ";
  for (std::size_t i = 0; i < r.methods.size(); ++i) out << (i ? ", " : "") << r.methods[i];
  out << '\n';
  out << "replicas: " << r.replicas << '\n';
  out << "entries: " << r.entries.size() << ", outside " << r.gate << " SE: " << r.failures() << " ("
      << 100.0 * r.failure_fraction() << "%), allowance " << 100.0 * r.allowance << "%\n";
  out << "max |z|: " << r.max_abs_z() << '\n';
  out << "result: " << (r.passed() ? "PASS" : "FAIL") << '\n';
}

inline ValidationReport run_validation(const ExperimentConfig& c, const Setup& s, bool inject_fault) {
  const auto nodes = validation_nodes(c);
  std::vector<CovarianceMatrix> covs;
  for (auto m : nodes) covs.push_back(convolution_covariance(s.table, s.field, s.model, s.hurst, s.grid.node(m)));

  MonteCarloOptions mc;
  mc.replicas = c.replicas;
  mc.master_seed = c.seed;
  mc.threads = c.threads;
  std::vector<MomentAccumulator> acc;
  ValidationReport report;
  if (make_sampler(c) == SampleMethod::riemann) {
    ConvolutionProblem problem{s.model, s.table, s.field, s.hurst};
    acc = run_monte_carlo(problem, nodes, mc);
    report.methods.emplace_back("riemann");
    report.methods.emplace_back(std::string("fbm:") + std::string(to_string(FbmSampler(s.grid, s.hurst).method())));
  } else {
    acc = run_monte_carlo_exact(covs, mc);
    report.methods.emplace_back("exact_gaussian");
  }
  report.config_echo = c.name;
  report.replicas = c.replicas;
  report.gate = c.validate.gate;
  report.allowance = c.validate.allowance;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    CovarianceMatrix analytic = covs[i];
    if (inject_fault) analytic.entries *= 1.5;
    const auto entries = compare(acc[i], analytic, nodes[i], c.validate.gate);
    report.entries.insert(report.entries.end(), entries.begin(), entries.end());
  }
  return report;
}

inline int cmd_validate(const LoadedConfig& loaded, const RunOptions& opt, std::ostream& log) {
  const ExperimentConfig c = with_overrides(loaded.config, opt);
  if (c.replicas < 2) throw config_error("replicas: validation needs at least 2");
  const Setup s = build_setup(c, loaded.base_dir);
  if (make_sampler(c) == SampleMethod::riemann) warn_slow_riemann(c, log);
  const auto report = run_validation(c, s, opt.inject_fault);

  const auto dir = prepare_output(c);
  Manifest manifest(dir, opt.inject_fault ? "validate --inject-fault" : "validate", config_to_json(c));
  const auto csv = dir / "validation.csv";
  const auto txt = dir / "validation_summary.txt";
  write_report(csv, txt, report);
  manifest.add(csv);
  manifest.add(txt);
  manifest.write();
  std::ifstream summary(txt);
  log << summary.rdbuf();
  return report.passed() ? 0 : 1;
}

// ---- isometry-check ---------------------------------------------------------

struct IsometryCheckOptions {
  double hurst = 0.75;
  double time = 1.0;
  std::string f = "one";
  std::string g = "one";
  std::size_t steps = 1024;
  std::optional<std::filesystem::path> out;
};

/// Test integrands on [0, t]: one, s, s2, exp (= e^{-(t - s)}).
inline SampledFunction preset_function(const std::string& name, const TimeGrid& grid) {
  const double t = grid.horizon();
  if (name == "one") return SampledFunction::constant(grid, 1.0);
  if (name == "s") return SampledFunction::from(grid, [](double s) { return s; });
  if (name == "s2") return SampledFunction::from(grid, [](double s) { return s * s; });
  if (name == "exp") return SampledFunction::from(grid, [t](double s) { return std::exp(-(t - s)); });
  throw std::invalid_argument("unknown function preset '" + name + "' (one, s, s2, exp)");
}

inline std::optional<double> preset_degree(const std::string& name) {
  if (name == "one") return 0.0;
  if (name == "s") return 1.0;
  if (name == "s2") return 2.0;
  return std::nullopt;
}

inline int cmd_isometry_check(const IsometryCheckOptions& o, std::ostream& log) {
  const HurstParameter hurst(o.hurst);
  const TimeGrid grid(o.time, o.steps);
  const auto f = preset_function(o.f, grid);
  const auto g = preset_function(o.g, grid);

  struct Row {
    std::string name;
    double value;
    double rel;
    double tolerance;
  };
  const double frac = scalar_isometry_frac(f, g, hurst, o.time);
  std::vector<Row> rows;
  rows.push_back({"frac", frac, 0.0, 0.0});
  auto rel = [frac](double ref) { return std::abs(frac - ref) / std::max(std::abs(ref), 1e-300); };
  if (hurst.is_brownian()) {
    std::vector<double> prod(grid.size());
    for (std::size_t j = 0; j < prod.size(); ++j) prod[j] = f[j] * g[j];
    const double trap = quad::trapezoid(prod, grid.step());
    rows.push_back({"trapezoid", trap, rel(trap), 1e-12});
  }
  if (hurst.value() > 0.5) {
    const double dbl = scalar_isometry_double(f, g, hurst, o.time);
    rows.push_back({"double", dbl, rel(dbl), 1e-3});
  }
  const auto pf = preset_degree(o.f);
  const auto pg = preset_degree(o.g);
  if (pf && pg) {
    const double exact = monomial_covariance(*pf, *pg, hurst, o.time);
    rows.push_back({"analytic", exact, rel(exact), 1e-3});
  }

  bool pass = true;
  std::ostringstream table;
  table << std::setprecision(12);
  table << "H=" << o.hurst << " t=" << o.time << " f=" << o.f << " g=" << o.g << " n=" << o.steps << " c(H)=" << c_of_H(hurst)
        << '\n';
  table << "form,value,rel_to_frac,tolerance,pass\n";
  for (const auto& r : rows) {
    const bool ok = r.tolerance == 0.0 || r.rel < r.tolerance;
    pass = pass && ok;
    table << r.name << ',' << r.value << ',' << r.rel << ',' << r.tolerance << ',' << (ok ? "yes" : "NO") << '\n';
  }
  log << table.str();
  if (o.out) {
    std::filesystem::create_directories(*o.out);
    std::ofstream file(*o.out / "isometry_check.csv");
    file << table.str();
  }
  return pass ? 0 : 1;
}

// ---- resolvent-table --------------------------------------------------------

inline int cmd_resolvent_table(const LoadedConfig& loaded, const RunOptions& opt, std::ostream& log) {
  const ExperimentConfig c = with_overrides(loaded.config, opt);
  const TimeGrid grid = make_grid(c);
  const SpectralModel model = make_model(c);
  const Kernel kernel = make_kernel(c, loaded.base_dir);
  const auto table = build_resolvent_table(model.mu, kernel, grid);

  const auto dir = prepare_output(c);
  Manifest manifest(dir, "resolvent-table", config_to_json(c));
  const auto file = dir / "resolvent.csv";
  {
    auto out = open_csv(file);
    out << "node,t,k,mu,value\n";
    for (std::size_t j = 0; j < grid.size(); ++j)
      for (std::size_t k = 0; k < table.mode_count(); ++k)
        out << j << ',' << grid.node(j) << ',' << k + 1 << ',' << model.mu[k] << ',' << table(k, j) << '\n';
  }
  manifest.add(file);
  manifest.write();

  double discrete = 0.0;
  for (std::size_t k = 0; k < table.mode_count(); ++k) discrete = std::max(discrete, discrete_resolvent_residual(table, k));
  log << "resolvent table: K=" << table.mode_count() << ", kernel " << kernel.describe() << ", n=" << grid.steps() << '\n';
  log << "max discrete residual: " << discrete << '\n';
  if (kernel.differentiable()) {
    double deriv = 0.0;
    for (std::size_t k = 0; k < table.mode_count(); ++k) deriv = std::max(deriv, resolvent_derivative_residual(table, k));
    log << "max derivative-equation residual: " << deriv << '\n';
  } else {
    log << "derivative-equation residual: not defined for this kernel (needs alpha >= 1)\n";
  }
  return discrete < 1e-10 ? 0 : 1;
}

}  // namespace fracvolt::cli
