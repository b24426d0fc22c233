#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracvolt/csv_io.hpp"
#include "fracvolt/fbm.hpp"
#include "fracvolt/grid.hpp"
#include "fracvolt/resolvent.hpp"
#include "fracvolt/spectral.hpp"
#include "fracvolt/stochconv.hpp"

namespace fracvolt {

/// Invalid experiment configuration; what() starts with the offending field path.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct KernelSpec {
  std::string kind = "power";  // power | constant | tabulated
  double alpha = 1.0;
  double value = 1.0;
  std::string csv;
  bool operator==(const KernelSpec&) const = default;
};

struct SpectrumSpec {
  std::string kind = "laplacian";  // laplacian | list | constant
  double scale = 1.0;
  double value = 0.0;
  std::vector<double> values;
  bool operator==(const SpectrumSpec&) const = default;
};

struct NoiseSpec {
  std::string kind = "power";  // power | list
  double scale = 1.0;
  double p = 2.0;
  std::vector<double> values;
  bool operator==(const NoiseSpec&) const = default;
};

struct CoefficientSpec {
  std::string kind = "identity";  // identity | diagonal | zero | tabulated
  std::vector<double> diagonal;
  std::string csv;
  bool operator==(const CoefficientSpec&) const = default;
};

struct ValidateSpec {
  std::vector<double> nodes;  // empty: the horizon only
  double allowance = 0.01;
  double gate = 4.0;
  bool operator==(const ValidateSpec&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  double horizon = 1.0;
  std::size_t steps = 256;
  double hurst = 0.5;
  std::size_t modes = 1;
  KernelSpec kernel;
  SpectrumSpec spectrum;
  NoiseSpec noise;
  CoefficientSpec coefficient;
  std::vector<double> initial;  // empty: zero
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  std::string sampler = "riemann";  // riemann | exact_gaussian
  std::string output = "out";
  unsigned threads = 1;
  ValidateSpec validate;
  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

using json = nlohmann::json;

template <typename T>
void read_field(const json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& ex) {
    throw config_error(concat(path, key, ": ", ex.what()));
  }
}

inline const json& section(const json& j, const char* key, const std::string& path) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  const json& s = j.at(key);
  if (!s.is_object()) throw config_error(concat(path, key, ": expected an object"));
  return s;
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& path) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw config_error(concat(path, item.key(), ": unknown field"));
  }
}

}  // namespace detail

/// Checks every precondition that does not need the file system.
inline void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& field, const std::string& msg) { throw config_error(field + ": " + msg); };
  if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) fail("grid.horizon", "must be finite and > 0");
  if (c.steps < 1) fail("grid.steps", "must be >= 1");
  if (!(c.hurst > 0.0 && c.hurst < 1.0)) fail("hurst", "must lie in (0, 1)");
  if (c.modes < 1) fail("modes", "must be >= 1");

  const auto& k = c.kernel;
  if (k.kind == "power") {
    if (!(k.alpha > 0.0) || !std::isfinite(k.alpha)) fail("kernel.alpha", "must be > 0");
  } else if (k.kind == "constant") {
    if (!std::isfinite(k.value)) fail("kernel.value", "must be finite");
  } else if (k.kind == "tabulated") {
    if (k.csv.empty()) fail("kernel.csv", "required for a tabulated kernel");
  } else {
    fail("kernel.kind", "expected power, constant or tabulated, got '" + k.kind + "'");
  }

  const auto& s = c.spectrum;
  if (s.kind == "laplacian") {
    if (!std::isfinite(s.scale)) fail("spectrum.scale", "must be finite");
  } else if (s.kind == "list") {
    if (s.values.size() != c.modes) fail("spectrum.values", detail::concat("expected ", c.modes, " values"));
  } else if (s.kind == "constant") {
    if (!std::isfinite(s.value)) fail("spectrum.value", "must be finite");
  } else {
    fail("spectrum.kind", "expected laplacian, list or constant, got '" + s.kind + "'");
  }

  const auto& n = c.noise;
  if (n.kind == "power") {
    if (!(n.p > 1.0)) fail("noise.p", "must be > 1 so the noise covariance is trace class");
    if (!(n.scale >= 0.0) || !std::isfinite(n.scale)) fail("noise.scale", "must be finite and >= 0");
  } else if (n.kind == "list") {
    if (n.values.size() != c.modes) fail("noise.values", detail::concat("expected ", c.modes, " values"));
    for (std::size_t i = 0; i < n.values.size(); ++i)
      if (!(n.values[i] >= 0.0) || !std::isfinite(n.values[i])) fail(detail::concat("noise.values[", i, "]"), "must be >= 0");
  } else {
    fail("noise.kind", "expected power or list, got '" + n.kind + "'");
  }

  const auto& f = c.coefficient;
  if (f.kind == "diagonal") {
    if (f.diagonal.size() != c.modes) fail("coefficient.diagonal", detail::concat("expected ", c.modes, " values"));
  } else if (f.kind == "tabulated") {
    if (f.csv.empty()) fail("coefficient.csv", "required for a tabulated coefficient");
  } else if (f.kind != "identity" && f.kind != "zero") {
    fail("coefficient.kind", "expected identity, diagonal, zero or tabulated, got '" + f.kind + "'");
  }

  if (!c.initial.empty() && c.initial.size() != c.modes) fail("initial", detail::concat("expected ", c.modes, " values"));
  if (c.replicas < 1) fail("replicas", "must be >= 1");
  if (c.sampler != "riemann" && c.sampler != "exact_gaussian") {
    fail("sampler", "expected riemann or exact_gaussian, got '" + c.sampler + "'");
  }
  if (c.threads < 1) fail("threads", "must be >= 1");
  const TimeGrid grid(c.horizon, c.steps);
  for (std::size_t i = 0; i < c.validate.nodes.size(); ++i) {
    try {
      grid.index_of(c.validate.nodes[i]);
    } catch (const std::invalid_argument& ex) {
      fail(detail::concat("validate.nodes[", i, "]"), ex.what());
    }
  }
  if (!(c.validate.allowance >= 0.0 && c.validate.allowance < 1.0)) fail("validate.allowance", "must lie in [0, 1)");
  if (!(c.validate.gate > 0.0)) fail("validate.gate", "must be > 0");
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read_field;
  using detail::section;
  if (!j.is_object()) throw config_error("<root>: expected an object");
  detail::reject_unknown(j, {"name", "grid", "hurst", "modes", "kernel", "spectrum", "noise", "coefficient", "initial",
                             "replicas", "seed", "sampler", "output", "threads", "validate"},
                         "");
  ExperimentConfig c;
  read_field(j, "name", "", c.name);
  const auto& g = section(j, "grid", "");
  detail::reject_unknown(g, {"horizon", "steps"}, "grid.");
  read_field(g, "horizon", "grid.", c.horizon);
  read_field(g, "steps", "grid.", c.steps);
  read_field(j, "hurst", "", c.hurst);
  read_field(j, "modes", "", c.modes);

  const auto& k = section(j, "kernel", "");
  detail::reject_unknown(k, {"kind", "alpha", "value", "csv"}, "kernel.");
  read_field(k, "kind", "kernel.", c.kernel.kind);
  read_field(k, "alpha", "kernel.", c.kernel.alpha);
  read_field(k, "value", "kernel.", c.kernel.value);
  read_field(k, "csv", "kernel.", c.kernel.csv);

  const auto& s = section(j, "spectrum", "");
  detail::reject_unknown(s, {"kind", "scale", "value", "values"}, "spectrum.");
  read_field(s, "kind", "spectrum.", c.spectrum.kind);
  read_field(s, "scale", "spectrum.", c.spectrum.scale);
  read_field(s, "value", "spectrum.", c.spectrum.value);
  read_field(s, "values", "spectrum.", c.spectrum.values);

  const auto& n = section(j, "noise", "");
  detail::reject_unknown(n, {"kind", "scale", "p", "values"}, "noise.");
  read_field(n, "kind", "noise.", c.noise.kind);
  read_field(n, "scale", "noise.", c.noise.scale);
  read_field(n, "p", "noise.", c.noise.p);
  read_field(n, "values", "noise.", c.noise.values);

  const auto& f = section(j, "coefficient", "");
  detail::reject_unknown(f, {"kind", "diagonal", "csv"}, "coefficient.");
  read_field(f, "kind", "coefficient.", c.coefficient.kind);
  read_field(f, "diagonal", "coefficient.", c.coefficient.diagonal);
  read_field(f, "csv", "coefficient.", c.coefficient.csv);

  read_field(j, "initial", "", c.initial);
  read_field(j, "replicas", "", c.replicas);
  read_field(j, "seed", "", c.seed);
  read_field(j, "sampler", "", c.sampler);
  read_field(j, "output", "", c.output);
  read_field(j, "threads", "", c.threads);

  const auto& v = section(j, "validate", "");
  detail::reject_unknown(v, {"nodes", "allowance", "gate"}, "validate.");
  read_field(v, "nodes", "validate.", c.validate.nodes);
  read_field(v, "allowance", "validate.", c.validate.allowance);
  read_field(v, "gate", "validate.", c.validate.gate);

  validate_config(c);
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["grid"] = {{"horizon", c.horizon}, {"steps", c.steps}};
  j["hurst"] = c.hurst;
  j["modes"] = c.modes;
  j["kernel"] = {{"kind", c.kernel.kind}, {"alpha", c.kernel.alpha}, {"value", c.kernel.value}, {"csv", c.kernel.csv}};
  j["spectrum"] = {{"kind", c.spectrum.kind},
                   {"scale", c.spectrum.scale},
                   {"value", c.spectrum.value},
                   {"values", c.spectrum.values}};
  j["noise"] = {{"kind", c.noise.kind}, {"scale", c.noise.scale}, {"p", c.noise.p}, {"values", c.noise.values}};
  j["coefficient"] = {{"kind", c.coefficient.kind}, {"diagonal", c.coefficient.diagonal}, {"csv", c.coefficient.csv}};
  j["initial"] = c.initial;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["sampler"] = c.sampler;
  j["output"] = c.output;
  j["threads"] = c.threads;
  j["validate"] = {{"nodes", c.validate.nodes}, {"allowance", c.validate.allowance}, {"gate", c.validate.gate}};
  return j;
}

/// A parsed config together with the directory its relative paths refer to.
struct LoadedConfig {
  ExperimentConfig config;
  std::filesystem::path base_dir;
};

inline LoadedConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw config_error(file.string() + ": " + ex.what());
  }
  return {config_from_json(j), file.parent_path()};
}

// ---- builders ---------------------------------------------------------------

inline TimeGrid make_grid(const ExperimentConfig& c) { return TimeGrid(c.horizon, c.steps); }

inline SampleMethod make_sampler(const ExperimentConfig& c) {
  return c.sampler == "riemann" ? SampleMethod::riemann : SampleMethod::exact_gaussian;
}

inline SpectralModel make_model(const ExperimentConfig& c) {
  std::vector<double> lam(c.modes);
  std::vector<double> mu(c.modes);
  std::optional<double> tail;
  for (std::size_t k = 1; k <= c.modes; ++k) {
    const double kk = static_cast<double>(k);
    if (c.spectrum.kind == "laplacian") {
      mu[k - 1] = -c.spectrum.scale * kk * kk;
    } else if (c.spectrum.kind == "list") {
      mu[k - 1] = c.spectrum.values[k - 1];
    } else {
      mu[k - 1] = c.spectrum.value;
    }
    lam[k - 1] = c.noise.kind == "power" ? PowerFamily{c.noise.scale, c.noise.p}(k) : c.noise.values[k - 1];
  }
  if (c.noise.kind == "power") tail = tail_mass_report(PowerFamily{c.noise.scale, c.noise.p}, c.modes);
  return SpectralModel(std::move(lam), std::move(mu), tail);
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline Kernel make_kernel(const ExperimentConfig& c, const std::filesystem::path& base = {}) {
  if (c.kernel.kind == "power") return Kernel::power(c.kernel.alpha);
  if (c.kernel.kind == "constant") return Kernel::constant(c.kernel.value);
  const auto rows = read_csv(resolve(base, c.kernel.csv), {"t", "value"});
  const TimeGrid grid = make_grid(c);
  std::vector<double> v(grid.size());
  if (rows.size() != grid.size()) {
    throw config_error(detail::concat("kernel.csv: expected ", grid.size(), " rows on the experiment grid, found ", rows.size()));
  }
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (std::abs(rows[j][0] - grid.node(j)) > 1e-9 * std::max(1.0, grid.horizon())) {
      throw config_error(detail::concat("kernel.csv: row ", j + 1, " has t=", rows[j][0], ", expected ", grid.node(j)));
    }
    v[j] = rows[j][1];
  }
  return Kernel::tabulated(SampledFunction(grid, std::move(v)));
}

/// coefficient CSV: columns t,row,col,value (1-based indices); linear in t between listed times.
inline OperatorField make_field(const ExperimentConfig& c, const std::filesystem::path& base = {}) {
  const TimeGrid grid = make_grid(c);
  const auto& f = c.coefficient;
  if (f.kind == "identity") return OperatorField::identity(grid, c.modes);
  if (f.kind == "zero") return OperatorField::zero(grid, c.modes);
  if (f.kind == "diagonal") return OperatorField::constant_diagonal(grid, f.diagonal);

  const auto rows = read_csv(resolve(base, f.csv), {"t", "row", "col", "value"});
  std::vector<double> times;
  for (const auto& r : rows)
    if (times.empty() || r[0] != times.back()) times.push_back(r[0]);
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw config_error("coefficient.csv: times must be non-decreasing");
  if (times.empty() || times.front() > 0.0 || times.back() < c.horizon - 1e-12) {
    throw config_error("coefficient.csv: listed times must cover [0, horizon]");
  }
  const auto K = static_cast<Eigen::Index>(c.modes);
  std::vector<Eigen::MatrixXd> knots(times.size(), Eigen::MatrixXd::Zero(K, K));
  std::size_t slot = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    while (rows[r][0] != times[slot]) ++slot;
    const double ri = rows[r][1];
    const double ci = rows[r][2];
    if (ri < 1 || ci < 1 || ri > static_cast<double>(c.modes) || ci > static_cast<double>(c.modes) || ri != std::floor(ri) ||
        ci != std::floor(ci)) {
      throw config_error(detail::concat("coefficient.csv: row ", r + 1, " has an index outside 1..", c.modes));
    }
    knots[slot](static_cast<Eigen::Index>(ri) - 1, static_cast<Eigen::Index>(ci) - 1) = rows[r][3];
  }
  bool diagonal = true;
  for (const auto& m : knots)
    for (Eigen::Index a = 0; a < K; ++a)
      for (Eigen::Index b = 0; b < K; ++b) diagonal = diagonal && (a == b || m(a, b) == 0.0);
  auto sample = [&](double t) -> Eigen::MatrixXd {
    if (times.size() == 1 || t <= times.front()) return knots.front();
    std::size_t i = 1;
    while (i + 1 < times.size() && times[i] < t) ++i;
    const double w = std::clamp((t - times[i - 1]) / (times[i] - times[i - 1]), 0.0, 1.0);
    return (1.0 - w) * knots[i - 1] + w * knots[i];
  };
  return OperatorField::from(grid, sample, diagonal ? OperatorField::Structure::diagonal : OperatorField::Structure::dense);
}

inline std::vector<double> make_initial(const ExperimentConfig& c) {
  return c.initial.empty() ? std::vector<double>(c.modes, 0.0) : c.initial;
}

/// Node indices to validate at (default: the horizon).
inline std::vector<std::size_t> validation_nodes(const ExperimentConfig& c) {
  const TimeGrid grid = make_grid(c);
  std::vector<std::size_t> out;
  if (c.validate.nodes.empty()) {
    out.push_back(grid.steps());
  } else {
    for (double t : c.validate.nodes) out.push_back(grid.index_of(t));
  }
  return out;
}

}  // namespace fracvolt
