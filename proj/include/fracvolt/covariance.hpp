#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fracvolt/fbm.hpp"
#include "fracvolt/fraccalc.hpp"
#include "fracvolt/grid.hpp"
#include "fracvolt/quadrature.hpp"
#include "fracvolt/resolvent.hpp"
#include "fracvolt/spectral.hpp"

namespace fracvolt {

/// c(H) = 2H Gamma(3/2 - H) Gamma(H + 1/2) / Gamma(2 - 2H); exactly 1 at H = 1/2.
inline double c_of_H(HurstParameter hurst) {
  const double H = hurst.value();
  if (hurst.is_brownian()) return 1.0;
  return 2.0 * H * std::tgamma(1.5 - H) * std::tgamma(H + 0.5) / std::tgamma(2.0 - 2.0 * H);
}

/**
 * Outer quadrature for the fractional form: node weights w_j with
 *   int_0^t s^(1-2H) K_f(s) K_g(s) ds  ~=  sum_j w_j  Kf~_j Kg~_j
 * where K~ are the regularized kernels. Exact for piecewise-linear products.
 * Empty at H = 1/2 (the plain trapezoid is used there).
 */
inline std::vector<double> isometry_weights(const TimeGrid& grid, HurstParameter hurst) {
  const double H = hurst.value();
  if (hurst.is_brownian()) return {};
  const double a = H > 0.5 ? 2.0 - 2.0 * H : 2.0 * H;
  return quad::beta_weight_rule(grid, a, 2.0 * H);
}

/// int_0^t s^(1-2H) K_f K_g ds for two kernels on the same grid (without c(H)).
inline double isometry_pairing(const IsometryKernel& kf, const IsometryKernel& kg, const std::vector<double>& weights) {
  require_same_grid(kf.grid, kg.grid, "isometry_pairing");
  const std::size_t n = kf.regularized.size();
  if (kf.hurst.is_brownian()) {
    std::vector<double> prod(n);
    for (std::size_t j = 0; j < n; ++j) prod[j] = kf.regularized[j] * kg.regularized[j];
    return quad::trapezoid(prod, kf.grid.step());
  }
  if (weights.size() != n) throw std::invalid_argument("isometry_pairing: weight vector does not match the grid");
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += weights[j] * kf.regularized[j] * kg.regularized[j];
  return acc;
}

/**
 * E[ int_0^t f db^H  int_0^t g db^H ] in the fractional-derivative form,
 * c(H) int_0^t s^(1-2H) K_f(s) K_g(s) ds with K from isometry_kernel.
 */
inline double scalar_isometry_frac(const SampledFunction& f, const SampledFunction& g, HurstParameter hurst, double t) {
  require_same_grid(f.grid, g.grid, "scalar_isometry_frac");
  const auto kf = isometry_kernel(f, hurst, t);
  const auto kg = isometry_kernel(g, hurst, t);
  return c_of_H(hurst) * isometry_pairing(kf, kg, isometry_weights(kf.grid, hurst));
}

namespace detail {

/**
 * E[ int_0^t f db^H  int_0^t' g db^H ] for piecewise-linear f on [0, t] and
 * g on [0, t'] sharing one step, any H. Integrating by parts twice turns
 * the pairing into moments of the fBm covariance R, which are integrated
 * exactly cell by cell. Swapping (f, g) gives a bitwise identical result.
 */
inline double by_parts_covariance(const SampledFunction& f, const SampledFunction& g, HurstParameter hurst) {
  const double h = f.grid.step();
  if (std::abs(g.grid.step() - h) > 1e-12 * h) {
    throw std::invalid_argument("by_parts_covariance: f and g must share the grid step");
  }
  const double p = 2.0 * hurst.value();
  const std::size_t m = f.grid.steps();
  const std::size_t mg = g.grid.steps();
  const double t = f.grid.horizon();
  const double tg = g.grid.horizon();
  const double hp = std::pow(h, p);

  // Unit-step antiderivatives.
  auto phi1 = [p](double z) { return std::copysign(std::pow(std::abs(z), p + 1.0), z) / (p + 1.0); };
  auto psi = [p](double z) { return std::pow(std::abs(z), p + 2.0) / ((p + 1.0) * (p + 2.0)); };

  const std::size_t span = std::max(m, mg);
  // Cell averages of s^p: P[i] / h.
  std::vector<double> cell_pow(span);
  for (std::size_t i = 0; i < span; ++i) {
    const double a = static_cast<double>(i);
    cell_pow[i] = hp * (std::pow(a + 1.0, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
  }
  // (1/h^2) int int_{cell i x cell k} |s - u|^p = h^p lag[|i - k|].
  std::vector<double> lag(span);
  for (std::size_t d = 0; d < span; ++d) {
    const double z = static_cast<double>(d);
    lag[d] = psi(z + 1.0) - 2.0 * psi(z) + psi(z - 1.0);
  }
  // Cell average of R(., tau) over cell i, tau = M h.
  auto cell_cov = [&](std::size_t i, std::size_t M, double tau) {
    const double mi = static_cast<double>(M) - static_cast<double>(i);
    const double q = hp * (phi1(mi) - phi1(mi - 1.0));
    return 0.5 * (std::pow(tau, p) + cell_pow[i] - q);
  };

  std::vector<double> df(m);
  std::vector<double> dg(mg);
  for (std::size_t i = 0; i < m; ++i) df[i] = f.values[i + 1] - f.values[i];
  for (std::size_t k = 0; k < mg; ++k) dg[k] = g.values[k + 1] - g.values[k];
  const double f_end = f.values[m];
  const double g_end = g.values[mg];

  const double endpoint = f_end * g_end * fbm_covariance(t, tg, hurst);

  double xf = 0.0;
  for (std::size_t i = 0; i < m; ++i) xf += df[i] * cell_cov(i, mg, tg);
  double xg = 0.0;
  for (std::size_t k = 0; k < mg; ++k) xg += dg[k] * cell_cov(k, m, t);
  const double boundary = f_end * xg + g_end * xf;

  double sf = 0.0, sfp = 0.0, sg = 0.0, sgp = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sf += df[i];
    sfp += df[i] * cell_pow[i];
  }
  for (std::size_t k = 0; k < mg; ++k) {
    sg += dg[k];
    sgp += dg[k] * cell_pow[k];
  }
  const double marginal = 0.5 * (sfp * sg + sf * sgp);

  auto cross = [&](const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) continue;
      double row = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) row += lag[i > k ? i - k : k - i] * y[k];
      acc += x[i] * row;
    }
    return acc;
  };
  const double interior = 0.25 * hp * (cross(df, dg) + cross(dg, df));

  return endpoint - boundary + marginal - interior;
}

inline SampledFunction head(const SampledFunction& f, std::size_t m) {
  if (m == f.grid.steps()) return f;
  return SampledFunction(f.grid.prefix(m),
                         std::vector<double>(f.values.begin(), f.values.begin() + static_cast<std::ptrdiff_t>(m + 1)));
}

}  // namespace detail

/**
 * int_0^T int_0^T f(s) g(u) theta_H(s, u) ds du for H > 1/2, evaluated
 * exactly for the piecewise-linear interpolants of f and g.
 */
inline double scalar_isometry_double(const SampledFunction& f, const SampledFunction& g, HurstParameter hurst,
                                     double T) {
  if (!(hurst.value() > 0.5)) throw std::domain_error("scalar_isometry_double: requires H > 1/2");
  require_same_grid(f.grid, g.grid, "scalar_isometry_double");
  const std::size_t m = f.grid.index_of(T);
  if (m == 0) return 0.0;
  return detail::by_parts_covariance(detail::head(f, m), detail::head(g, m), hurst);
}

/// K x K covariance (or cross-covariance) operator in the model basis.
struct CovarianceMatrix {
  double t;
  double t_other;
  Eigen::MatrixXd entries;
  HurstParameter hurst;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  double asymmetry() const {
    const double scale = std::max(entries.cwiseAbs().maxCoeff(), 1e-300);
    return (entries - entries.transpose()).cwiseAbs().maxCoeff() / scale;
  }

  /// Throws numerical_error unless symmetric to 1e-12 and PSD to -1e-8 * spectral radius.
  void require_valid() const {
    if (entries.size() == 0 || entries.cwiseAbs().maxCoeff() == 0.0) return;
    if (asymmetry() > 1e-12) {
      throw numerical_error(detail::concat("covariance at t=", t, " is not symmetric (relative ", asymmetry(), ")"));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries, Eigen::EigenvaluesOnly);
    const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-8 * radius) {
      throw numerical_error(detail::concat("covariance at t=", t, " is not PSD (min eigenvalue ",
                                           es.eigenvalues().minCoeff(), ", radius ", radius, ")"));
    }
  }
};

namespace detail {

// Isometry kernels of every nonzero entry of F on [0, t_m], keyed by (row, col).
inline std::map<std::pair<std::size_t, std::size_t>, IsometryKernel> field_kernels(const OperatorField& F,
                                                                                   const SpectralModel& model,
                                                                                   HurstParameter hurst, std::size_t m) {
  std::map<std::pair<std::size_t, std::size_t>, IsometryKernel> out;
  const std::size_t K = F.dim();
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      if (model.lambda[j] == 0.0 || F.entry_is_zero(i, j)) continue;
      const auto f = head(F.entry(i, j), m);
      if (f.is_zero()) continue;
      out.emplace(std::make_pair(i, j), isometry_kernel(f, hurst));
    }
  return out;
}

inline void require_dims(const OperatorField& F, const SpectralModel& model, const char* what) {
  if (F.dim() != model.size()) {
    throw std::invalid_argument(detail::concat(what, ": operator field is ", F.dim(), "x", F.dim(), " but the model has K=",
                                               model.size()));
  }
}

}  // namespace detail

/**
 * E[ (int F dB^H)(t) (x) (int G dB^H)(t) ] in coordinates:
 *   entry(i, i') = c(H) sum_j lambda_j int_0^t s^(1-2H) K[F_ij](s) K[G_i'j](s) ds.
 * t must be a grid node.
 */
inline CovarianceMatrix operator_isometry(const OperatorField& F, const OperatorField& G, const SpectralModel& model,
                                          HurstParameter hurst, double t) {
  detail::require_dims(F, model, "operator_isometry");
  detail::require_dims(G, model, "operator_isometry");
  require_same_grid(F.grid(), G.grid(), "operator_isometry");
  const std::size_t K = F.dim();
  const std::size_t m = F.grid().index_of(t);
  CovarianceMatrix out{t, t, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K)), hurst};
  if (m == 0) return out;

  const bool same = &F == &G;
  const auto kf = detail::field_kernels(F, model, hurst, m);
  const auto kg_storage = same ? decltype(kf){} : detail::field_kernels(G, model, hurst, m);
  const auto& kg = same ? kf : kg_storage;
  const auto weights = isometry_weights(F.grid().prefix(m), hurst);
  const double c = c_of_H(hurst);

  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t ip = same ? i : 0; ip < K; ++ip) {
      double acc = 0.0;
      for (std::size_t j = 0; j < K; ++j) {
        const auto a = kf.find({i, j});
        const auto b = kg.find({ip, j});
        if (a == kf.end() || b == kg.end()) continue;
        acc += model.lambda[j] * isometry_pairing(a->second, b->second, weights);
      }
      out.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ip)) = c * acc;
      if (same) out.entries(static_cast<Eigen::Index>(ip), static_cast<Eigen::Index>(i)) = c * acc;
    }
  return out;
}

namespace detail {

inline void require_table(const ResolventTable& table, const OperatorField& F, const SpectralModel& model,
                          const char* what) {
  require_same_grid(table.grid, F.grid(), what);
  require_dims(F, model, what);
  if (table.mode_count() != model.size()) {
    throw std::invalid_argument(detail::concat(what, ": resolvent table has ", table.mode_count(), " modes, model has ",
                                               model.size()));
  }
}

// s -> S(t_m - s) F(s) on [0, t_m]; with S diagonal this is row scaling.
inline OperatorField convolution_integrand(const ResolventTable& table, const OperatorField& F, std::size_t m) {
  const auto grid = F.grid().prefix(m);
  std::vector<Eigen::MatrixXd> ms(m + 1);
  for (std::size_t l = 0; l <= m; ++l) {
    const Eigen::VectorXd s = table.modes.col(static_cast<Eigen::Index>(m - l));
    ms[l] = s.asDiagonal() * F.at(l);
  }
  return OperatorField(grid, std::move(ms), F.structure());
}

// s -> F(s)* S(t_m - s)*, the other ordering of the adjoint identity.
inline OperatorField adjoint_integrand(const ResolventTable& table, const OperatorField& F, std::size_t m) {
  const auto grid = F.grid().prefix(m);
  std::vector<Eigen::MatrixXd> ms(m + 1);
  for (std::size_t l = 0; l <= m; ++l) {
    const Eigen::VectorXd s = table.modes.col(static_cast<Eigen::Index>(m - l));
    ms[l] = F.at(l).transpose() * s.asDiagonal();
  }
  return OperatorField(grid, std::move(ms), F.structure());
}

// Compare K[(S F)_ij] with K[(F* S*)_ji] on up to `budget` nonzero entries.
inline void check_adjoint_identity(const OperatorField& direct, const OperatorField& adjoint, HurstParameter hurst,
                                   std::size_t budget = 3) {
  const std::size_t K = direct.dim();
  std::size_t checked = 0;
  for (std::size_t i = 0; i < K && checked < budget; ++i)
    for (std::size_t j = 0; j < K && checked < budget; ++j) {
      if (direct.entry_is_zero(i, j)) continue;
      const auto a = isometry_kernel(direct.entry(i, j), hurst);
      const auto b = isometry_kernel(adjoint.entry(j, i), hurst);
      double scale = 0.0, diff = 0.0;
      for (std::size_t l = 0; l < a.regularized.size(); ++l) {
        scale = std::max(scale, std::abs(a.regularized[l]));
        diff = std::max(diff, std::abs(a.regularized[l] - b.regularized[l]));
      }
      if (diff > 1e-10 * std::max(scale, 1.0)) {
        throw numerical_error(detail::concat("adjoint identity violated for entry (", i, ",", j, "): ", diff));
      }
      ++checked;
    }
}

}  // namespace detail

/**
 * Covariance of the stochastic convolution int_0^t S(t - s) F(s) dB^H(s).
 * The resolvent is read at grid nodes, so t must be a node. Always checks
 * the adjoint ordering on a few entries and the PSD property of the result.
 */
inline CovarianceMatrix convolution_covariance(const ResolventTable& table, const OperatorField& F,
                                               const SpectralModel& model, HurstParameter hurst, double t) {
  detail::require_table(table, F, model, "convolution_covariance");
  const std::size_t m = F.grid().index_of(t);
  const std::size_t K = F.dim();
  if (m == 0) {
    return CovarianceMatrix{t, t, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K)), hurst};
  }
  const auto phi = detail::convolution_integrand(table, F, m);
  detail::check_adjoint_identity(phi, detail::adjoint_integrand(table, F, m), hurst);
  auto out = operator_isometry(phi, phi, model, hurst, phi.grid().horizon());
  out.t = out.t_other = t;
  out.require_valid();
  return out;
}

/**
 * E[ X(t) (x) X(t') ] for the stochastic convolution, H > 1/2 only:
 * the integrands 1_[0,t](s) S(t - s) F(s) and 1_[0,t'](u) S(t' - u) F(u)
 * are paired through the covariance of b^H.
 */
inline CovarianceMatrix two_time_covariance(const ResolventTable& table, const OperatorField& F,
                                            const SpectralModel& model, HurstParameter hurst, double t, double t_other) {
  if (!(hurst.value() > 0.5)) {
    throw std::domain_error("two_time_covariance: only available for H > 1/2");
  }
  detail::require_table(table, F, model, "two_time_covariance");
  const std::size_t K = F.dim();
  const std::size_t m = F.grid().index_of(t);
  const std::size_t mo = F.grid().index_of(t_other);
  CovarianceMatrix out{t, t_other, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K)),
                       hurst};
  if (m == 0 || mo == 0) return out;
  const auto phi = detail::convolution_integrand(table, F, m);
  const auto psi = detail::convolution_integrand(table, F, mo);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t ip = 0; ip < K; ++ip) {
      double acc = 0.0;
      for (std::size_t j = 0; j < K; ++j) {
        if (model.lambda[j] == 0.0 || F.entry_is_zero(i, j) || F.entry_is_zero(ip, j)) continue;
        acc += model.lambda[j] * detail::by_parts_covariance(phi.entry(i, j), psi.entry(ip, j), hurst);
      }
      out.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ip)) = acc;
    }
  return out;
}

}  // namespace fracvolt
