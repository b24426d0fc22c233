#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fracvolt {

/// Raised when a numerical procedure cannot produce a trustworthy result
/// (non-PSD matrix, singular implicit step, internal consistency failure).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << std::forward<Args>(args));
  return os.str();
}

}  // namespace detail

/**
 * Uniform grid t_j = j T / n, j = 0..n on [0, T].
 *
 * Every sampled function and path in the library lives on one of these.
 * Non-uniform grids are not representable.
 */
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw std::invalid_argument(detail::concat("TimeGrid: horizon must be finite and > 0, got ", horizon));
    }
    if (steps < 1) {
      throw std::invalid_argument("TimeGrid: need at least one step");
    }
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_ + 1; }
  double step() const noexcept { return horizon_ / static_cast<double>(steps_); }

  double node(std::size_t j) const noexcept {
    return j == steps_ ? horizon_ : horizon_ * static_cast<double>(j) / static_cast<double>(steps_);
  }

  std::vector<double> nodes() const {
    std::vector<double> out(size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = node(j);
    return out;
  }

  /// Index of the node equal to t (within 1e-9 of a step), or throws.
  std::size_t index_of(double t) const {
    const double x = t / step();
    const double r = std::round(x);
    if (r < 0.0 || r > static_cast<double>(steps_) || std::abs(x - r) > 1e-9) {
      throw std::invalid_argument(detail::concat("time ", t, " is not a node of a grid with T=", horizon_, ", n=", steps_));
    }
    return static_cast<std::size_t>(r);
  }

  /// The grid [0, t_m] sharing this grid's step.
  TimeGrid prefix(std::size_t m) const {
    if (m < 1 || m > steps_) throw std::invalid_argument("TimeGrid::prefix: m out of range");
    return TimeGrid(node(m), m);
  }

  bool operator==(const TimeGrid& other) const noexcept {
    return horizon_ == other.horizon_ && steps_ == other.steps_;
  }

 private:
  double horizon_;
  std::size_t steps_;
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
  if (!(a == b)) {
    throw std::invalid_argument(detail::concat(what, ": grid mismatch (T=", a.horizon(), ", n=", a.steps(),
                                               " vs T=", b.horizon(), ", n=", b.steps(), ")"));
  }
}

/// Real function sampled on a TimeGrid; piecewise-linear between nodes.
struct SampledFunction {
  TimeGrid grid;
  std::vector<double> values;

  SampledFunction(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) {
      throw std::invalid_argument(detail::concat("SampledFunction: ", values.size(), " values for ", grid.size(), " nodes"));
    }
  }

  template <typename F>
  static SampledFunction from(const TimeGrid& g, F&& f) {
    std::vector<double> v(g.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(g.node(j));
    return SampledFunction(g, std::move(v));
  }

  static SampledFunction constant(const TimeGrid& g, double c) {
    return SampledFunction(g, std::vector<double>(g.size(), c));
  }

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t j) const { return values[j]; }

  /// Linear interpolation at an arbitrary point of [0, T].
  double at(double t) const {
    const double x = t / grid.step();
    if (x <= 0.0) return values.front();
    const auto k = static_cast<std::size_t>(x);
    if (k >= grid.steps()) return values.back();
    const double frac = x - static_cast<double>(k);
    return values[k] + frac * (values[k + 1] - values[k]);
  }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool is_zero() const {
    for (double v : values)
      if (v != 0.0) return false;
    return true;
  }

  SampledFunction reversed() const {
    return SampledFunction(grid, std::vector<double>(values.rbegin(), values.rend()));
  }
};

}  // namespace fracvolt
