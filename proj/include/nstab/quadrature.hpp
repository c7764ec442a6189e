#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace nstab {

/// Composite trapezoidal rule over uniformly spaced samples.
inline double trapezoid(std::span<const double> y, double step) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * step;
}

/// Trapezoidal integral of f over [lo, hi] with n panels.
template <class F>
double trapezoid(F&& f, double lo, double hi, std::size_t n) {
  if (n == 0) n = 1;
  const double step = (hi - lo) / static_cast<double>(n);
  double s = 0.5 * (f(lo) + f(hi));
  for (std::size_t i = 1; i < n; ++i) s += f(lo + step * static_cast<double>(i));
  return s * step;
}

/// Running trapezoidal integral: out[k] = integral of y from sample 0 to sample k.
inline std::vector<double> cumulative_trapezoid(std::span<const double> y, double step) {
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t k = 1; k < y.size(); ++k) out[k] = out[k - 1] + 0.5 * step * (y[k - 1] + y[k]);
  return out;
}

struct WindowMax {
  double value = 0.0;  // max over window end points of the window integral
  double at = 0.0;     // window end point attaining it
};

/// max over t in [lo + width, hi] of the integral of f over [t - width, t].
/// The window is resolved with `panels_per_window` trapezoid panels so that it
/// always spans a whole number of grid steps.
template <class F>
WindowMax max_window_integral(F&& f, double width, double lo, double hi, std::size_t panels_per_window) {
  if (!(width > 0.0)) throw std::invalid_argument("window width must be positive");
  if (!(hi - lo >= width)) throw std::invalid_argument("horizon shorter than the window");
  if (panels_per_window == 0) panels_per_window = 1;
  const double step = width / static_cast<double>(panels_per_window);
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step)) + 1;
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = f(lo + step * static_cast<double>(k));
  const std::vector<double> cum = cumulative_trapezoid(y, step);

  WindowMax best{-HUGE_VAL, lo + width};
  for (std::size_t k = panels_per_window; k < n; ++k) {
    const double v = cum[k] - cum[k - panels_per_window];
    if (v > best.value) best = {v, lo + step * static_cast<double>(k)};
  }
  return best;
}

}  // namespace nstab
