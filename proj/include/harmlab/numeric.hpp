#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace harmlab {

/// Pairwise (tree) summation. The reduction order depends only on the length,
/// so results are bit-stable for a given input sequence.
inline double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& values) {
  return pairwise_sum(std::span<const double>(values.data(), values.size()));
}

/// Least-squares slope of y against x.
inline double fit_slope(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

/// Slope of log|y| against log x, i.e. the power-law exponent of y(x).
inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  lx.reserve(x.size());
  ly.reserve(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  return fit_slope(lx, ly);
}

/// n points spaced evenly in log between lo and hi (inclusive).
inline std::vector<double> log_space(double lo, double hi, int n) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    out.push_back(std::exp(std::log(lo) + s * (std::log(hi) - std::log(lo))));
  }
  return out;
}

}  // namespace harmlab
