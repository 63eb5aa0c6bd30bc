#pragma once

// Measurements shared by the scenarios and the acceptance suite.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "harmlab/gain_graph.hpp"
#include "harmlab/numeric.hpp"
#include "harmlab/solver.hpp"
#include "harmlab/wp_model.hpp"

namespace harmlab {

// ---------------------------------------------------------------------------
// Metric orders near the stratum

struct MetricOrders {
  std::vector<double> u;
  std::vector<double> g_thth;
  /// Gamma^u_{theta theta} of the first factor (negative; slopes use absolute values).
  std::vector<double> gamma_u_thth;
  /// d((u, 0), (u, 1)) in one cusp factor.
  std::vector<double> displacement;
  double slope_g = 0.0;
  double slope_gamma = 0.0;
  double slope_displacement = 0.0;
};

inline MetricOrders metric_orders(const ModelMetric& metric, int points = 20, double lo = 1e-2, double hi = 1e-1) {
  MetricOrders m;
  m.u = log_space(lo, hi, points);
  const int n = curve_count(metric.genus);
  for (double u : m.u) {
    const auto p = stratified_point(std::vector<double>(static_cast<std::size_t>(n), u),
                                    std::vector<double>(static_cast<std::size_t>(n), 0.0));
    m.g_thth.push_back(metric_tensor(metric, p)(1, 1));
    m.gamma_u_thth.push_back(christoffel(metric, p)(0, 1, 1));
    m.displacement.push_back(cusp_distance(make_cusp_point(u, 0.0), make_cusp_point(u, 1.0)));
  }
  std::vector<double> ag, ad;
  for (double v : m.gamma_u_thth) ag.push_back(std::abs(v));
  m.slope_g = log_log_slope(m.u, m.g_thth);
  m.slope_gamma = log_log_slope(m.u, ag);
  m.slope_displacement = log_log_slope(m.u, m.displacement);
  return m;
}

/// Largest entrywise gap between christoffel() and Christoffel symbols assembled from central
/// differences of metric_tensor(), relative to the largest symbol at that point.
inline double christoffel_fd_gap(const ModelMetric& metric, const StratifiedPoint& p) {
  const int dim = metric.dimension();
  const auto coords = [&](const StratifiedPoint& q) {
    std::vector<double> x;
    for (const auto& f : q.factors) {
      x.push_back(f.u);
      x.push_back(*f.theta);
    }
    return x;
  };
  const auto point = [&](const std::vector<double>& x) {
    std::vector<double> u, th;
    for (int i = 0; i < dim / 2; ++i) {
      u.push_back(x[static_cast<std::size_t>(2 * i)]);
      th.push_back(x[static_cast<std::size_t>(2 * i + 1)]);
    }
    return stratified_point(u, th);
  };
  const auto x0 = coords(p);
  std::vector<Eigen::MatrixXd> dg(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    auto xp = x0, xm = x0;
    const double h = 1e-5 * std::max(std::abs(x0[static_cast<std::size_t>(k)]), 1e-2);
    xp[static_cast<std::size_t>(k)] += h;
    xm[static_cast<std::size_t>(k)] -= h;
    dg[static_cast<std::size_t>(k)] = (metric_tensor(metric, point(xp)) - metric_tensor(metric, point(xm))) / (2 * h);
  }
  const Eigen::MatrixXd ginv = metric_tensor(metric, p).inverse();
  const auto gamma = christoffel(metric, p);
  double scale = 0.0, gap = 0.0;
  for (int k = 0; k < dim; ++k)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        double fd = 0.0;
        for (int l = 0; l < dim; ++l)
          fd += 0.5 * ginv(k, l) *
                (dg[static_cast<std::size_t>(i)](l, j) + dg[static_cast<std::size_t>(j)](l, i) -
                 dg[static_cast<std::size_t>(l)](i, j));
        scale = std::max(scale, std::abs(gamma(k, i, j)));
        gap = std::max(gap, std::abs(gamma(k, i, j) - fd));
      }
  return scale > 0.0 ? gap / scale : gap;
}

/// Worst christoffel_fd_gap over random chart points with log-uniform u in [1e-2, 1].
inline double christoffel_fd_audit(const ModelMetric& metric, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lu(std::log(1e-2), 0.0), th(-3.0, 3.0);
  const int n = curve_count(metric.genus);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> u, t;
    for (int i = 0; i < n; ++i) {
      u.push_back(std::exp(lu(rng)));
      t.push_back(th(rng));
    }
    worst = std::max(worst, christoffel_fd_gap(metric, stratified_point(u, t)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Stratum membership along geodesics

struct StrataCheck {
  int pinned_pairs = 0;
  /// Largest u_2 seen at interior samples of geodesics joining points with u_2 = 0.
  double max_pinned_u = 0.0;
  int interior_pairs = 0;
  /// Smallest cusp coordinate seen at interior samples of geodesics joining interior points.
  double min_interior_u = std::numeric_limits<double>::infinity();
  /// Interior samples of interior pairs whose stratum is nonempty.
  int nonempty_interior_strata = 0;
};

inline StrataCheck strata_check(int genus, int pairs, int samples_per_geodesic, std::uint64_t seed) {
  require(curve_count(genus) >= 2, "strata check: needs at least two curves");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lu(std::log(1e-3), std::log(2.0)), th(-3.0, 3.0);
  const int n = curve_count(genus);
  const auto draw = [&](bool pin_second) {
    StratifiedPoint p;
    for (int i = 0; i < n; ++i) {
      const double u = std::exp(lu(rng)), t = th(rng);
      p.factors.push_back(pin_second && i == 1 ? pinned_cusp_point() : make_cusp_point(u, t));
    }
    return p;
  };
  StrataCheck r;
  for (int k = 0; k < pairs; ++k) {
    const auto p = draw(true), q = draw(true);
    for (const auto& x : geodesic_samples(p, q, samples_per_geodesic)) r.max_pinned_u = std::max(r.max_pinned_u, x.factors[1].u);
    ++r.pinned_pairs;
  }
  for (int k = 0; k < pairs; ++k) {
    const auto p = draw(false), q = draw(false);
    for (const auto& x : geodesic_samples(p, q, samples_per_geodesic)) {
      for (const auto& f : x.factors) r.min_interior_u = std::min(r.min_interior_u, f.u);
      if (!stratum_of(x).pinched().empty()) ++r.nonempty_interior_strata;
    }
    ++r.interior_pairs;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Dirichlet problems on the unit square into the genus-g model

using BoundaryData = std::function<StratifiedPoint(double x, double y)>;

/// Smooth data well inside the chart: u_1 in [0.5, 0.8].
inline BoundaryData interior_data(int genus) {
  return [genus](double x, double y) {
    const int n = curve_count(genus);
    std::vector<double> u(static_cast<std::size_t>(n), 1.0), t(static_cast<std::size_t>(n), 0.0);
    u[0] = 0.6 + 0.2 * x - 0.1 * y;
    t[0] = 2.0 * x + y;
    return stratified_point(u, t);
  };
}

/// Data hugging the stratum of curve 1: u_1 in [0.01, 0.05] with an O(1) twist gradient.
inline BoundaryData near_stratum_data(int genus) {
  return [genus](double x, double y) {
    const int n = curve_count(genus);
    std::vector<double> u(static_cast<std::size_t>(n), 1.0), t(static_cast<std::size_t>(n), 0.0);
    u[0] = 0.01 + 0.04 * x;
    t[0] = 3.0 * y;
    return stratified_point(u, t);
  };
}

inline EquivariantMap sample_on_grid(const GainGraph& graph, const BoundaryData& data) {
  require(graph.grid().has_value(), "sample_on_grid: graph has no grid layout");
  const auto& g = *graph.grid();
  EquivariantMap m;
  for (int v = 0; v < graph.vertex_count(); ++v)
    m.values.push_back(to_space_point(data((v % g.nx) * g.h, (v / g.nx) * g.h)));
  return m;
}

struct GridSolve {
  int cells = 0;
  GainGraph graph;
  SolveResult result;
};

/// Minimizer on the (n+1) x (n+1) grid with the boundary pinned to `data`; the interior starts
/// from the same function.
inline GridSolve solve_dirichlet(int genus, int cells, const BoundaryData& data, const Schedule& schedule,
                                 std::uint64_t seed) {
  auto graph = grid_graph(model_space(genus), cells, true);
  auto result = minimize(graph, sample_on_grid(graph, data), schedule, seed);
  return {cells, std::move(graph), std::move(result)};
}

}  // namespace harmlab
