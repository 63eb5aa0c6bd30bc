#pragma once

// Energy minimization by vertexwise Frechet-mean relaxation, plus the chart
// diagnostics (harmonic-map residual, subsolution fit) and the empirical
// uniqueness test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "harmlab/errors.hpp"
#include "harmlab/gain_graph.hpp"
#include "harmlab/space.hpp"
#include "harmlab/wp_model.hpp"

namespace harmlab {

namespace solver_detail {

struct Neighborhood {
  std::vector<SpacePoint> points;
  std::vector<double> weights;
};

inline Neighborhood neighborhood(const GainGraph& graph, const std::vector<SpacePoint>& values, int v) {
  Neighborhood nb;
  const auto& space = graph.target();
  for (const auto& inc : graph.incident(v)) {
    const auto& e = graph.edges()[static_cast<std::size_t>(inc.edge)];
    const auto& other = values[static_cast<std::size_t>(inc.outgoing ? e.to : e.from)];
    if (e.gain.is_identity())
      nb.points.push_back(other);
    else
      nb.points.push_back(apply_isometry(space, inc.outgoing ? e.gain : e.gain.inverse(), other));
    nb.weights.push_back(e.weight);
  }
  return nb;
}

inline double local_energy(const NpcSpace& space, const Neighborhood& nb, const SpacePoint& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < nb.points.size(); ++i) {
    const double d = space_detail::distance_unchecked(space, x, nb.points[i]);
    acc += 0.5 * nb.weights[i] * d * d;
  }
  return acc;
}

// Replaces values[v] by the weighted Frechet mean of its gain-transported neighbors when that
// does not raise the local energy. Returns the distance moved.
inline double relax_in_place(const GainGraph& graph, std::vector<SpacePoint>& values, int v) {
  if (graph.pinned(v) || graph.incident(v).empty()) return 0.0;
  const auto& space = graph.target();
  const auto nb = neighborhood(graph, values, v);
  auto& current = values[static_cast<std::size_t>(v)];
  SpacePoint candidate = space_detail::frechet_unchecked(
      space, nb.points, nb.weights, std::accumulate(nb.weights.begin(), nb.weights.end(), 0.0), &current);
  if (local_energy(space, nb, candidate) > local_energy(space, nb, current)) return 0.0;
  const double moved = space_detail::distance_unchecked(space, current, candidate);
  current = std::move(candidate);
  return moved;
}

}  // namespace solver_detail

/// One relaxation step at `vertex`: its value becomes the Frechet mean of {gain . u_j} with
/// weights w_ij. Pinned and isolated vertices are left unchanged; energy never increases.
inline EquivariantMap relax_vertex(const GainGraph& graph, const EquivariantMap& map, int vertex) {
  validate_map(graph, map);
  require(vertex >= 0 && vertex < graph.vertex_count(), "relax vertex: index out of range");
  EquivariantMap out = map;
  solver_detail::relax_in_place(graph, out.values, vertex);
  return out;
}

struct Schedule {
  int max_sweeps = 100000;
  /// Energy tolerance relative to the initial energy.
  double tol_energy_rel = 1e-10;
  double tol_move = 1e-8;
  /// Try projecting onto the strata of twisted curves between sweeps.
  bool stratum_moves = true;
  /// Sweeps of motion without energy decrease before the run is called stalled.
  int stall_sweeps = 50;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct SweepRecord {
  int sweep = 0;
  double energy = 0.0;
  double max_move = 0.0;
  /// Smallest cusp coordinate over the image; NaN when the target has no cusp factors.
  double min_u = std::numeric_limits<double>::quiet_NaN();
  double delta_max = 0.0;
};

struct SolveTrace {
  enum class Termination { Converged, MaxSweeps, Stalled };

  double initial_energy = 0.0;
  std::vector<SweepRecord> records;
  Termination termination = Termination::MaxSweeps;
  /// Some cusp coordinate fell below 1e-6 during the run.
  bool stratum_collapsed = false;
  /// Curves whose stratum projection was accepted, in order.
  std::vector<int> projected_curves;
};

inline const char* to_string(SolveTrace::Termination t) {
  switch (t) {
    case SolveTrace::Termination::Converged: return "converged";
    case SolveTrace::Termination::MaxSweeps: return "max_sweeps";
    case SolveTrace::Termination::Stalled: return "stalled";
  }
  return "?";
}

inline constexpr double kCollapseThreshold = 1e-6;

inline double min_cusp_coordinate(const NpcSpace& space, const EquivariantMap& map) {
  double m = std::numeric_limits<double>::quiet_NaN();
  std::vector<CuspPoint> cps;
  for (const auto& v : map.values) {
    cps.clear();
    collect_cusp_points(space, v, cps);
    for (const auto& c : cps) m = std::isnan(m) ? c.u : std::min(m, c.u);
  }
  return m;
}

namespace solver_detail {

inline SpacePoint pin_curve(const NpcSpace& space, const SpacePoint& p, int curve, int& counter) {
  if (std::holds_alternative<CuspFactor>(space.kind)) return ++counter == curve ? pinned_point() : p;
  if (const auto* prod = std::get_if<Product>(&space.kind)) {
    const auto& pp = std::get<ProductPoint>(p.value);
    std::vector<SpacePoint> out;
    for (std::size_t i = 0; i < prod->factors.size(); ++i) out.push_back(pin_curve(prod->factors[i], pp.factors[i], curve, counter));
    return product_point(std::move(out));
  }
  return p;
}

}  // namespace solver_detail

/// Nearest-point projection of every value onto the stratum {u_curve = 0}.
inline EquivariantMap project_to_stratum(const GainGraph& graph, const EquivariantMap& map, int curve) {
  EquivariantMap out;
  for (const auto& v : map.values) {
    int counter = 0;
    out.values.push_back(solver_detail::pin_curve(graph.target(), v, curve, counter));
  }
  return out;
}

struct SolveResult {
  EquivariantMap map;
  SolveTrace trace;
};

/// Relaxation sweeps in a seeded random order (reshuffled every sweep) until the energy
/// decrease and the largest vertex movement both fall below tolerance.
///
/// With `stratum_moves`, after each sweep the map is also projected onto the stratum of
/// each curve twisted by some gain. That stratum is closed, convex and invariant under the
/// gains, so the projection is a 1-Lipschitz equivariant retraction; it is accepted only
/// when it strictly lowers the energy.
inline SolveResult minimize(const GainGraph& graph, const EquivariantMap& init, const Schedule& schedule, std::uint64_t seed) {
  validate_map(graph, init);
  require(schedule.max_sweeps >= 0, "schedule: max_sweeps must be >= 0");
  const auto& space = graph.target();
  SolveResult res{init, {}};
  auto& values = res.map.values;
  auto& trace = res.trace;

  const auto generators = graph.gain_generators();
  std::vector<int> twisted;
  for (int c = 1; c <= count_cusp_factors(space); ++c)
    if (std::any_of(generators.begin(), generators.end(), [&](const IsometryWord& w) { return twists_curve(w, c); }))
      twisted.push_back(c);

  std::vector<int> order;
  for (int v = 0; v < graph.vertex_count(); ++v)
    if (!graph.pinned(v)) order.push_back(v);
  std::mt19937_64 rng(seed);

  double e_prev = energy(graph, res.map).total;
  trace.initial_energy = e_prev;
  const double tol_energy = schedule.tol_energy_rel * e_prev;
  int idle = 0;
  trace.termination = SolveTrace::Termination::MaxSweeps;
  for (int sweep = 1; sweep <= schedule.max_sweeps; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    double max_move = 0.0;
    for (int v : order) max_move = std::max(max_move, solver_detail::relax_in_place(graph, values, v));
    double e = energy(graph, res.map).total;

    if (schedule.stratum_moves) {
      for (int c : twisted) {
        auto projected = project_to_stratum(graph, res.map, c);
        if (projected == res.map) continue;
        const double ep = energy(graph, projected).total;
        if (ep < e) {
          for (std::size_t i = 0; i < values.size(); ++i)
            max_move = std::max(max_move, space_detail::distance_unchecked(space, values[i], projected.values[i]));
          res.map = std::move(projected);
          e = ep;
          trace.projected_curves.push_back(c);
        }
      }
    }

    SweepRecord rec;
    rec.sweep = sweep;
    rec.energy = e;
    rec.max_move = max_move;
    rec.min_u = min_cusp_coordinate(space, res.map);
    if (!generators.empty())
      for (const auto& x : values) rec.delta_max = std::max(rec.delta_max, delta_functional(space, x, generators));
    trace.records.push_back(rec);
    if (!std::isnan(rec.min_u) && rec.min_u < kCollapseThreshold) trace.stratum_collapsed = true;

    const double decrease = e_prev - e;
    e_prev = e;
    if (decrease <= tol_energy && max_move <= schedule.tol_move) {
      trace.termination = SolveTrace::Termination::Converged;
      break;
    }
    idle = decrease <= 0.0 ? idle + 1 : 0;
    if (idle >= schedule.stall_sweeps) {
      trace.termination = SolveTrace::Termination::Stalled;
      break;
    }
  }
  return res;
}

/// Random initial map: pinned vertices keep their value from `reference`, the rest are sampled.
template <class Rng>
EquivariantMap random_map(const GainGraph& graph, const EquivariantMap& reference, Rng& rng, double scale = 1.0) {
  EquivariantMap out = reference;
  for (int v = 0; v < graph.vertex_count(); ++v)
    if (!graph.pinned(v)) out.values[static_cast<std::size_t>(v)] = sample_point(graph.target(), rng, scale);
  return out;
}

// ---------------------------------------------------------------------------
// Chart diagnostics on structured grids

struct ResidualField {
  std::vector<double> values;
  std::vector<bool> interior;
  double sup_norm = 0.0;
};

namespace solver_detail {

inline std::vector<std::vector<double>> chart_coordinates(const GainGraph& graph, const EquivariantMap& map,
                                                          double u_floor) {
  const auto& space = graph.target();
  std::vector<std::vector<double>> out;
  out.reserve(map.values.size());
  if (const auto* e = std::get_if<Euclidean>(&space.kind)) {
    (void)e;
    for (const auto& v : map.values) out.push_back(std::get<EuclideanPoint>(v.value).x);
    return out;
  }
  std::vector<CuspPoint> cps;
  for (const auto& v : map.values) {
    cps.clear();
    collect_cusp_points(space, v, cps);
    std::vector<double> x;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      if (!(cps[i].u >= u_floor))
        throw ChartDegenerateError("image too close to the stratum of curve " + std::to_string(i + 1) +
                                   " for a chart diagnostic (u = " + std::to_string(cps[i].u) + ")");
      x.push_back(cps[i].u);
      x.push_back(*cps[i].theta);
    }
    out.push_back(std::move(x));
  }
  return out;
}

struct GridDerivatives {
  std::vector<double> laplacian_u1;
  std::vector<double> christoffel_term;
  std::vector<double> u1;
  std::vector<bool> interior;
};

inline GridDerivatives grid_derivatives(const GainGraph& graph, const EquivariantMap& map, const ModelMetric& metric,
                                        double u_floor) {
  validate_map(graph, map);
  require(graph.grid().has_value(), "chart diagnostics need a structured grid domain");
  const auto& g = *graph.grid();
  const bool flat = std::holds_alternative<Euclidean>(graph.target().kind);
  if (!flat) {
    require(std::get_if<Product>(&graph.target().kind) && count_cusp_factors(graph.target()) == curve_count(metric.genus),
            "chart diagnostics need a model-space target of the metric's genus");
  }
  const auto x = chart_coordinates(graph, map, u_floor);
  const int n = graph.vertex_count();
  GridDerivatives out;
  out.laplacian_u1.assign(static_cast<std::size_t>(n), 0.0);
  out.christoffel_term.assign(static_cast<std::size_t>(n), 0.0);
  out.u1.assign(static_cast<std::size_t>(n), 0.0);
  out.interior.assign(static_cast<std::size_t>(n), false);
  const double h = g.h;
  for (int iy = 1; iy + 1 < g.ny; ++iy)
    for (int ix = 1; ix + 1 < g.nx; ++ix) {
      const int c = g.index(ix, iy);
      const auto& xc = x[static_cast<std::size_t>(c)];
      const auto& xe = x[static_cast<std::size_t>(g.index(ix + 1, iy))];
      const auto& xw = x[static_cast<std::size_t>(g.index(ix - 1, iy))];
      const auto& xn = x[static_cast<std::size_t>(g.index(ix, iy + 1))];
      const auto& xs = x[static_cast<std::size_t>(g.index(ix, iy - 1))];
      const std::size_t ci = static_cast<std::size_t>(c);
      out.interior[ci] = true;
      out.u1[ci] = xc[0];
      out.laplacian_u1[ci] = (xe[0] + xw[0] + xn[0] + xs[0] - 4.0 * xc[0]) / (h * h);
      if (flat) continue;
      StratifiedPoint p;
      for (std::size_t k = 0; k < xc.size(); k += 2) p.factors.push_back(CuspPoint{xc[k], xc[k + 1]});
      const auto gamma = christoffel(metric, p);
      const int dim = gamma.dimension();
      double acc = 0.0;
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) {
          const double gab = gamma(0, a, b);
          if (gab == 0.0) continue;
          const auto A = static_cast<std::size_t>(a), B = static_cast<std::size_t>(b);
          const double dxa = (xe[A] - xw[A]) / (2 * h), dya = (xn[A] - xs[A]) / (2 * h);
          const double dxb = (xe[B] - xw[B]) / (2 * h), dyb = (xn[B] - xs[B]) / (2 * h);
          acc += gab * (dxa * dxb + dya * dyb);
        }
      out.christoffel_term[ci] = acc;
    }
  return out;
}

}  // namespace solver_detail

inline constexpr double kResidualChartFloor = 1e-2;
inline constexpr double kSubsolutionChartFloor = 1e-3;

/// Residual of the first-coordinate harmonic map equation
///   Lap u^1 + Gamma^1_{ab}(u) <grad u^a, grad u^b> = 0
/// at interior grid vertices, with centered finite differences. Boundary entries are zero.
inline ResidualField pde_residual(const GainGraph& graph, const EquivariantMap& map, const ModelMetric& metric) {
  const auto d = solver_detail::grid_derivatives(graph, map, metric, kResidualChartFloor);
  ResidualField out;
  out.interior = d.interior;
  out.values.assign(d.u1.size(), 0.0);
  for (std::size_t i = 0; i < d.u1.size(); ++i) {
    if (!d.interior[i]) continue;
    out.values[i] = d.laplacian_u1[i] + d.christoffel_term[i];
    out.sup_norm = std::max(out.sup_norm, std::abs(out.values[i]));
  }
  return out;
}

struct SubsolutionReport {
  double constant = 0.0;
  /// C u^1 - Lap u^1 per vertex (zero off the interior).
  std::vector<double> margins;
  double fraction_satisfied = 0.0;
};

/// Smallest C >= 0 with Lap u^1 <= C u^1 + tol at every interior vertex.
inline SubsolutionReport subsolution_check(const GainGraph& graph, const EquivariantMap& map, const ModelMetric& metric,
                                           double tol = 0.0) {
  const auto d = solver_detail::grid_derivatives(graph, map, metric, kSubsolutionChartFloor);
  SubsolutionReport r;
  for (std::size_t i = 0; i < d.u1.size(); ++i)
    if (d.interior[i] && d.u1[i] > 0.0) r.constant = std::max(r.constant, (d.laplacian_u1[i] - tol) / d.u1[i]);
  r.margins.assign(d.u1.size(), 0.0);
  int total = 0, ok = 0;
  for (std::size_t i = 0; i < d.u1.size(); ++i) {
    if (!d.interior[i]) continue;
    r.margins[i] = r.constant * d.u1[i] - d.laplacian_u1[i];
    ++total;
    if (r.margins[i] >= -tol) ++ok;
  }
  r.fraction_satisfied = total ? static_cast<double>(ok) / total : 1.0;
  return r;
}

// ---------------------------------------------------------------------------
// Empirical uniqueness

struct UniquenessReport {
  double max_pairwise_d2 = 0.0;
  /// All final images lie within 1e-6 of one geodesic segment (includes constant images).
  bool image_in_geodesic = false;
  bool image_constant = false;
  std::vector<EquivariantMap> minimizers;
  std::vector<double> energies;

  /// Uniqueness is asserted only when the image is neither constant nor inside a geodesic.
  bool degenerate() const { return image_in_geodesic || image_constant; }
};

inline constexpr double kGeodesicImageTolerance = 1e-6;

/// Distance from x to the geodesic segment [a, b] (convex along the segment in CAT(0)).
inline double distance_to_segment(const NpcSpace& space, const SpacePoint& a, const SpacePoint& b, const SpacePoint& x) {
  double lo = 0.0, hi = 1.0;
  auto f = [&](double t) { return distance(space, x, geodesic_point(space, a, b, t)); };
  constexpr double phi = 0.6180339887498949;
  double m1 = hi - phi * (hi - lo), m2 = lo + phi * (hi - lo);
  double f1 = f(m1), f2 = f(m2);
  for (int i = 0; i < 80; ++i) {
    if (f1 <= f2) {
      hi = m2;
      m2 = m1;
      f2 = f1;
      m1 = hi - phi * (hi - lo);
      f1 = f(m1);
    } else {
      lo = m1;
      m1 = m2;
      f1 = f2;
      m2 = lo + phi * (hi - lo);
      f2 = f(m2);
    }
  }
  return std::min({f1, f2, f(0.0), f(1.0)});
}

/// Whether every value of the map lies within `tol` of a single geodesic segment; also reports
/// whether the image is (numerically) a single point.
inline std::pair<bool, bool> image_degeneracy(const NpcSpace& space, const EquivariantMap& map, double tol) {
  const auto& v = map.values;
  std::size_t ia = 0, ib = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      const double d = distance(space, v[i], v[j]);
      if (d > best) {
        best = d;
        ia = i;
        ib = j;
      }
    }
  if (best <= tol) return {true, true};
  for (const auto& x : v)
    if (distance_to_segment(space, v[ia], v[ib], x) > tol) return {false, false};
  return {true, false};
}

/// Minimizes from independently sampled initial maps (one per seed; pinned values taken from
/// `reference`) and reports the largest pairwise d2 distance between the minimizers.
inline UniquenessReport uniqueness_test(const GainGraph& graph, const EquivariantMap& reference,
                                        const std::vector<std::uint64_t>& seeds, const Schedule& schedule,
                                        double init_scale = 1.0) {
  require(seeds.size() >= 2, "uniqueness test: needs at least two seeds");
  validate_map(graph, reference);
  UniquenessReport r;
  r.image_in_geodesic = true;
  r.image_constant = true;
  for (auto s : seeds) {
    std::mt19937_64 rng(s);
    const auto init = random_map(graph, reference, rng, init_scale);
    auto res = minimize(graph, init, schedule, s);
    const auto [geo, cst] = image_degeneracy(graph.target(), res.map, kGeodesicImageTolerance);
    r.image_in_geodesic = r.image_in_geodesic && geo;
    r.image_constant = r.image_constant && cst;
    r.energies.push_back(res.trace.records.empty() ? res.trace.initial_energy : res.trace.records.back().energy);
    r.minimizers.push_back(std::move(res.map));
  }
  for (std::size_t i = 0; i < r.minimizers.size(); ++i)
    for (std::size_t j = i + 1; j < r.minimizers.size(); ++j)
      r.max_pairwise_d2 = std::max(r.max_pairwise_d2, d2_distance(graph, r.minimizers[i], r.minimizers[j]));
  return r;
}

}  // namespace harmlab
