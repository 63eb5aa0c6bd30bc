#pragma once

// Discretized equivariant domains. A gain graph carries one vertex per point of a
// fundamental set and, on each edge (i, j), an isometry `gain` so that the edge
// compares u_i with gain . u_j. Maps are vertex assignments; the energy, the d2
// distance and geodesic homotopies between maps are defined here.

#include <cmath>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "harmlab/errors.hpp"
#include "harmlab/isometry.hpp"
#include "harmlab/numeric.hpp"
#include "harmlab/space.hpp"

namespace harmlab {

struct GainEdge {
  int from = 0;
  int to = 0;
  double weight = 1.0;
  /// Domain length of the edge, used by the Lipschitz proxy.
  double length = 1.0;
  IsometryWord gain;
};

/// Structured square-grid layout: vertex (ix, iy) has index iy * nx + ix, spacing h.
struct GridLayout {
  int nx = 0;
  int ny = 0;
  double h = 1.0;

  int index(int ix, int iy) const { return iy * nx + ix; }
  bool on_boundary(int v) const {
    const int ix = v % nx, iy = v / nx;
    return ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1;
  }
};

struct Incidence {
  int edge;
  /// True when the vertex is the edge's `from` end; the neighbor value is then gain . u_to.
  bool outgoing;
};

class GainGraph {
 public:
  GainGraph(NpcSpace target, std::vector<double> measures, std::vector<GainEdge> edges, std::vector<bool> pinned = {},
            std::optional<GridLayout> grid = std::nullopt)
      : target_(std::move(target)),
        measures_(std::move(measures)),
        edges_(std::move(edges)),
        pinned_(std::move(pinned)),
        grid_(grid) {
    const int n = vertex_count();
    require(n >= 1, "gain graph: needs at least one vertex");
    if (pinned_.empty()) pinned_.assign(static_cast<std::size_t>(n), false);
    require(static_cast<int>(pinned_.size()) == n, "gain graph: pinned flags must match vertex count");
    for (double m : measures_) require(std::isfinite(m) && m > 0.0, "gain graph: vertex measures must be positive");
    incidence_.resize(static_cast<std::size_t>(n));
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& ed = edges_[e];
      require(ed.from >= 0 && ed.from < n && ed.to >= 0 && ed.to < n, "gain graph: edge endpoint out of range");
      require(ed.from != ed.to, "gain graph: self-loops are not supported");
      require(std::isfinite(ed.weight) && ed.weight > 0.0, "gain graph: edge weights must be positive");
      require(std::isfinite(ed.length) && ed.length > 0.0, "gain graph: edge lengths must be positive");
      incidence_[static_cast<std::size_t>(ed.from)].push_back({static_cast<int>(e), true});
      incidence_[static_cast<std::size_t>(ed.to)].push_back({static_cast<int>(e), false});
    }
    require(connected(), "gain graph: graph must be connected");
    if (grid_) require(grid_->nx * grid_->ny == n && grid_->h > 0.0, "gain graph: grid layout does not match");
  }

  const NpcSpace& target() const { return target_; }
  int vertex_count() const { return static_cast<int>(measures_.size()); }
  const std::vector<double>& measures() const { return measures_; }
  const std::vector<GainEdge>& edges() const { return edges_; }
  const std::vector<Incidence>& incident(int v) const { return incidence_[static_cast<std::size_t>(v)]; }
  bool pinned(int v) const { return pinned_[static_cast<std::size_t>(v)]; }
  const std::optional<GridLayout>& grid() const { return grid_; }

  /// Distinct non-identity gains, used as the generator set of the displacement functional.
  std::vector<IsometryWord> gain_generators() const {
    std::vector<IsometryWord> out;
    for (const auto& e : edges_) {
      if (e.gain.is_identity()) continue;
      if (std::find(out.begin(), out.end(), e.gain) == out.end()) out.push_back(e.gain);
    }
    return out;
  }

  /// The same graph with edge `e` reversed (endpoints swapped, gain inverted).
  GainGraph with_reversed_edge(int e) const {
    auto edges = edges_;
    auto& ed = edges.at(static_cast<std::size_t>(e));
    std::swap(ed.from, ed.to);
    ed.gain = ed.gain.inverse();
    return GainGraph(target_, measures_, std::move(edges), pinned_, grid_);
  }

 private:
  bool connected() const {
    const int n = vertex_count();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    int count = 1;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (const auto& inc : incidence_[static_cast<std::size_t>(v)]) {
        const auto& e = edges_[static_cast<std::size_t>(inc.edge)];
        const int w = inc.outgoing ? e.to : e.from;
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          ++count;
          q.push(w);
        }
      }
    }
    return count == n;
  }

  NpcSpace target_;
  std::vector<double> measures_;
  std::vector<GainEdge> edges_;
  std::vector<bool> pinned_;
  std::optional<GridLayout> grid_;
  std::vector<std::vector<Incidence>> incidence_;
};

struct EquivariantMap {
  std::vector<SpacePoint> values;
  friend bool operator==(const EquivariantMap&, const EquivariantMap&) = default;
};

inline void validate_map(const GainGraph& graph, const EquivariantMap& map) {
  require(static_cast<int>(map.values.size()) == graph.vertex_count(), "map: one value per vertex required");
  for (const auto& v : map.values) validate_point(graph.target(), v);
}

// ---------------------------------------------------------------------------
// Graph builders

/// n-cycle 0 - 1 - ... - (n-1) - 0; the closing edge (n-1, 0) carries `closing_gain`.
inline GainGraph cycle_graph(const NpcSpace& target, int n, const IsometryWord& closing_gain = {}) {
  require(n >= 3, "cycle graph: needs at least 3 vertices");
  std::vector<GainEdge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0, 1.0, {}});
  edges.push_back({n - 1, 0, 1.0, 1.0, closing_gain});
  return GainGraph(target, std::vector<double>(static_cast<std::size_t>(n), 1.0), std::move(edges));
}

inline GainGraph path_graph(const NpcSpace& target, int n, std::vector<bool> pinned = {}) {
  require(n >= 2, "path graph: needs at least 2 vertices");
  std::vector<GainEdge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0, 1.0, {}});
  return GainGraph(target, std::vector<double>(static_cast<std::size_t>(n), 1.0), std::move(edges), std::move(pinned));
}

/// Two cycles of `loop` vertices sharing vertex 0; their closing edges carry gains a and b.
inline GainGraph figure_eight_graph(const NpcSpace& target, int loop, const IsometryWord& a, const IsometryWord& b) {
  require(loop >= 3, "figure-eight graph: loops need at least 3 vertices");
  const int n = 2 * loop - 1;
  std::vector<GainEdge> edges;
  for (int i = 0; i + 1 < loop; ++i) edges.push_back({i, i + 1, 1.0, 1.0, {}});
  edges.push_back({loop - 1, 0, 1.0, 1.0, a});
  edges.push_back({0, loop, 1.0, 1.0, {}});
  for (int i = loop; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0, 1.0, {}});
  edges.push_back({n - 1, 0, 1.0, 1.0, b});
  return GainGraph(target, std::vector<double>(static_cast<std::size_t>(n), 1.0), std::move(edges));
}

/// (n+1) x (n+1) grid on the unit square with spacing h = 1/n. Boundary vertices are pinned
/// when `pin_boundary` is set. Edge weights are 1 (the five-point Laplacian scaled by h^2),
/// measures h^2, edge lengths h.
inline GainGraph grid_graph(const NpcSpace& target, int n, bool pin_boundary = true) {
  require(n >= 2, "grid graph: needs at least 2 cells per side");
  const GridLayout layout{n + 1, n + 1, 1.0 / n};
  std::vector<GainEdge> edges;
  for (int iy = 0; iy <= n; ++iy)
    for (int ix = 0; ix <= n; ++ix) {
      if (ix < n) edges.push_back({layout.index(ix, iy), layout.index(ix + 1, iy), 1.0, layout.h, {}});
      if (iy < n) edges.push_back({layout.index(ix, iy), layout.index(ix, iy + 1), 1.0, layout.h, {}});
    }
  const int count = layout.nx * layout.ny;
  std::vector<bool> pinned(static_cast<std::size_t>(count), false);
  if (pin_boundary)
    for (int v = 0; v < count; ++v) pinned[static_cast<std::size_t>(v)] = layout.on_boundary(v);
  return GainGraph(target, std::vector<double>(static_cast<std::size_t>(count), layout.h * layout.h), std::move(edges),
                   std::move(pinned), layout);
}

// ---------------------------------------------------------------------------
// Energy and distances

struct EnergyReport {
  double total = 0.0;
  std::vector<double> per_edge;
  /// max over edges of d(u_i, gain . u_j) / edge length.
  double lipschitz = 0.0;
};

inline double edge_distance(const GainGraph& graph, const EquivariantMap& map, const GainEdge& e) {
  const auto& space = graph.target();
  const auto& a = map.values[static_cast<std::size_t>(e.from)];
  const auto& b = map.values[static_cast<std::size_t>(e.to)];
  if (e.gain.is_identity()) return space_detail::distance_unchecked(space, a, b);
  return space_detail::distance_unchecked(space, a, apply_isometry(space, e.gain, b));
}

/// E = 1/2 sum_edges w_ij d^2(u_i, gain_ij . u_j), each undirected edge once.
inline EnergyReport energy(const GainGraph& graph, const EquivariantMap& map) {
  validate_map(graph, map);
  EnergyReport r;
  r.per_edge.reserve(graph.edges().size());
  for (const auto& e : graph.edges()) {
    const double d = edge_distance(graph, map, e);
    r.per_edge.push_back(0.5 * e.weight * d * d);
    r.lipschitz = std::max(r.lipschitz, d / e.length);
  }
  r.total = pairwise_sum(r.per_edge);
  return r;
}

/// (sum_v mu_v d^2(u_v, v_v))^(1/2)
inline double d2_distance(const GainGraph& graph, const EquivariantMap& u, const EquivariantMap& v) {
  validate_map(graph, u);
  validate_map(graph, v);
  std::vector<double> terms;
  terms.reserve(u.values.size());
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double d = space_detail::distance_unchecked(graph.target(), u.values[i], v.values[i]);
    terms.push_back(graph.measures()[i] * d * d);
  }
  return std::sqrt(pairwise_sum(terms));
}

/// Vertexwise geodesic interpolation u_t.
inline EquivariantMap geodesic_homotopy(const GainGraph& graph, const EquivariantMap& u, const EquivariantMap& v, double t) {
  require(t >= 0.0 && t <= 1.0, "geodesic homotopy: t must lie in [0, 1]");
  validate_map(graph, u);
  validate_map(graph, v);
  EquivariantMap out;
  out.values.reserve(u.values.size());
  for (std::size_t i = 0; i < u.values.size(); ++i)
    out.values.push_back(geodesic_point(graph.target(), u.values[i], v.values[i], t));
  return out;
}

/// [(1-t) E(u) + t E(v) - E(u_t)] / (t (1-t)) - 1/2 sum_edges w_ij (d(u_i, v_i) - d(u_j, v_j))^2.
/// Nonnegative in NPC targets (quadrilateral comparison on every edge); vanishes for
/// parallel maps into flat targets.
inline double convexity_deficit(const GainGraph& graph, const EquivariantMap& u, const EquivariantMap& v, double t) {
  require(t > 0.0 && t < 1.0, "convexity deficit: t must lie in (0, 1)");
  const double eu = energy(graph, u).total;
  const double ev = energy(graph, v).total;
  const double et = energy(graph, geodesic_homotopy(graph, u, v, t)).total;
  const auto& space = graph.target();
  std::vector<double> sep(u.values.size());
  for (std::size_t i = 0; i < u.values.size(); ++i)
    sep[i] = space_detail::distance_unchecked(space, u.values[i], v.values[i]);
  std::vector<double> grad;
  grad.reserve(graph.edges().size());
  for (const auto& e : graph.edges()) {
    const double diff = sep[static_cast<std::size_t>(e.from)] - sep[static_cast<std::size_t>(e.to)];
    grad.push_back(0.5 * e.weight * diff * diff);
  }
  return ((1.0 - t) * eu + t * ev - et) / (t * (1.0 - t)) - pairwise_sum(grad);
}

}  // namespace harmlab
