#pragma once

// Model NPC (CAT(0)) spaces and the metric primitives the rest of the library is
// built on: distance, constant-speed geodesics, midpoints, the midpoint
// (quadrilateral) comparison check and weighted Frechet means.
//
// Spaces and points are plain immutable values; every function here is pure.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "harmlab/cusp.hpp"
#include "harmlab/errors.hpp"

namespace harmlab {

struct Euclidean {
  int dim = 1;
  friend bool operator==(const Euclidean&, const Euclidean&) = default;
};

struct HyperbolicPlane {
  friend bool operator==(const HyperbolicPlane&, const HyperbolicPlane&) = default;
};

/// Star tree: `branch_lengths.size()` closed segments glued at a common center.
struct StarTree {
  std::vector<double> branch_lengths;
  int branch_count() const { return static_cast<int>(branch_lengths.size()); }
  friend bool operator==(const StarTree&, const StarTree&) = default;
};

struct CuspFactor {
  friend bool operator==(const CuspFactor&, const CuspFactor&) = default;
};

struct NpcSpace;

struct Product {
  std::vector<NpcSpace> factors;
  friend bool operator==(const Product&, const Product&);
};

struct NpcSpace {
  std::variant<Euclidean, HyperbolicPlane, StarTree, CuspFactor, Product> kind;
  friend bool operator==(const NpcSpace&, const NpcSpace&) = default;
};

inline bool operator==(const Product& a, const Product& b) { return a.factors == b.factors; }

struct EuclideanPoint {
  std::vector<double> x;
  friend bool operator==(const EuclideanPoint&, const EuclideanPoint&) = default;
};

/// Hyperboloid model: x0^2 - x1^2 - x2^2 = 1, x0 > 0.
struct HyperboloidPoint {
  std::array<double, 3> x{1.0, 0.0, 0.0};
  friend bool operator==(const HyperboloidPoint&, const HyperboloidPoint&) = default;
};

/// Branch index in 1..branch_count and arc length from the center; the center is {0, 0}.
struct TreePoint {
  int branch = 0;
  double t = 0.0;
  friend bool operator==(const TreePoint&, const TreePoint&) = default;
};

struct SpacePoint;

struct ProductPoint {
  std::vector<SpacePoint> factors;
  friend bool operator==(const ProductPoint&, const ProductPoint&);
};

struct SpacePoint {
  std::variant<EuclideanPoint, HyperboloidPoint, TreePoint, CuspPoint, ProductPoint> value;
  friend bool operator==(const SpacePoint&, const SpacePoint&) = default;
};

inline bool operator==(const ProductPoint& a, const ProductPoint& b) { return a.factors == b.factors; }

// ---------------------------------------------------------------------------
// Construction helpers

inline NpcSpace euclidean_space(int dim) {
  require(dim >= 1, "euclidean space: dimension must be >= 1");
  return NpcSpace{Euclidean{dim}};
}
inline NpcSpace hyperbolic_plane() { return NpcSpace{HyperbolicPlane{}}; }
inline NpcSpace star_tree(std::vector<double> branch_lengths) {
  require(!branch_lengths.empty(), "star tree: needs at least one branch");
  for (double l : branch_lengths) require(l > 0.0, "star tree: branch lengths must be positive");
  return NpcSpace{StarTree{std::move(branch_lengths)}};
}
inline NpcSpace star_tree(int branches, double length) {
  require(branches >= 1, "star tree: needs at least one branch");
  return star_tree(std::vector<double>(static_cast<std::size_t>(branches), length));
}
inline NpcSpace cusp_factor() { return NpcSpace{CuspFactor{}}; }

/// l2 product of the given factors; geodesics are taken factorwise.
inline NpcSpace product_space(std::vector<NpcSpace> factors) {
  require(!factors.empty(), "product space: factor list must be nonempty");
  return NpcSpace{Product{std::move(factors)}};
}

/// Number of twist-length factors of a genus-g surface model.
inline int curve_count(int genus) { return 3 * genus - 3; }

/// Completed model target for genus g: a product of 3g - 3 cusp factors.
inline NpcSpace model_space(int genus) {
  require(genus >= 2, "genus must be >= 2");
  return product_space(std::vector<NpcSpace>(static_cast<std::size_t>(curve_count(genus)), cusp_factor()));
}

inline SpacePoint euclidean_point(std::vector<double> x) { return SpacePoint{EuclideanPoint{std::move(x)}}; }

inline double minkowski(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/// Point at distance r from the basepoint (1, 0, 0) in direction angle.
inline SpacePoint hyperbolic_polar(double r, double angle) {
  return SpacePoint{HyperboloidPoint{{std::cosh(r), std::sinh(r) * std::cos(angle), std::sinh(r) * std::sin(angle)}}};
}

/// Lift of the plane coordinates (x1, x2) to the upper sheet.
inline SpacePoint hyperbolic_point(double x1, double x2) {
  return SpacePoint{HyperboloidPoint{{std::sqrt(1.0 + x1 * x1 + x2 * x2), x1, x2}}};
}

inline SpacePoint tree_point(int branch, double t) {
  require(t >= 0.0, "tree point: arc length must be >= 0");
  if (t == 0.0) return SpacePoint{TreePoint{0, 0.0}};
  require(branch >= 1, "tree point: branch index must be >= 1 away from the center");
  return SpacePoint{TreePoint{branch, t}};
}

inline SpacePoint cusp_point(double u, double theta) { return SpacePoint{make_cusp_point(u, theta)}; }
inline SpacePoint pinned_point() { return SpacePoint{pinned_cusp_point()}; }

inline SpacePoint product_point(std::vector<SpacePoint> factors) { return SpacePoint{ProductPoint{std::move(factors)}}; }

// ---------------------------------------------------------------------------
// Validation

inline void validate_point(const NpcSpace& space, const SpacePoint& p);

namespace space_detail {

template <class Pt>
const Pt& expect(const SpacePoint& p, const char* what) {
  const auto* q = std::get_if<Pt>(&p.value);
  if (!q) throw InputError(std::string("point kind does not match space kind (expected ") + what + ")");
  return *q;
}

}  // namespace space_detail

inline void validate_point(const NpcSpace& space, const SpacePoint& p) {
  using space_detail::expect;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Euclidean>) {
          const auto& e = expect<EuclideanPoint>(p, "euclidean");
          require(static_cast<int>(e.x.size()) == s.dim, "euclidean point has wrong dimension");
          for (double v : e.x) require(std::isfinite(v), "euclidean point must be finite");
        } else if constexpr (std::is_same_v<S, HyperbolicPlane>) {
          const auto& h = expect<HyperboloidPoint>(p, "hyperboloid");
          for (double v : h.x) require(std::isfinite(v), "hyperboloid point must be finite");
          require(h.x[0] > 0.0, "hyperboloid point must lie on the upper sheet");
          require(std::abs(-minkowski(h.x, h.x) - 1.0) <= 1e-9 * h.x[0] * h.x[0],
                  "hyperboloid point violates x0^2 - x1^2 - x2^2 = 1");
        } else if constexpr (std::is_same_v<S, StarTree>) {
          const auto& t = expect<TreePoint>(p, "tree");
          if (t.branch == 0) {
            require(t.t == 0.0, "tree center must have arc length 0");
          } else {
            require(t.branch >= 1 && t.branch <= s.branch_count(), "tree point: branch index out of range");
            require(t.t > 0.0 && t.t <= s.branch_lengths[static_cast<std::size_t>(t.branch - 1)] * (1 + 1e-12),
                    "tree point: arc length must be in (0, branch length]; the center uses branch 0");
          }
        } else if constexpr (std::is_same_v<S, CuspFactor>) {
          validate(expect<CuspPoint>(p, "cusp"));
        } else {
          const auto& pp = expect<ProductPoint>(p, "product");
          require(pp.factors.size() == s.factors.size(), "product point has wrong number of factors");
          for (std::size_t i = 0; i < pp.factors.size(); ++i) validate_point(s.factors[i], pp.factors[i]);
        }
      },
      space.kind);
}

// ---------------------------------------------------------------------------
// Distance

namespace space_detail {

// x0 - e.x for a unit spatial direction e, as a sum of nonnegative terms:
// (x0 - |xs|) + |xs| (1 - e.xs/|xs|) = 1 / (x0 + |xs|) + |xs| |e - xs/|xs||^2 / 2.
inline double sheet_gap(const HyperboloidPoint& a, double e1, double e2) {
  const double r = std::hypot(a.x[1], a.x[2]);
  double gap = 1.0 / (a.x[0] + r);
  if (r > 0.0) {
    const double f1 = e1 - a.x[1] / r, f2 = e2 - a.x[2] / r;
    gap += 0.5 * r * (f1 * f1 + f2 * f2);
  }
  return gap;
}

inline double hyperbolic_distance(const HyperboloidPoint& a, const HyperboloidPoint& b) {
  // 2 asinh(|a - b|_L / 2) with |a - b|_L^2 = |D|^2 - (a0 - b0)^2, D the spatial difference.
  // Writing a0 - b0 = D.S / (a0 + b0), S the spatial sum, gives |D|^2 (1 - c)(1 + c) with
  // c = e.S / (a0 + b0), e = D / |D|, and 1 - c assembled from sheet gaps without cancellation,
  // so points far from the origin keep full relative accuracy.
  const double d1 = a.x[1] - b.x[1], d2 = a.x[2] - b.x[2];
  const double dn = std::hypot(d1, d2);
  if (dn == 0.0) return 0.0;
  // (1 - c)(1 + c) is even in c; orient e so that c >= 0 and 1 - c is the small factor.
  const double flip = d1 * (a.x[1] + b.x[1]) + d2 * (a.x[2] + b.x[2]) < 0.0 ? -1.0 : 1.0;
  const double e1 = flip * d1 / dn, e2 = flip * d2 / dn;
  const double sum0 = a.x[0] + b.x[0];
  const double one_minus_c = (sheet_gap(a, e1, e2) + sheet_gap(b, e1, e2)) / sum0;
  const double chord2 = dn * dn * one_minus_c * (2.0 - one_minus_c);
  return 2.0 * std::asinh(0.5 * std::sqrt(std::max(chord2, 0.0)));
}

inline double tree_distance(const TreePoint& a, const TreePoint& b) {
  if (a.branch == b.branch) return std::abs(a.t - b.t);
  return a.t + b.t;
}

}  // namespace space_detail

inline double distance(const NpcSpace& space, const SpacePoint& p, const SpacePoint& q);

namespace space_detail {

inline double distance_unchecked(const NpcSpace& space, const SpacePoint& p, const SpacePoint& q) {
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Euclidean>) {
          const auto& a = std::get<EuclideanPoint>(p.value).x;
          const auto& b = std::get<EuclideanPoint>(q.value).x;
          double acc = 0.0;
          for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
          return std::sqrt(acc);
        } else if constexpr (std::is_same_v<S, HyperbolicPlane>) {
          return hyperbolic_distance(std::get<HyperboloidPoint>(p.value), std::get<HyperboloidPoint>(q.value));
        } else if constexpr (std::is_same_v<S, StarTree>) {
          return tree_distance(std::get<TreePoint>(p.value), std::get<TreePoint>(q.value));
        } else if constexpr (std::is_same_v<S, CuspFactor>) {
          return cusp_distance(std::get<CuspPoint>(p.value), std::get<CuspPoint>(q.value));
        } else {
          const auto& a = std::get<ProductPoint>(p.value).factors;
          const auto& b = std::get<ProductPoint>(q.value).factors;
          double acc = 0.0;
          for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = distance_unchecked(s.factors[i], a[i], b[i]);
            acc += d * d;
          }
          return std::sqrt(acc);
        }
      },
      space.kind);
}

}  // namespace space_detail

/// Length metric of the space. Products combine factor distances in l2.
inline double distance(const NpcSpace& space, const SpacePoint& p, const SpacePoint& q) {
  validate_point(space, p);
  validate_point(space, q);
  return space_detail::distance_unchecked(space, p, q);
}

// ---------------------------------------------------------------------------
// Geodesics

namespace space_detail {

inline HyperboloidPoint renormalize(std::array<double, 3> x) {
  // -<x,x> carries an absolute rounding error of a few eps * x0^2, so it is only used to rescale
  // when that is small relative to it. Far from the origin the inputs (boosts, geodesic
  // combinations) are already on the sheet up to rounding and only x0 is re-derived.
  const double q = -minkowski(x, x);
  if (q > 1e-4 * x[0] * x[0]) {
    const double n = std::sqrt(q);
    for (auto& v : x) v /= n;
  }
  if (x[0] < 0) for (auto& v : x) v = -v;
  // Re-derive x0 from the spatial part so the sheet constraint holds to rounding.
  x[0] = std::sqrt(1.0 + x[1] * x[1] + x[2] * x[2]);
  return HyperboloidPoint{x};
}

inline HyperboloidPoint hyperbolic_geodesic(const HyperboloidPoint& a, const HyperboloidPoint& b, double t) {
  const double d = hyperbolic_distance(a, b);
  std::array<double, 3> x{};
  if (d < 1e-8) {
    for (int i = 0; i < 3; ++i) x[i] = (1 - t) * a.x[i] + t * b.x[i];
  } else {
    const double ca = std::sinh((1 - t) * d) / std::sinh(d), cb = std::sinh(t * d) / std::sinh(d);
    for (int i = 0; i < 3; ++i) x[i] = ca * a.x[i] + cb * b.x[i];
  }
  return renormalize(x);
}

inline TreePoint tree_geodesic(const TreePoint& a, const TreePoint& b, double t) {
  // Signed coordinate along the path: a's branch positive.
  if (a.branch == b.branch) {
    const double s = a.t + t * (b.t - a.t);
    return s == 0.0 ? TreePoint{0, 0.0} : TreePoint{a.branch, s};
  }
  const double s = a.t - t * (a.t + b.t);
  if (s > 0.0) return TreePoint{a.branch, s};
  if (s < 0.0) return TreePoint{b.branch, -s};
  return TreePoint{0, 0.0};
}

inline SpacePoint geodesic_unchecked(const NpcSpace& space, const SpacePoint& p, const SpacePoint& q, double t) {
  return std::visit(
      [&](const auto& s) -> SpacePoint {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Euclidean>) {
          const auto& a = std::get<EuclideanPoint>(p.value).x;
          const auto& b = std::get<EuclideanPoint>(q.value).x;
          std::vector<double> x(a.size());
          for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i] + t * (b[i] - a[i]);
          return euclidean_point(std::move(x));
        } else if constexpr (std::is_same_v<S, HyperbolicPlane>) {
          return SpacePoint{hyperbolic_geodesic(std::get<HyperboloidPoint>(p.value), std::get<HyperboloidPoint>(q.value), t)};
        } else if constexpr (std::is_same_v<S, StarTree>) {
          return SpacePoint{tree_geodesic(std::get<TreePoint>(p.value), std::get<TreePoint>(q.value), t)};
        } else if constexpr (std::is_same_v<S, CuspFactor>) {
          return SpacePoint{CuspGeodesic(std::get<CuspPoint>(p.value), std::get<CuspPoint>(q.value)).at(t)};
        } else {
          const auto& a = std::get<ProductPoint>(p.value).factors;
          const auto& b = std::get<ProductPoint>(q.value).factors;
          std::vector<SpacePoint> out;
          out.reserve(a.size());
          for (std::size_t i = 0; i < a.size(); ++i) out.push_back(geodesic_unchecked(s.factors[i], a[i], b[i], t));
          return product_point(std::move(out));
        }
      },
      space.kind);
}

}  // namespace space_detail

/// Constant-speed geodesic from p (t = 0) to q (t = 1).
inline SpacePoint geodesic_point(const NpcSpace& space, const SpacePoint& p, const SpacePoint& q, double t) {
  require(t >= 0.0 && t <= 1.0, "geodesic parameter must lie in [0, 1]");
  validate_point(space, p);
  validate_point(space, q);
  if (t == 0.0) return p;
  if (t == 1.0) return q;
  return space_detail::geodesic_unchecked(space, p, q, t);
}

inline SpacePoint midpoint(const NpcSpace& space, const SpacePoint& p, const SpacePoint& q) {
  return geodesic_point(space, p, q, 0.5);
}

/// Slack of the CAT(0) midpoint inequality
///   d^2(w, m) <= 1/2 d^2(w, p) + 1/2 d^2(w, q) - 1/4 d^2(p, q),  m = midpoint(p, q).
/// Nonnegative in every NPC space; zero in Euclidean space.
inline double check_npc_quadruple(const NpcSpace& space, const SpacePoint& p, const SpacePoint& q, const SpacePoint& w) {
  const SpacePoint m = midpoint(space, p, q);
  const double dwp = distance(space, w, p), dwq = distance(space, w, q);
  const double dpq = distance(space, p, q), dwm = distance(space, w, m);
  return 0.5 * dwp * dwp + 0.5 * dwq * dwq - 0.25 * dpq * dpq - dwm * dwm;
}

// ---------------------------------------------------------------------------
// Frechet means

namespace space_detail {

inline std::array<double, 3> hyperbolic_log(const HyperboloidPoint& x, const HyperboloidPoint& p) {
  const double d = hyperbolic_distance(x, p);
  const double ip = minkowski(x.x, p.x);
  std::array<double, 3> v{};
  for (int i = 0; i < 3; ++i) v[i] = p.x[i] + ip * x.x[i];
  const double norm = std::sqrt(std::max(minkowski(v, v), 0.0));
  if (norm == 0.0) return {0.0, 0.0, 0.0};
  for (auto& c : v) c *= d / norm;
  return v;
}

inline HyperboloidPoint hyperbolic_exp(const HyperboloidPoint& x, const std::array<double, 3>& v) {
  const double n = std::sqrt(std::max(minkowski(v, v), 0.0));
  if (n == 0.0) return x;
  std::array<double, 3> y{};
  for (int i = 0; i < 3; ++i) y[i] = std::cosh(n) * x.x[i] + std::sinh(n) / n * v[i];
  return renormalize(y);
}

// Minkowski-orthonormal basis of the tangent plane at x.
inline std::array<std::array<double, 3>, 2> tangent_basis(const HyperboloidPoint& x) {
  std::array<std::array<double, 3>, 2> e{};
  std::array<std::array<double, 3>, 2> seeds{{{0, 1, 0}, {0, 0, 1}}};
  for (int k = 0; k < 2; ++k) {
    auto v = seeds[static_cast<std::size_t>(k)];
    const double ip = minkowski(v, x.x);
    for (int i = 0; i < 3; ++i) v[i] += ip * x.x[i];
    for (int j = 0; j < k; ++j) {
      const double c = minkowski(v, e[static_cast<std::size_t>(j)]);
      for (int i = 0; i < 3; ++i) v[i] -= c * e[static_cast<std::size_t>(j)][i];
    }
    const double n = std::sqrt(minkowski(v, v));
    for (auto& c : v) c /= n;
    e[static_cast<std::size_t>(k)] = v;
  }
  return e;
}

inline double hyperbolic_objective(const HyperboloidPoint& x, std::span<const HyperboloidPoint> pts, std::span<const double> w) {
  double f = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = hyperbolic_distance(x, pts[i]);
    f += w[i] * d * d;
  }
  return f;
}

// Newton's method in the tangent plane using the closed-form Hessian of d^2 / 2
// (radial eigenvalue 1, transverse d coth d).
inline HyperboloidPoint hyperbolic_mean(std::span<const HyperboloidPoint> pts, std::span<const double> w,
                                        const HyperboloidPoint& start) {
  HyperboloidPoint x = start;
  double fx = hyperbolic_objective(x, pts, w);
  for (int iter = 0; iter < 100; ++iter) {
    const auto basis = tangent_basis(x);
    std::array<double, 2> g{0.0, 0.0};
    std::array<double, 4> h{0.0, 0.0, 0.0, 0.0};
    double scale = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (w[i] == 0.0) continue;
      const auto v = hyperbolic_log(x, pts[i]);
      const double d = std::sqrt(std::max(minkowski(v, v), 0.0));
      scale = std::max(scale, d);
      const double c0 = minkowski(v, basis[0]), c1 = minkowski(v, basis[1]);
      g[0] -= w[i] * c0;
      g[1] -= w[i] * c1;
      const double transverse = d < 1e-6 ? 1.0 + d * d / 3.0 : d / std::tanh(d);
      double r0 = 0.0, r1 = 0.0;
      if (d > 0.0) {
        r0 = c0 / d;
        r1 = c1 / d;
      }
      h[0] += w[i] * (transverse + (1.0 - transverse) * r0 * r0);
      h[1] += w[i] * ((1.0 - transverse) * r0 * r1);
      h[3] += w[i] * (transverse + (1.0 - transverse) * r1 * r1);
    }
    h[2] = h[1];
    const double det = h[0] * h[3] - h[1] * h[2];
    const double s0 = -(h[3] * g[0] - h[1] * g[1]) / det;
    const double s1 = -(-h[2] * g[0] + h[0] * g[1]) / det;
    double alpha = 1.0;
    HyperboloidPoint next = x;
    double fn = fx;
    bool accepted = false;
    for (int k = 0; k < 50; ++k) {
      std::array<double, 3> v{};
      for (int i = 0; i < 3; ++i) v[i] = alpha * (s0 * basis[0][i] + s1 * basis[1][i]);
      next = hyperbolic_exp(x, v);
      fn = hyperbolic_objective(next, pts, w);
      if (fn <= fx) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    const double step = alpha * std::hypot(s0, s1);
    x = next;
    fx = fn;
    if (step <= 1e-15 * std::max(scale, 1e-300) || step == 0.0) break;
  }
  return x;
}

inline TreePoint tree_mean(const StarTree& tree, std::span<const TreePoint> pts, std::span<const double> w, double total) {
  for (int k = 1; k <= tree.branch_count(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) acc += w[i] * (pts[i].branch == k ? pts[i].t : -pts[i].t);
    const double x = acc / total;
    if (x > 0.0) return TreePoint{k, std::min(x, tree.branch_lengths[static_cast<std::size_t>(k - 1)])};
  }
  return TreePoint{0, 0.0};
}

inline SpacePoint frechet_unchecked(const NpcSpace& space, std::span<const SpacePoint> pts, std::span<const double> w,
                                    double total, const SpacePoint* warm) {
  return std::visit(
      [&](const auto& s) -> SpacePoint {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Euclidean>) {
          std::vector<double> x(static_cast<std::size_t>(s.dim), 0.0);
          for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto& p = std::get<EuclideanPoint>(pts[i].value).x;
            for (std::size_t k = 0; k < x.size(); ++k) x[k] += w[i] * p[k];
          }
          for (auto& v : x) v /= total;
          return euclidean_point(std::move(x));
        } else if constexpr (std::is_same_v<S, HyperbolicPlane>) {
          std::vector<HyperboloidPoint> hp;
          hp.reserve(pts.size());
          for (const auto& p : pts) hp.push_back(std::get<HyperboloidPoint>(p.value));
          HyperboloidPoint start;
          if (warm) {
            start = std::get<HyperboloidPoint>(warm->value);
          } else {
            std::array<double, 3> acc{};
            for (std::size_t i = 0; i < hp.size(); ++i)
              for (int k = 0; k < 3; ++k) acc[k] += w[i] * hp[i].x[k];
            start = renormalize(acc);
          }
          return SpacePoint{hyperbolic_mean(hp, w, start)};
        } else if constexpr (std::is_same_v<S, StarTree>) {
          std::vector<TreePoint> tp;
          tp.reserve(pts.size());
          for (const auto& p : pts) tp.push_back(std::get<TreePoint>(p.value));
          return SpacePoint{tree_mean(s, tp, w, total)};
        } else if constexpr (std::is_same_v<S, CuspFactor>) {
          std::vector<CuspPoint> cp;
          cp.reserve(pts.size());
          for (const auto& p : pts) cp.push_back(std::get<CuspPoint>(p.value));
          const CuspPoint* ws = warm ? &std::get<CuspPoint>(warm->value) : nullptr;
          return SpacePoint{cusp_frechet_mean(cp, w, ws)};
        } else {
          std::vector<SpacePoint> out;
          out.reserve(s.factors.size());
          std::vector<SpacePoint> column(pts.size());
          for (std::size_t f = 0; f < s.factors.size(); ++f) {
            for (std::size_t i = 0; i < pts.size(); ++i) column[i] = std::get<ProductPoint>(pts[i].value).factors[f];
            const SpacePoint* wf = warm ? &std::get<ProductPoint>(warm->value).factors[f] : nullptr;
            out.push_back(frechet_unchecked(s.factors[f], column, w, total, wf));
          }
          return product_point(std::move(out));
        }
      },
      space.kind);
}

}  // namespace space_detail

/// Minimizer of sum_i w_i d^2(x, p_i). Closed form in Euclidean space and on star trees,
/// Newton iterations on the hyperboloid and in cusp charts, factorwise on products.
/// `warm_start`, when given, seeds the iterative kinds.
inline SpacePoint frechet_mean(const NpcSpace& space, std::span<const SpacePoint> points, std::span<const double> weights,
                               const SpacePoint* warm_start = nullptr) {
  require(points.size() == weights.size(), "frechet mean: points and weights differ in length");
  require(!points.empty(), "frechet mean: no points");
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    validate_point(space, points[i]);
    require(std::isfinite(weights[i]) && weights[i] >= 0.0, "frechet mean: weights must be finite and >= 0");
    total += weights[i];
  }
  require(total > 0.0, "frechet mean: at least one weight must be positive");
  if (warm_start) validate_point(space, *warm_start);
  return space_detail::frechet_unchecked(space, points, weights, total, warm_start);
}

inline double frechet_objective(const NpcSpace& space, std::span<const SpacePoint> points, std::span<const double> weights,
                                const SpacePoint& x) {
  double f = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = distance(space, x, points[i]);
    f += weights[i] * d * d;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Basepoints, sampling, introspection

inline SpacePoint basepoint(const NpcSpace& space) {
  return std::visit(
      [&](const auto& s) -> SpacePoint {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Euclidean>) {
          return euclidean_point(std::vector<double>(static_cast<std::size_t>(s.dim), 0.0));
        } else if constexpr (std::is_same_v<S, HyperbolicPlane>) {
          return SpacePoint{HyperboloidPoint{}};
        } else if constexpr (std::is_same_v<S, StarTree>) {
          return SpacePoint{TreePoint{}};
        } else if constexpr (std::is_same_v<S, CuspFactor>) {
          return cusp_point(1.0, 0.0);
        } else {
          std::vector<SpacePoint> out;
          for (const auto& f : s.factors) out.push_back(basepoint(f));
          return product_point(std::move(out));
        }
      },
      space.kind);
}

/// Random point at roughly unit-to-`scale` distance from the basepoint. Cusp factors put
/// about one sample in twenty at the pinched point.
template <class Rng>
SpacePoint sample_point(const NpcSpace& space, Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return std::visit(
      [&](const auto& s) -> SpacePoint {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Euclidean>) {
          std::vector<double> x(static_cast<std::size_t>(s.dim));
          for (auto& v : x) v = scale * (2.0 * unit(rng) - 1.0);
          return euclidean_point(std::move(x));
        } else if constexpr (std::is_same_v<S, HyperbolicPlane>) {
          // Hyperboloid coordinates fix a point only to about eps * e^r, so stay within r = 30.
          const double r = std::min(scale, 30.0) * unit(rng);
          const double a = 2.0 * std::numbers::pi * unit(rng);
          return hyperbolic_polar(r, a);
        } else if constexpr (std::is_same_v<S, StarTree>) {
          if (unit(rng) < 0.05) return SpacePoint{TreePoint{}};
          const int b = 1 + static_cast<int>(unit(rng) * s.branch_count()) % s.branch_count();
          const double len = s.branch_lengths[static_cast<std::size_t>(b - 1)];
          const double t = std::min(len, scale) * (1.0 - unit(rng));
          return tree_point(b, t);
        } else if constexpr (std::is_same_v<S, CuspFactor>) {
          if (unit(rng) < 0.05) return pinned_point();
          const double u = scale * (0.05 + 1.45 * unit(rng));
          const double th = 2.0 * scale * (2.0 * unit(rng) - 1.0);
          return cusp_point(u, th);
        } else {
          std::vector<SpacePoint> out;
          for (const auto& f : s.factors) out.push_back(sample_point(f, rng, scale));
          return product_point(std::move(out));
        }
      },
      space.kind);
}

/// Cusp-factor coordinates of a point, in the depth-first order of the space's cusp factors.
inline void collect_cusp_points(const NpcSpace& space, const SpacePoint& p, std::vector<CuspPoint>& out) {
  if (std::holds_alternative<CuspFactor>(space.kind)) {
    out.push_back(std::get<CuspPoint>(p.value));
  } else if (const auto* prod = std::get_if<Product>(&space.kind)) {
    const auto& pp = std::get<ProductPoint>(p.value);
    for (std::size_t i = 0; i < prod->factors.size(); ++i) collect_cusp_points(prod->factors[i], pp.factors[i], out);
  }
}

inline int count_cusp_factors(const NpcSpace& space) {
  if (std::holds_alternative<CuspFactor>(space.kind)) return 1;
  if (const auto* prod = std::get_if<Product>(&space.kind)) {
    int n = 0;
    for (const auto& f : prod->factors) n += count_cusp_factors(f);
    return n;
  }
  return 0;
}

}  // namespace harmlab
