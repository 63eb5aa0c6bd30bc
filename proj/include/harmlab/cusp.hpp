#pragma once

// Geometry of one cusp factor: the completion of the half-plane u > 0 with the
// warped metric du^2 + f(u)^2 dtheta^2, f(u) = u^3 / 2, where the whole line
// u = 0 is a single point (the pinched point). Curvature is -6 / u^2.
//
// Geodesics are found from the Clairaut first integral f(u)^2 theta' = c.
// Writing c = f(r) for the turning radius r and substituting u = r + w^2
// removes the square-root singularity at the turning point, so every arc
// reduces to smooth quadratures in w:
//
//   dtheta/dw = 4 r^3 / (u^3 sqrt(P)),   ds/dw = 2 u^3 / sqrt(P),
//   P(u, r)   = (u^6 - r^6) / (u - r).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "harmlab/errors.hpp"

namespace harmlab {

/// A point of one cusp factor. `theta` is empty exactly when the point is pinched (u == 0).
struct CuspPoint {
  double u = 0.0;
  std::optional<double> theta;

  bool pinned() const { return !theta.has_value(); }
  friend bool operator==(const CuspPoint&, const CuspPoint&) = default;
};

inline CuspPoint make_cusp_point(double u, double theta) {
  require(std::isfinite(u) && u >= 0.0, "cusp point: u must be finite and >= 0");
  require(std::isfinite(theta), "cusp point: theta must be finite");
  if (u == 0.0) return CuspPoint{0.0, std::nullopt};
  return CuspPoint{u, theta};
}

inline CuspPoint pinned_cusp_point() { return CuspPoint{0.0, std::nullopt}; }

inline void validate(const CuspPoint& p) {
  require(std::isfinite(p.u) && p.u >= 0.0, "cusp point: u must be finite and >= 0");
  require((p.u == 0.0) == p.pinned(), "cusp point: theta must be absent exactly when u == 0");
  if (p.theta) require(std::isfinite(*p.theta), "cusp point: theta must be finite");
}

namespace cusp_detail {

inline double warp(double u) { return 0.5 * u * u * u; }

// (u^6 - r^6) / (u - r)
inline double p_poly(double u, double r) {
  const double r2 = r * r, r3 = r2 * r, r4 = r3 * r, r5 = r4 * r;
  return ((((u + r) * u + r2) * u + r3) * u + r4) * u + r5;
}

struct Leg {
  double theta = 0.0;
  double length = 0.0;
};

// Twist travel and arc length of the Clairaut arc with turning radius r between
// u = r + wa^2 and u = r + wb^2. The w endpoints are passed directly so that arcs hugging
// the turning point keep full relative precision.
inline Leg leg_w(double r, double wa, double wb) {
  if (wb <= wa) return {};
  if (r <= 0.0) return {0.0, wb * wb - wa * wa};
  const double s = std::sqrt(r);

  using Gauss = boost::math::quadrature::gauss<double, 16>;
  const auto& xs = Gauss::abscissa();
  const auto& ws = Gauss::weights();

  Leg out;
  auto panel = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double th = 0.0, len = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      for (double sgn : {-1.0, 1.0}) {
        const double w = mid + sgn * half * xs[k];
        const double u = r + w * w;
        const double root = std::sqrt(p_poly(u, r));
        const double u3 = u * u * u;
        th += ws[k] * (4.0 * r * r * r / (u3 * root));
        len += ws[k] * (2.0 * u3 / root);
      }
    }
    out.theta += half * th;
    out.length += half * len;
  };

  // Panels break at s * 2^k so each spans at most a factor of two in w beyond the turning scale.
  double lo = wa;
  double edge = s;
  while (edge <= lo) edge *= 2.0;
  while (lo < wb) {
    const double hi = std::min(edge, wb);
    panel(lo, hi);
    lo = hi;
    edge *= 2.0;
  }
  return out;
}

// The same arc between u = a and u = b, r <= a <= b.
inline Leg leg(double r, double a, double b) {
  if (b <= a) return {};
  return leg_w(r, std::sqrt(std::max(a - r, 0.0)), std::sqrt(std::max(b - r, 0.0)));
}

inline double solve_increasing(auto&& g, double lo, double hi) {
  std::uintmax_t iters = 200;
  auto tol = [](double x, double y) {
    return std::abs(x - y) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(x), std::abs(y));
  };
  double glo = g(lo), ghi = g(hi);
  if (glo >= 0.0) return lo;
  if (ghi <= 0.0) return hi;
  auto [x0, x1] = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
  return 0.5 * (x0 + x1);
}

}  // namespace cusp_detail

/// Minimizing geodesic between two points of a cusp factor, parametrized on [0, 1] at constant speed.
class CuspGeodesic {
 public:
  enum class Kind { Constant, Radial, Monotone, Turning };

  CuspGeodesic(const CuspPoint& from, const CuspPoint& to) : from_(from), to_(to) { solve(); }

  Kind kind() const { return kind_; }
  double length() const { return length_; }
  /// Clairaut turning radius; zero for radial and constant geodesics.
  double turning_radius() const { return r_; }
  const CuspPoint& from() const { return from_; }
  const CuspPoint& to() const { return to_; }

  /// Covector (p_u, p_theta) of the unit initial velocity at `from`. The gradient of the
  /// distance with respect to the start point is its negative.
  std::pair<double, double> initial_momentum() const {
    switch (kind_) {
      case Kind::Constant: return {0.0, 0.0};
      case Kind::Radial: return {to_.u >= from_.u ? 1.0 : -1.0, 0.0};
      case Kind::Monotone:
      case Kind::Turning: {
        // 1 - (r/u)^6 = (u - r) P(u, r) / u^6, free of cancellation near the turning point.
        const double u = from_.u;
        double du = std::sqrt(gap(u) * cusp_detail::p_poly(u, r_)) / (u * u * u);
        if (kind_ == Kind::Turning || to_.u < from_.u) du = -du;
        return {du, sign_ * cusp_detail::warp(r_)};
      }
    }
    return {0.0, 0.0};
  }

  CuspPoint at(double t) const {
    require(t >= 0.0 && t <= 1.0, "geodesic parameter must lie in [0, 1]");
    if (t == 0.0) return from_;
    if (t == 1.0) return to_;
    const double s = t * length_;
    switch (kind_) {
      case Kind::Constant: return from_;
      case Kind::Radial: {
        const double u = from_.u + t * (to_.u - from_.u);
        const double th = from_.pinned() ? *to_.theta : *from_.theta;
        if (u <= 0.0) return pinned_cusp_point();
        return CuspPoint{u, th};
      }
      case Kind::Monotone: {
        const double wf = std::sqrt(gap(from_.u)), wt = std::sqrt(gap(to_.u));
        if (from_.u <= to_.u) return ascend(wf, wt, s, *from_.theta);
        return descend(wt, wf, s, *from_.theta);
      }
      case Kind::Turning: {
        if (s <= first_leg_length_) return descend(0.0, std::sqrt(gap(from_.u)), s, *from_.theta);
        return ascend(0.0, std::sqrt(gap(to_.u)), s - first_leg_length_, *from_.theta + sign_ * first_leg_theta_);
      }
    }
    return from_;
  }

 private:
  void solve() {
    validate(from_);
    validate(to_);
    if (from_ == to_ || (from_.pinned() && to_.pinned())) {
      kind_ = Kind::Constant;
      return;
    }
    if (from_.pinned() || to_.pinned() || *from_.theta == *to_.theta) {
      kind_ = Kind::Radial;
      length_ = std::abs(to_.u - from_.u);
      return;
    }
    using cusp_detail::leg_w;
    const double delta = std::abs(*to_.theta - *from_.theta);
    sign_ = *to_.theta > *from_.theta ? 1.0 : -1.0;
    base_ = std::min(from_.u, to_.u);
    const double a = base_, b = std::max(from_.u, to_.u);

    // Both branches are solved for the dip a - r rather than for r itself.
    const double mono_max = leg_w(a, 0.0, std::sqrt(b - a)).theta;
    if (delta <= mono_max) {
      kind_ = Kind::Monotone;
      // x = sqrt(a - r); the travel falls roughly linearly in x near x = 0.
      auto travel = [&](double x) {
        dip_ = x * x;
        return leg_w(a - dip_, x, std::sqrt(gap(b))).theta;
      };
      auto g = [&](double x) { return delta - travel(x); };
      const double x = cusp_detail::solve_increasing(g, 0.0, std::sqrt(a));
      dip_ = std::min(x * x, a);
      r_ = a - dip_;
      length_ = leg_w(r_, std::sqrt(dip_), std::sqrt(gap(b))).length;
      return;
    }
    kind_ = Kind::Turning;
    auto travel = [&](double dip) {
      dip_ = dip;
      const double r = a - dip;
      return leg_w(r, 0.0, std::sqrt(dip)).theta + leg_w(r, 0.0, std::sqrt(gap(b))).theta;
    };
    double hi = 0.5 * a;
    while (travel(hi) <= delta && hi < a) hi = a - 0.5 * (a - hi);
    const double lo = std::max(a * 1e-280, std::numeric_limits<double>::min());
    // Travel increases with the dip; solve in log(dip).
    auto g = [&](double x) { return travel(std::exp(x)) - delta; };
    dip_ = std::min(std::exp(cusp_detail::solve_increasing(g, std::log(lo), std::log(hi))), a);
    r_ = a - dip_;
    const auto first = leg_w(r_, 0.0, std::sqrt(gap(from_.u)));
    const auto second = leg_w(r_, 0.0, std::sqrt(gap(to_.u)));
    first_leg_length_ = first.length;
    first_leg_theta_ = first.theta;
    length_ = first.length + second.length;
  }

  // u - r computed from the stored dip.
  double gap(double u) const { return (u - base_) + dip_; }

  // Point at arc length s along the arc climbing from w0 towards w1 (u = r + w^2).
  CuspPoint ascend(double w0, double w1, double s, double theta0) const {
    using cusp_detail::leg_w;
    auto g = [&](double w) { return leg_w(r_, w0, w).length - s; };
    const double w = cusp_detail::solve_increasing(g, w0, w1);
    return CuspPoint{r_ + w * w, theta0 + sign_ * leg_w(r_, w0, w).theta};
  }

  // Point at arc length s along the arc descending from w1 towards w0.
  CuspPoint descend(double w0, double w1, double s, double theta0) const {
    using cusp_detail::leg_w;
    // Arc length from w to w1 decreases in w, so negate to get an increasing function.
    auto g = [&](double w) { return s - leg_w(r_, w, w1).length; };
    const double w = cusp_detail::solve_increasing(g, w0, w1);
    return CuspPoint{r_ + w * w, theta0 + sign_ * leg_w(r_, w, w1).theta};
  }

  CuspPoint from_, to_;
  Kind kind_ = Kind::Constant;
  double r_ = 0.0;
  double base_ = 0.0;
  double dip_ = 0.0;
  double sign_ = 1.0;
  double length_ = 0.0;
  double first_leg_length_ = 0.0;
  double first_leg_theta_ = 0.0;
};

inline double cusp_distance(const CuspPoint& p, const CuspPoint& q) { return CuspGeodesic(p, q).length(); }

inline CuspPoint cusp_geodesic_point(const CuspPoint& p, const CuspPoint& q, double t) {
  require(t >= 0.0 && t <= 1.0, "geodesic parameter must lie in [0, 1]");
  return CuspGeodesic(p, q).at(t);
}

namespace cusp_detail {

struct Objective {
  double value = 0.0;
  std::array<double, 2> grad{0.0, 0.0};
  double scale = 0.0;
};

inline Objective evaluate(double u, double theta, std::span<const CuspPoint> pts, std::span<const double> wts) {
  Objective out;
  const CuspPoint x{u, theta};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (wts[i] == 0.0) continue;
    const CuspGeodesic g(x, pts[i]);
    const double d = g.length();
    const auto [pu, pt] = g.initial_momentum();
    out.value += wts[i] * d * d;
    out.grad[0] -= 2.0 * wts[i] * d * pu;
    out.grad[1] -= 2.0 * wts[i] * d * pt;
    out.scale = std::max(out.scale, d);
  }
  return out;
}

}  // namespace cusp_detail

/// Weighted Frechet mean in a cusp factor. Two-point means are read off the geodesic;
/// otherwise a damped Newton iteration runs in the chart (the mean is never the pinched
/// point unless every weighted point is pinched).
inline CuspPoint cusp_frechet_mean(std::span<const CuspPoint> pts, std::span<const double> wts,
                                   const CuspPoint* warm_start = nullptr) {
  require(pts.size() == wts.size(), "frechet mean: points and weights differ in length");
  std::vector<std::size_t> active;
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    require(wts[i] >= 0.0 && std::isfinite(wts[i]), "frechet mean: weights must be finite and >= 0");
    validate(pts[i]);
    if (wts[i] > 0.0) {
      active.push_back(i);
      total += wts[i];
    }
  }
  require(total > 0.0, "frechet mean: at least one weight must be positive");
  if (std::all_of(active.begin(), active.end(), [&](std::size_t i) { return pts[i].pinned(); }))
    return pinned_cusp_point();
  if (std::all_of(active.begin(), active.end(), [&](std::size_t i) { return pts[i] == pts[active[0]]; }))
    return pts[active[0]];
  if (active.size() == 2) {
    const auto i = active[0], j = active[1];
    return cusp_geodesic_point(pts[i], pts[j], wts[j] / (wts[i] + wts[j]));
  }

  double u = 0.0, th = 0.0, wth = 0.0;
  for (auto i : active) {
    u += wts[i] * pts[i].u;
    if (!pts[i].pinned()) {
      th += wts[i] * *pts[i].theta;
      wth += wts[i];
    }
  }
  u /= total;
  th /= wth;
  if (warm_start && !warm_start->pinned()) {
    u = warm_start->u;
    th = *warm_start->theta;
  }

  using cusp_detail::evaluate;
  auto cur = evaluate(u, th, pts, wts);
  std::array<double, 4> hess{};
  bool have_hessian = false;
  for (int iter = 0; iter < 60; ++iter) {
    const double f = cusp_detail::warp(u);
    if (!have_hessian) {
      const double hu = 1e-6 * u;
      const double ht = 1e-6 * u / f;
      const auto eu = evaluate(u + hu, th, pts, wts);
      const auto et = evaluate(u, th + ht, pts, wts);
      const double huu = (eu.grad[0] - cur.grad[0]) / hu;
      const double htt = (et.grad[1] - cur.grad[1]) / ht;
      const double hut = 0.5 * ((eu.grad[1] - cur.grad[1]) / hu + (et.grad[0] - cur.grad[0]) / ht);
      hess = {huu, hut, hut, htt};
      have_hessian = true;
    }
    double su, st;
    const double det = hess[0] * hess[3] - hess[1] * hess[2];
    bool newton = hess[0] > 0.0 && det > 0.0;
    if (newton) {
      su = -(hess[3] * cur.grad[0] - hess[1] * cur.grad[1]) / det;
      st = -(-hess[2] * cur.grad[0] + hess[0] * cur.grad[1]) / det;
      if (su * cur.grad[0] + st * cur.grad[1] >= 0.0) newton = false;
    }
    if (!newton) {
      su = -cur.grad[0] / (2.0 * total);
      st = -cur.grad[1] / (2.0 * total * f * f);
    }
    const double slope = su * cur.grad[0] + st * cur.grad[1];
    double alpha = 1.0;
    while (u + alpha * su <= 0.25 * u) alpha *= 0.5;
    bool accepted = false;
    cusp_detail::Objective next;
    for (int k = 0; k < 50; ++k) {
      next = evaluate(u + alpha * su, th + alpha * st, pts, wts);
      if (next.value <= cur.value + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    const double step = alpha * std::hypot(su, f * st);
    u += alpha * su;
    th += alpha * st;
    const bool was_full = alpha == 1.0 && newton;
    cur = next;
    if (step <= 1e-14 * std::max(cur.scale, 1e-300)) break;
    // Keep the Hessian while full Newton steps are accepted; the iteration then contracts fast.
    have_hessian = was_full && step < 1e-4 * cur.scale;
  }
  return CuspPoint{u, th};
}

}  // namespace harmlab
