#pragma once

// Stratified model of the completed Teichmüller target: one cusp factor per
// curve of a pants decomposition, the chart metric tensor and its Christoffel
// symbols, twist isometries, the displacement functional and stratum bookkeeping.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "harmlab/cusp.hpp"
#include "harmlab/errors.hpp"
#include "harmlab/isometry.hpp"
#include "harmlab/space.hpp"

namespace harmlab {

/// A set of pinched curves, indices in 1..3g-3. Empty means the interior stratum.
class CurveSystem {
 public:
  CurveSystem() = default;
  CurveSystem(int genus, std::vector<int> pinched) : genus_(genus), pinched_(std::move(pinched)) {
    require(genus_ >= 2, "genus must be >= 2");
    std::sort(pinched_.begin(), pinched_.end());
    require(std::adjacent_find(pinched_.begin(), pinched_.end()) == pinched_.end(), "curve system: repeated index");
    for (int i : pinched_) require(i >= 1 && i <= curve_count(genus_), "curve system: index out of range");
  }

  int genus() const { return genus_; }
  const std::vector<int>& pinched() const { return pinched_; }
  bool interior() const { return pinched_.empty(); }
  /// All 3g-3 curves pinched: the stratum is a single point.
  bool maximal() const { return static_cast<int>(pinched_.size()) == curve_count(genus_); }
  bool contains(int curve) const { return std::binary_search(pinched_.begin(), pinched_.end(), curve); }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < pinched_.size(); ++i) s += (i ? "," : "") + std::to_string(pinched_[i]);
    return s + "}";
  }

  friend bool operator==(const CurveSystem&, const CurveSystem&) = default;

 private:
  int genus_ = 2;
  std::vector<int> pinched_;
};

/// Per-curve (u_i, theta_i) coordinates; factor i - 1 holds curve i.
struct StratifiedPoint {
  std::vector<CuspPoint> factors;

  int genus() const { return (static_cast<int>(factors.size()) + 3) / 3; }
  friend bool operator==(const StratifiedPoint&, const StratifiedPoint&) = default;
};

inline void validate(const StratifiedPoint& p) {
  const int n = static_cast<int>(p.factors.size());
  require(n >= 3 && n % 3 == 0, "stratified point: factor count must be 3g - 3 with g >= 2");
  for (const auto& f : p.factors) validate(f);
}

inline StratifiedPoint stratified_point(const std::vector<double>& u, const std::vector<double>& theta) {
  require(u.size() == theta.size(), "stratified point: u and theta differ in length");
  StratifiedPoint p;
  for (std::size_t i = 0; i < u.size(); ++i) p.factors.push_back(make_cusp_point(u[i], theta[i]));
  validate(p);
  return p;
}

inline SpacePoint to_space_point(const StratifiedPoint& p) {
  std::vector<SpacePoint> out;
  out.reserve(p.factors.size());
  for (const auto& f : p.factors) out.push_back(SpacePoint{f});
  return product_point(std::move(out));
}

inline StratifiedPoint to_stratified_point(const SpacePoint& p) {
  const auto* pp = std::get_if<ProductPoint>(&p.value);
  require(pp != nullptr, "expected a point of the model space");
  StratifiedPoint out;
  for (const auto& f : pp->factors) {
    const auto* c = std::get_if<CuspPoint>(&f.value);
    require(c != nullptr, "expected a point of the model space");
    out.factors.push_back(*c);
  }
  validate(out);
  return out;
}

// ---------------------------------------------------------------------------
// Chart metric

/// Representative of the degenerating metric: per factor G_uu = 1 + eps u^4, G_utheta = 0,
/// G_thetatheta = (1 + eps u^4) u^6 / 4, factors orthogonal. eps = 0 is the leading-order form.
struct ModelMetric {
  int genus = 2;
  double epsilon = 0.0;

  static ModelMetric leading_order(int genus) { return {genus, 0.0}; }
  static ModelMetric perturbed(int genus, double eps) { return {genus, eps}; }
  bool is_leading_order() const { return epsilon == 0.0; }
  int dimension() const { return 2 * curve_count(genus); }
};

namespace wp_detail {

inline void require_chart(const ModelMetric& metric, const StratifiedPoint& p) {
  validate(p);
  require(p.genus() == metric.genus, "point genus does not match metric genus");
  for (std::size_t i = 0; i < p.factors.size(); ++i)
    if (!(p.factors[i].u > 0.0))
      throw ChartDegenerateError("chart operation at u_" + std::to_string(i + 1) + " = 0 (pinched coordinate)");
}

// Factor entries and their u-derivatives.
struct FactorJet {
  double guu, gtt;      // values
  double duu, dtt;      // first derivatives in u
};

inline FactorJet factor_jet(double eps, double u) {
  const double u3 = u * u * u, u4 = u3 * u, u5 = u4 * u, u6 = u5 * u;
  const double a = 1.0 + eps * u4;
  return {a, a * u6 / 4.0, 4.0 * eps * u3, (a * 6.0 * u5 + 4.0 * eps * u3 * u6) / 4.0};
}

}  // namespace wp_detail

/// Metric tensor in coordinates (u_1, theta_1, u_2, theta_2, ...).
inline Eigen::MatrixXd metric_tensor(const ModelMetric& metric, const StratifiedPoint& p) {
  wp_detail::require_chart(metric, p);
  const int n = metric.dimension();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n / 2; ++i) {
    const auto jet = wp_detail::factor_jet(metric.epsilon, p.factors[static_cast<std::size_t>(i)].u);
    g(2 * i, 2 * i) = jet.guu;
    g(2 * i + 1, 2 * i + 1) = jet.gtt;
  }
  return g;
}

/// Christoffel symbols of the second kind, Gamma^k_{ij}, stored densely.
class Christoffel {
 public:
  explicit Christoffel(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}
  int dimension() const { return n_; }
  double operator()(int k, int i, int j) const { return data_[index(k, i, j)]; }
  double& operator()(int k, int i, int j) { return data_[index(k, i, j)]; }

 private:
  std::size_t index(int k, int i, int j) const { return static_cast<std::size_t>((k * n_ + i) * n_ + j); }
  int n_;
  std::vector<double> data_;
};

/// Gamma^k_{ij} = 1/2 G^{kl} (d_j G_il + d_i G_lj - d_l G_ij) from analytic derivatives of the metric.
inline Christoffel christoffel(const ModelMetric& metric, const StratifiedPoint& p) {
  wp_detail::require_chart(metric, p);
  const int n = metric.dimension();
  // dG[l](i, j) = d_l G_ij; only u-derivatives of the factor diagonal are nonzero.
  std::vector<Eigen::MatrixXd> dG(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  for (int f = 0; f < n / 2; ++f) {
    const auto jet = wp_detail::factor_jet(metric.epsilon, p.factors[static_cast<std::size_t>(f)].u);
    dG[static_cast<std::size_t>(2 * f)](2 * f, 2 * f) = jet.duu;
    dG[static_cast<std::size_t>(2 * f)](2 * f + 1, 2 * f + 1) = jet.dtt;
  }
  const Eigen::MatrixXd ginv = metric_tensor(metric, p).inverse();
  Christoffel out(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l) {
          if (ginv(k, l) == 0.0) continue;
          acc += ginv(k, l) * (dG[static_cast<std::size_t>(j)](i, l) + dG[static_cast<std::size_t>(i)](l, j) -
                               dG[static_cast<std::size_t>(l)](i, j));
        }
        out(k, i, j) = 0.5 * acc;
      }
  return out;
}

/// Gauss curvature of one factor, K = -(1 / sqrt(AB)) d/du( (sqrt B)' / sqrt A ) for A du^2 + B dtheta^2.
/// Leading order: K(u) = -6 / u^2.
inline double gauss_curvature_factor(const ModelMetric& metric, double u) {
  require(std::isfinite(u) && u > 0.0, "gauss curvature: u must be > 0");
  if (metric.is_leading_order()) return -6.0 / (u * u);
  const double e = metric.epsilon;
  const double u3 = u * u * u, u4 = u3 * u, u5 = u4 * u, u6 = u5 * u, u8 = u4 * u4, u9 = u8 * u, u10 = u9 * u;
  const double A = 1.0 + e * u4, dA = 4.0 * e * u3;
  const double B = (u6 + e * u10) / 4.0, dB = (6.0 * u5 + 10.0 * e * u9) / 4.0, ddB = (30.0 * u4 + 90.0 * e * u8) / 4.0;
  const double sab = std::sqrt(A * B);
  // h = (sqrt B)' / sqrt A = B' / (2 sqrt(AB))
  const double dh = (ddB * 2.0 * sab - dB * (dA * B + A * dB) / sab) / (4.0 * A * B);
  return -dh / sab;
}

// ---------------------------------------------------------------------------
// Isometries and displacement

inline StratifiedPoint apply_isometry(const IsometryWord& w, const StratifiedPoint& p) {
  validate(p);
  return to_stratified_point(apply_isometry(model_space(p.genus()), w, to_space_point(p)));
}

inline double model_distance(const StratifiedPoint& p, const StratifiedPoint& q) {
  require(p.factors.size() == q.factors.size(), "stratified points of different genus");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.factors.size(); ++i) {
    const double d = cusp_distance(p.factors[i], q.factors[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// delta(x) = max_i d(x, g_i x).
inline double delta_functional(const NpcSpace& space, const SpacePoint& x, const std::vector<IsometryWord>& generators) {
  require(!generators.empty(), "delta functional: generator list must be nonempty");
  double best = 0.0;
  for (const auto& g : generators) best = std::max(best, distance(space, x, apply_isometry(space, g, x)));
  return best;
}

inline double delta_functional(const StratifiedPoint& x, const std::vector<IsometryWord>& generators) {
  validate(x);
  return delta_functional(model_space(x.genus()), to_space_point(x), generators);
}

struct ProbeReport {
  enum class Verdict { BoundedWithinRadius, Escaped };

  std::vector<double> delta_values;
  Verdict verdict = Verdict::BoundedWithinRadius;
  double search_radius = 0.0;
  double level = 0.0;
  /// Distance from the basepoint of the farthest sampled point with delta < level.
  double farthest_sublevel_distance = 0.0;
  /// Smallest delta seen outside the search radius (infinity if nothing was sampled there).
  double min_delta_outside = std::numeric_limits<double>::infinity();
  std::string note =
      "randomized search of the sublevel set; 'escaped' exhibits a far sublevel point, "
      "'bounded_within_radius' only means none was found";
};

inline const char* to_string(ProbeReport::Verdict v) {
  return v == ProbeReport::Verdict::Escaped ? "escaped" : "bounded_within_radius";
}

/// Heuristic properness test for the action generated by `generators` on `space`. Points are
/// drawn at geometrically growing scales around the basepoint; the verdict is "escaped" as soon
/// as a point with delta < level is found farther than `search_radius` from the basepoint.
inline ProbeReport properness_probe(const NpcSpace& space, const std::vector<IsometryWord>& generators, double level,
                                    double search_radius, std::size_t samples, std::uint64_t seed) {
  require(level > 0.0, "properness probe: level must be > 0");
  require(search_radius > 0.0, "properness probe: search radius must be > 0");
  require(!generators.empty(), "properness probe: generator list must be nonempty");
  ProbeReport report;
  report.level = level;
  report.search_radius = search_radius;
  std::mt19937_64 rng(seed);
  const SpacePoint base = basepoint(space);
  constexpr int kStages = 8;
  for (std::size_t i = 0; i < samples; ++i) {
    const int stage = static_cast<int>(i * kStages / std::max<std::size_t>(samples, 1));
    const double scale = search_radius * std::ldexp(1.0, stage - 2);
    const SpacePoint x = sample_point(space, rng, scale);
    const double delta = delta_functional(space, x, generators);
    const double r = distance(space, base, x);
    report.delta_values.push_back(delta);
    if (r > search_radius) report.min_delta_outside = std::min(report.min_delta_outside, delta);
    if (delta < level) {
      report.farthest_sublevel_distance = std::max(report.farthest_sublevel_distance, r);
      if (r > search_radius) report.verdict = ProbeReport::Verdict::Escaped;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Strata

/// The curves with u_i exactly zero. No snapping is applied.
inline CurveSystem stratum_of(const StratifiedPoint& p) {
  validate(p);
  std::vector<int> pinched;
  for (std::size_t i = 0; i < p.factors.size(); ++i)
    if (p.factors[i].pinned()) pinched.push_back(static_cast<int>(i) + 1);
  return CurveSystem(p.genus(), std::move(pinched));
}

/// Coordinates below `threshold` set to the pinched point; for explicit user requests only.
inline StratifiedPoint snap_to_strata(const StratifiedPoint& p, double threshold) {
  StratifiedPoint out = p;
  for (auto& f : out.factors)
    if (f.u < threshold) f = pinned_cusp_point();
  return out;
}

/// Model geodesic sampled at t_k = k / (n + 1), k = 1..n.
inline std::vector<StratifiedPoint> geodesic_samples(const StratifiedPoint& p, const StratifiedPoint& q, int sample_count) {
  validate(p);
  validate(q);
  require(p.factors.size() == q.factors.size(), "stratified points of different genus");
  require(sample_count >= 0, "sample count must be >= 0");
  std::vector<CuspGeodesic> legs;
  legs.reserve(p.factors.size());
  for (std::size_t i = 0; i < p.factors.size(); ++i) legs.emplace_back(p.factors[i], q.factors[i]);
  std::vector<StratifiedPoint> out;
  for (int k = 1; k <= sample_count; ++k) {
    const double t = static_cast<double>(k) / (sample_count + 1);
    StratifiedPoint x;
    for (const auto& g : legs) x.factors.push_back(g.at(t));
    out.push_back(std::move(x));
  }
  return out;
}

/// Strata met by the open geodesic segment at the sampled parameters.
inline std::vector<CurveSystem> geodesic_stratum_trace(const StratifiedPoint& p, const StratifiedPoint& q, int sample_count) {
  std::vector<CurveSystem> out;
  for (const auto& x : geodesic_samples(p, q, sample_count)) out.push_back(stratum_of(x));
  return out;
}

}  // namespace harmlab
