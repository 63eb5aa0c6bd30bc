#pragma once

// Randomized audit of the metric-space contract of a model space: metric axioms,
// constant-speed geodesics and the CAT(0) midpoint inequality.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "harmlab/space.hpp"
#include "harmlab/space_spec.hpp"

namespace harmlab {

struct AuditResult {
  std::string space;
  int samples = 0;
  double min_cat0_slack = std::numeric_limits<double>::infinity();
  double max_abs_cat0_slack = 0.0;
  double min_triangle_slack = std::numeric_limits<double>::infinity();
  /// |d(p,q) - d(q,p)| relative to d(p,q).
  double max_symmetry_error = 0.0;
  /// |d(g(s), g(t)) - |s - t| d(p,q)| relative to d(p,q).
  double max_speed_error = 0.0;
  /// Largest endpoint mismatch of geodesic_point at t = 0 and t = 1.
  double max_endpoint_error = 0.0;
};

inline AuditResult audit_space(const NpcSpace& space, int samples, std::uint64_t seed, double scale = 1.0) {
  AuditResult r;
  r.space = to_spec(space);
  r.samples = samples;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < samples; ++i) {
    const auto p = sample_point(space, rng, scale);
    const auto q = sample_point(space, rng, scale);
    const auto w = sample_point(space, rng, scale);
    const double slack = check_npc_quadruple(space, p, q, w);
    r.min_cat0_slack = std::min(r.min_cat0_slack, slack);
    r.max_abs_cat0_slack = std::max(r.max_abs_cat0_slack, std::abs(slack));

    const double dpq = distance(space, p, q), dqp = distance(space, q, p);
    const double dqw = distance(space, q, w), dpw = distance(space, p, w);
    r.min_triangle_slack = std::min({r.min_triangle_slack, dpq + dqw - dpw, dpw + dpq - dqw, dqw + dpw - dpq});
    if (dpq > 0.0) r.max_symmetry_error = std::max(r.max_symmetry_error, std::abs(dpq - dqp) / dpq);

    r.max_endpoint_error = std::max({r.max_endpoint_error, distance(space, geodesic_point(space, p, q, 0.0), p),
                                     distance(space, geodesic_point(space, p, q, 1.0), q)});
    if (dpq > 0.0) {
      const double s = unit(rng), t = unit(rng);
      const double dst = distance(space, geodesic_point(space, p, q, s), geodesic_point(space, p, q, t));
      r.max_speed_error = std::max(r.max_speed_error, std::abs(dst - std::abs(s - t) * dpq) / dpq);
    }
  }
  return r;
}

}  // namespace harmlab
