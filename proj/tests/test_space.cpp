#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "harmlab/audit.hpp"
#include "harmlab/space.hpp"
#include "harmlab/space_spec.hpp"

using namespace harmlab;

namespace {

double hyperboloid_acosh(const SpacePoint& p, const SpacePoint& q) {
  const auto& a = std::get<HyperboloidPoint>(p.value).x;
  const auto& b = std::get<HyperboloidPoint>(q.value).x;
  return std::acosh(std::max(1.0, a[0] * b[0] - a[1] * b[1] - a[2] * b[2]));
}

std::vector<NpcSpace> all_kinds() {
  return {euclidean_space(3),
          hyperbolic_plane(),
          star_tree({1.0, 2.0, 0.5}),
          cusp_factor(),
          model_space(2),
          product_space({hyperbolic_plane(), cusp_factor(), euclidean_space(1)})};
}

}  // namespace

TEST(Distance, Pythagoras) {
  EXPECT_DOUBLE_EQ(distance(euclidean_space(2), euclidean_point({0, 0}), euclidean_point({3, 4})), 5.0);
}

TEST(Distance, ProductCombinesInL2) {
  const auto space = product_space({euclidean_space(1), euclidean_space(1)});
  const auto p = product_point({euclidean_point({0}), euclidean_point({0})});
  const auto q = product_point({euclidean_point({3}), euclidean_point({4})});
  EXPECT_DOUBLE_EQ(distance(space, p, q), 5.0);
}

TEST(Distance, TreePathsGoThroughCenter) {
  const auto tree = star_tree(3, 1.0);
  EXPECT_DOUBLE_EQ(distance(tree, tree_point(1, 0.5), tree_point(2, 0.5)), 1.0);
  EXPECT_DOUBLE_EQ(distance(tree, tree_point(1, 0.5), tree_point(1, 0.2)), 0.3);
}

TEST(Distance, HyperbolicUnitSeparation) {
  // Inner product -cosh(1): the origin and a point at polar radius 1.
  const auto h = hyperbolic_plane();
  const auto o = hyperbolic_polar(0.0, 0.0), p = hyperbolic_polar(1.0, 0.3);
  EXPECT_NEAR(minkowski(std::get<HyperboloidPoint>(o.value).x, std::get<HyperboloidPoint>(p.value).x), -std::cosh(1.0), 1e-15);
  EXPECT_NEAR(distance(h, o, p), 1.0, 1e-15);
}

TEST(Distance, HyperbolicMatchesAcosh) {
  const auto h = hyperbolic_plane();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> R(0.0, 4.0), A(0.0, 6.283185307179586);
  for (int k = 0; k < 1000; ++k) {
    const auto p = hyperbolic_polar(R(rng), A(rng)), q = hyperbolic_polar(R(rng), A(rng));
    const double o = hyperboloid_acosh(p, q);
    // acosh loses about sqrt(eps) near zero separation, so compare with a floor.
    EXPECT_NEAR(distance(h, p, q), o, 1e-12 * o + 1e-7);
  }
}

TEST(Distance, HyperbolicFarFromBasepoint) {
  // sinh^2(d/2) = sinh^2((r1 - r2)/2) + sinh r1 sinh r2 sin^2((a1 - a2)/2) for polar coordinates.
  // Coordinates at radius r carry position noise of about eps * e^r, which sets the tolerance.
  const auto h = hyperbolic_plane();
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> R(10.0, 22.0), A(0.0, 6.283185307179586), small(-1.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const double r1 = R(rng), a1 = A(rng);
    const bool near = k % 2 == 0;
    const double r2 = near ? r1 + 0.05 * small(rng) : R(rng);
    const double a2 = near ? a1 + std::exp(-r1) * small(rng) : A(rng);
    const double sr = std::sinh(0.5 * (r1 - r2)), sa = std::sin(0.5 * (a1 - a2));
    const double o = 2.0 * std::asinh(std::sqrt(sr * sr + std::sinh(r1) * std::sinh(r2) * sa * sa));
    const double tol = 1e-14 * std::exp(std::max(r1, r2)) + 1e-12 * (1 + o);
    EXPECT_NEAR(distance(h, hyperbolic_polar(r1, a1), hyperbolic_polar(r2, a2)), o, tol);
  }
  // Along a translation axis the displacement stays exactly the translation length.
  for (double t : {10.0, 20.0, 30.0})
    EXPECT_NEAR(distance(h, hyperbolic_polar(t, 0.4), hyperbolic_polar(t + 1, 0.4)), 1.0, 1e-14 * std::exp(t + 1));
}

TEST(Distance, HyperbolicMatchesPolygonalPathLength) {
  // Hyperbolic length of the straight Klein-model chord, which is the geodesic, by quadrature.
  const auto h = hyperbolic_plane();
  const auto p = hyperbolic_point(0.3, -1.2), q = hyperbolic_point(2.0, 0.7);
  const auto& a = std::get<HyperboloidPoint>(p.value).x;
  const auto& b = std::get<HyperboloidPoint>(q.value).x;
  const int n = 20000;
  double len = 0.0;
  std::array<double, 3> prev = a;
  for (int i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    std::array<double, 3> x{};
    for (int c = 0; c < 3; ++c) x[c] = (1 - t) * a[c] + t * b[c];
    const double norm = std::sqrt(x[0] * x[0] - x[1] * x[1] - x[2] * x[2]);
    for (auto& c : x) c /= norm;
    const double d0 = x[0] - prev[0], d1 = x[1] - prev[1], d2 = x[2] - prev[2];
    len += std::sqrt(std::max(0.0, d1 * d1 + d2 * d2 - d0 * d0));
    prev = x;
  }
  EXPECT_NEAR(distance(h, p, q), len, 1e-6);
}

TEST(Distance, IdentityOfIndiscernibles) {
  std::mt19937_64 rng(4);
  for (const auto& space : all_kinds()) {
    for (int k = 0; k < 20; ++k) {
      const auto p = sample_point(space, rng);
      EXPECT_EQ(distance(space, p, p), 0.0) << to_spec(space);
    }
  }
}

TEST(Distance, MismatchedKindsAreRejected) {
  EXPECT_THROW(distance(euclidean_space(2), euclidean_point({0, 0}), tree_point(1, 0.5)), InputError);
  EXPECT_THROW(distance(euclidean_space(2), euclidean_point({0, 0}), euclidean_point({1})), InputError);
  EXPECT_THROW(distance(star_tree(2, 1.0), tree_point(3, 0.5), tree_point(1, 0.5)), InputError);
  EXPECT_THROW(distance(star_tree(2, 1.0), tree_point(1, 1.5), tree_point(1, 0.5)), InputError);
  EXPECT_THROW(distance(cusp_factor(), hyperbolic_polar(1, 0), pinned_point()), InputError);
}

TEST(Geodesic, EndpointsAndInterpolation) {
  const auto e = euclidean_space(2);
  const auto p = euclidean_point({0, 0}), q = euclidean_point({2, 0});
  EXPECT_EQ(geodesic_point(e, p, q, 0.0), p);
  EXPECT_EQ(geodesic_point(e, p, q, 1.0), q);
  EXPECT_EQ(geodesic_point(e, p, q, 0.25), euclidean_point({0.5, 0}));
  EXPECT_THROW(geodesic_point(e, p, q, -0.1), InputError);
  EXPECT_THROW(geodesic_point(e, p, q, 1.1), InputError);
}

TEST(Geodesic, TreeMidpointIsCenter) {
  const auto tree = star_tree(3, 1.0);
  EXPECT_EQ(geodesic_point(tree, tree_point(1, 1.0), tree_point(2, 1.0), 0.5), tree_point(0, 0.0));
}

TEST(Geodesic, Midpoints) {
  const auto e = euclidean_space(2);
  EXPECT_EQ(midpoint(e, euclidean_point({0, 0}), euclidean_point({4, 2})), euclidean_point({2, 1}));
  const auto c = midpoint(cusp_factor(), cusp_point(0.4, 0.0), cusp_point(0.2, 0.0));
  EXPECT_NEAR(std::get<CuspPoint>(c.value).u, 0.3, 1e-15);
  std::mt19937_64 rng(8);
  for (const auto& space : all_kinds()) {
    const auto p = sample_point(space, rng);
    EXPECT_LE(distance(space, midpoint(space, p, p), p), 1e-12) << to_spec(space);
  }
}

TEST(Geodesic, ConstantSpeedInEveryKind) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> S(0.0, 1.0);
  for (const auto& space : all_kinds()) {
    for (int k = 0; k < 100; ++k) {
      const auto p = sample_point(space, rng), q = sample_point(space, rng);
      const double d = distance(space, p, q), s = S(rng), t = S(rng);
      const double dst = distance(space, geodesic_point(space, p, q, s), geodesic_point(space, p, q, t));
      EXPECT_NEAR(dst, std::abs(s - t) * d, 1e-6 * d + 1e-12) << to_spec(space);
    }
  }
}

TEST(NpcQuadruple, EuclideanSlackVanishes) {
  const auto e = euclidean_space(2);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const auto p = sample_point(e, rng), q = sample_point(e, rng), w = sample_point(e, rng);
    EXPECT_NEAR(check_npc_quadruple(e, p, q, w), 0.0, 1e-12);
  }
}

TEST(NpcQuadruple, TreeTripodSlack) {
  // Tips of three unit branches: pairwise distances 2, midpoint of p and q is the center,
  // d(w, m) = 1. Slack = 4/2 + 4/2 - 4/4 - 1 = 2.
  const auto tree = star_tree(3, 1.0);
  EXPECT_NEAR(check_npc_quadruple(tree, tree_point(1, 1), tree_point(2, 1), tree_point(3, 1)), 2.0, 1e-15);
}

TEST(NpcQuadruple, DegenerateSegmentHasZeroSlack) {
  std::mt19937_64 rng(6);
  for (const auto& space : all_kinds()) {
    const auto p = sample_point(space, rng), w = sample_point(space, rng);
    EXPECT_NEAR(check_npc_quadruple(space, p, p, w), 0.0, 1e-12) << to_spec(space);
  }
}

TEST(NpcQuadruple, AuditHoldsForEveryKind) {
  for (const auto& space : all_kinds()) {
    const auto r = audit_space(space, 300, 17);
    const bool flat = std::holds_alternative<Euclidean>(space.kind);
    if (flat)
      EXPECT_LE(r.max_abs_cat0_slack, 1e-12);
    else
      EXPECT_GE(r.min_cat0_slack, -1e-6) << r.space;
    EXPECT_GE(r.min_triangle_slack, -1e-9) << r.space;
    EXPECT_LE(r.max_symmetry_error, 1e-9) << r.space;
    EXPECT_LE(r.max_speed_error, 1e-6) << r.space;
    EXPECT_LE(r.max_endpoint_error, 1e-9) << r.space;
  }
}

TEST(NpcQuadruple, AuditIsDeterministicForASeed) {
  const auto a = audit_space(model_space(2), 50, 3), b = audit_space(model_space(2), 50, 3);
  EXPECT_EQ(a.min_cat0_slack, b.min_cat0_slack);
  EXPECT_EQ(a.max_speed_error, b.max_speed_error);
}

TEST(FrechetMean, WeightedAverages) {
  const auto e = euclidean_space(2);
  const std::vector<SpacePoint> two{euclidean_point({0, 0}), euclidean_point({2, 0})};
  const std::vector<double> equal{1, 1};
  EXPECT_EQ(frechet_mean(e, two, equal), euclidean_point({1, 0}));
  const std::vector<SpacePoint> far{euclidean_point({0, 0}), euclidean_point({3, 0})};
  const std::vector<double> w21{2, 1};
  EXPECT_EQ(frechet_mean(e, far, w21), euclidean_point({1, 0}));
}

TEST(FrechetMean, TreeTripodMeanIsCenter) {
  const auto tree = star_tree(3, 1.0);
  const std::vector<SpacePoint> pts{tree_point(1, 1), tree_point(2, 1), tree_point(3, 1)};
  const std::vector<double> w{1, 1, 1};
  EXPECT_EQ(frechet_mean(tree, pts, w), tree_point(0, 0));
}

TEST(FrechetMean, BeatsPerturbedCandidates) {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> W(0.1, 2.0), S(0.0, 1.0);
  for (const auto& space : all_kinds()) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<SpacePoint> pts;
      std::vector<double> w;
      for (int i = 0; i < 4; ++i) {
        pts.push_back(sample_point(space, rng));
        w.push_back(W(rng));
      }
      const auto m = frechet_mean(space, pts, w);
      const double best = frechet_objective(space, pts, w, m);
      // Candidates along geodesics from the mean toward random points.
      for (int k = 0; k < 50; ++k) {
        const auto c = geodesic_point(space, m, sample_point(space, rng), 0.05 * S(rng));
        EXPECT_LE(best, frechet_objective(space, pts, w, c) + 1e-9 * (1 + best)) << to_spec(space);
      }
    }
  }
}

TEST(FrechetMean, Errors) {
  const auto e = euclidean_space(1);
  const std::vector<SpacePoint> pts{euclidean_point({0}), euclidean_point({1})};
  const std::vector<double> zero{0, 0}, negative{1, -1}, short_list{1};
  EXPECT_THROW(frechet_mean(e, pts, zero), InputError);
  EXPECT_THROW(frechet_mean(e, pts, negative), InputError);
  EXPECT_THROW(frechet_mean(e, pts, short_list), InputError);
  EXPECT_THROW(frechet_mean(e, std::vector<SpacePoint>{}, std::vector<double>{}), InputError);
}

TEST(Construction, Errors) {
  EXPECT_THROW(product_space({}), InputError);
  EXPECT_THROW(euclidean_space(0), InputError);
  EXPECT_THROW(star_tree(std::vector<double>{}), InputError);
  EXPECT_THROW(star_tree({1.0, -1.0}), InputError);
  EXPECT_THROW(model_space(1), InputError);
  EXPECT_EQ(std::get<Product>(model_space(3).kind).factors.size(), 6u);
}

TEST(SpaceSpec, RoundTrips) {
  for (const std::string s : {"euclidean(2)", "hyperbolic", "tree(1,0.5,2)", "cusp", "model(2)", "model(4)",
                              "product(hyperbolic;cusp;euclidean(1))", "product(product(cusp;cusp);tree(1))"}) {
    const auto space = parse_space_spec(s);
    EXPECT_EQ(to_spec(space), s);
    EXPECT_EQ(parse_space_spec(to_spec(space)), space);
  }
  EXPECT_EQ(parse_space_spec(" product( cusp ; cusp ; cusp ) "), model_space(2));
}

TEST(SpaceSpec, Errors) {
  for (const std::string s : {"", "euclid(2)", "euclidean(2", "euclidean(1.5)", "tree()", "model(1)", "product()",
                              "hyperbolic x", "tree(1,-2)", "standard"})
    EXPECT_THROW(parse_space_spec(s), InputError) << "'" << s << "'";
}
