#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "harmlab/experiments.hpp"
#include "harmlab/solver.hpp"

using namespace harmlab;

namespace {

EquivariantMap line_map(const std::vector<double>& xs) {
  EquivariantMap m;
  for (double x : xs) m.values.push_back(euclidean_point({x}));
  return m;
}

double final_energy(const SolveResult& r) {
  return r.trace.records.empty() ? r.trace.initial_energy : r.trace.records.back().energy;
}

EquivariantMap sampled(const GainGraph& g, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  EquivariantMap ref{std::vector<SpacePoint>(static_cast<std::size_t>(g.vertex_count()), basepoint(g.target()))};
  return harmlab::random_map(g, ref, rng, scale);
}

// Grid map with values f(x, y) in the real line.
EquivariantMap grid_function(const GainGraph& g, double (*f)(double, double)) {
  const auto& L = *g.grid();
  EquivariantMap m;
  for (int v = 0; v < g.vertex_count(); ++v) m.values.push_back(euclidean_point({f((v % L.nx) * L.h, (v / L.nx) * L.h)}));
  return m;
}

}  // namespace

TEST(RelaxVertex, PathVertexMovesToNeighbourMean) {
  const auto g = path_graph(euclidean_space(1), 3);
  const auto out = relax_vertex(g, line_map({0.0, 5.0, 2.0}), 1);
  EXPECT_EQ(out, line_map({0.0, 1.0, 2.0}));
  EXPECT_THROW(relax_vertex(g, line_map({0.0, 5.0, 2.0}), 3), InputError);
}

TEST(RelaxVertex, PinnedVertexStays) {
  const auto g = path_graph(euclidean_space(1), 3, {false, true, false});
  const auto m = line_map({0.0, 5.0, 2.0});
  EXPECT_EQ(relax_vertex(g, m, 1), m);
}

TEST(RelaxVertex, OptimalVertexDoesNotMove) {
  const auto h = hyperbolic_plane();
  const auto g = path_graph(h, 3);
  const auto a = hyperbolic_polar(1.0, 0.3), b = hyperbolic_polar(2.0, 2.5);
  EquivariantMap m;
  m.values = {a, midpoint(h, a, b), b};
  EXPECT_LE(distance(h, relax_vertex(g, m, 1).values[1], m.values[1]), 1e-10);
}

TEST(RelaxVertex, StarTreeNeighboursGiveTheCentre) {
  const auto t = star_tree(3, 1.0);
  std::vector<GainEdge> edges;
  for (int leaf = 1; leaf <= 3; ++leaf) edges.push_back({0, leaf, 1.0, 1.0, {}});
  const GainGraph g(t, {1, 1, 1, 1}, edges, {false, true, true, true});
  EquivariantMap m;
  m.values = {tree_point(1, 0.9), tree_point(1, 0.5), tree_point(2, 0.5), tree_point(3, 0.5)};
  EXPECT_LE(distance(t, relax_vertex(g, m, 0).values[0], tree_point(1, 0.0)), 1e-12);
}

TEST(Minimize, EuclideanTranslationCycle) {
  const int n = 8;
  const double T = 1.0;
  const auto g = cycle_graph(euclidean_space(1), n, word({euclidean_translation({T})}));
  const auto r = minimize(g, sampled(g, 1), Schedule{}, 1);
  EXPECT_EQ(r.trace.termination, SolveTrace::Termination::Converged);
  EXPECT_NEAR(final_energy(r), T * T / (2.0 * n), 1e-8);
  for (int i = 0; i + 1 < n; ++i) {
    const double step = std::get<EuclideanPoint>(r.map.values[i + 1].value).x[0] -
                        std::get<EuclideanPoint>(r.map.values[i].value).x[0];
    EXPECT_NEAR(step, T / n, 1e-5);
  }
}

TEST(Minimize, HyperbolicTranslationCycleSitsOnTheAxis) {
  const auto h = hyperbolic_plane();
  const auto gain = word({hyperbolic_translation(1.0)});
  const auto g = cycle_graph(h, 8, gain);
  const auto r = minimize(g, sampled(g, 2), Schedule{}, 2);
  EXPECT_NEAR(final_energy(r), 1.0 / 16, 1e-6);
  // Off the axis the translation moves points farther than its length.
  for (const auto& x : r.map.values) EXPECT_NEAR(distance(h, x, apply_isometry(h, gain, x)), 1.0, 1e-3);
}

TEST(Minimize, TwistCycleCollapsesToTheStratum) {
  const auto g = cycle_graph(model_space(2), 8, word({twist(1)}));
  Schedule s;
  s.max_sweeps = 10000;
  const auto r = minimize(g, sampled(g, 3), s, 3);
  EXPECT_LT(r.trace.records.back().min_u, 1e-3);
  EXPECT_LT(final_energy(r), 1e-6);
  EXPECT_TRUE(r.trace.stratum_collapsed);
  EXPECT_FALSE(r.trace.projected_curves.empty());
  for (int c : r.trace.projected_curves) EXPECT_EQ(c, 1);
}

TEST(Minimize, PureRelaxationApproachesTheStratumSlowly) {
  const auto g = cycle_graph(model_space(2), 8, word({twist(1)}));
  Schedule s;
  s.max_sweeps = 200;
  s.stratum_moves = false;
  const auto r = minimize(g, sampled(g, 3), s, 3);
  EXPECT_TRUE(r.trace.projected_curves.empty());
  EXPECT_LT(final_energy(r), r.trace.initial_energy);
  EXPECT_GT(r.trace.records.back().min_u, 1e-3);
}

TEST(Minimize, EnergyIsMonotone) {
  const auto g = figure_eight_graph(hyperbolic_plane(), 4, word({hyperbolic_translation(1.0, 0.0)}),
                                    word({hyperbolic_translation(1.0, 1.5707963267948966)}));
  const auto r = minimize(g, sampled(g, 4, 2.0), Schedule{}, 4);
  double prev = r.trace.initial_energy;
  for (const auto& rec : r.trace.records) {
    EXPECT_LE(rec.energy, prev);
    prev = rec.energy;
  }
}

TEST(Minimize, SameSeedSameResult) {
  const auto g = cycle_graph(model_space(2), 6, word({twist(2)}));
  const auto init = sampled(g, 5);
  Schedule s;
  s.max_sweeps = 30;
  const auto a = minimize(g, init, s, 7), b = minimize(g, init, s, 7);
  EXPECT_EQ(a.map, b.map);
  ASSERT_EQ(a.trace.records.size(), b.trace.records.size());
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) EXPECT_EQ(a.trace.records[i].energy, b.trace.records[i].energy);
}

TEST(Minimize, CommutesWithIsometriesPreservingTheGain) {
  const auto h = hyperbolic_plane();
  const auto g = cycle_graph(h, 6, word({hyperbolic_translation(1.0, 0.4)}));
  const auto shift = word({hyperbolic_translation(0.7, 0.4)});
  const auto init = sampled(g, 6);
  EquivariantMap moved;
  for (const auto& x : init.values) moved.values.push_back(apply_isometry(h, shift, x));
  Schedule s;
  s.max_sweeps = 40;
  const auto a = minimize(g, init, s, 8), b = minimize(g, moved, s, 8);
  for (std::size_t i = 0; i < a.map.values.size(); ++i)
    EXPECT_LE(distance(h, apply_isometry(h, shift, a.map.values[i]), b.map.values[i]), 1e-8);
}

TEST(Minimize, ZeroSweepsAndBadSchedule) {
  const auto g = path_graph(euclidean_space(1), 3);
  Schedule s;
  s.max_sweeps = 0;
  const auto r = minimize(g, line_map({0, 3, 1}), s, 1);
  EXPECT_TRUE(r.trace.records.empty());
  EXPECT_EQ(r.trace.termination, SolveTrace::Termination::MaxSweeps);
  EXPECT_DOUBLE_EQ(r.trace.initial_energy, 0.5 * 9 + 0.5 * 4);
  s.max_sweeps = -1;
  EXPECT_THROW(minimize(g, line_map({0, 3, 1}), s, 1), InputError);
}

TEST(Stratum, ProjectionPinsOneCurve) {
  const auto space = model_space(2);
  const auto g = path_graph(space, 2);
  EquivariantMap m;
  m.values = {to_space_point(stratified_point({0.5, 0.6, 0.7}, {1, 2, 3})),
              to_space_point(stratified_point({0.4, 0.6, 0.7}, {0, 0, 0}))};
  const auto p = project_to_stratum(g, m, 2);
  EXPECT_TRUE(to_stratified_point(p.values[0]).factors[1].pinned());
  EXPECT_EQ(to_stratified_point(p.values[0]).factors[0], to_stratified_point(m.values[0]).factors[0]);
  EXPECT_DOUBLE_EQ(min_cusp_coordinate(space, m), 0.4);
  EXPECT_EQ(min_cusp_coordinate(space, p), 0.0);
  EXPECT_TRUE(std::isnan(min_cusp_coordinate(euclidean_space(1), line_map({1.0}))));
}

TEST(Residual, FlatTargetIsTheDiscreteLaplacian) {
  const auto g = grid_graph(euclidean_space(1), 6);
  const auto metric = ModelMetric::leading_order(2);
  // The five-point Laplacian is exact on quadratics.
  const auto r = pde_residual(g, grid_function(g, [](double x, double y) { return x * x + 3 * y * y; }), metric);
  const auto& L = *g.grid();
  for (int v = 0; v < g.vertex_count(); ++v) {
    EXPECT_EQ(r.interior[v], !L.on_boundary(v));
    EXPECT_NEAR(r.values[v], r.interior[v] ? 8.0 : 0.0, 1e-9);
  }
  EXPECT_NEAR(r.sup_norm, 8.0, 1e-9);
  const auto harmonic = pde_residual(g, grid_function(g, [](double x, double y) { return x * x - y * y + x * y; }), metric);
  EXPECT_LE(harmonic.sup_norm, 1e-9);
}

TEST(Residual, ModelTargetDecaysUnderRefinement) {
  const auto metric = ModelMetric::leading_order(2);
  double sup[2];
  for (int k = 0; k < 2; ++k) {
    const auto s = solve_dirichlet(2, 4 << k, interior_data(2), Schedule{}, 1);
    sup[k] = pde_residual(s.graph, s.result.map, metric).sup_norm;
  }
  EXPECT_GT(sup[0] / sup[1], 2.0);
}

TEST(Residual, ChartFloors) {
  const auto metric = ModelMetric::leading_order(2);
  const auto g = grid_graph(model_space(2), 3);
  const BoundaryData close = [](double x, double) { return stratified_point({0.005 + 0.001 * x, 1, 1}, {0, 0, 0}); };
  const auto m = sample_on_grid(g, close);
  EXPECT_THROW(pde_residual(g, m, metric), ChartDegenerateError);
  EXPECT_NO_THROW(subsolution_check(g, m, metric));
  EXPECT_THROW(pde_residual(path_graph(euclidean_space(1), 2), line_map({0, 1}), metric), InputError);
  EXPECT_THROW(pde_residual(grid_graph(model_space(3), 3), sample_on_grid(grid_graph(model_space(3), 3), interior_data(3)), metric),
               InputError);
}

TEST(Subsolution, QuadraticExample) {
  const auto g = grid_graph(euclidean_space(1), 4);
  const auto r = subsolution_check(g, grid_function(g, [](double x, double y) { return x * x + y * y; }),
                                   ModelMetric::leading_order(2));
  // Lap = 4 everywhere; the smallest interior value is 2 h^2 = 1/8 at (h, h).
  EXPECT_NEAR(r.constant, 32.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.fraction_satisfied, 1.0);
  for (double m : r.margins) EXPECT_GE(m, -1e-9);
}

TEST(Uniqueness, TwoAxisFigureEightHasOneMinimizer) {
  const auto g = figure_eight_graph(hyperbolic_plane(), 4, word({hyperbolic_translation(1.0, 0.0)}),
                                    word({hyperbolic_translation(1.0, 1.5707963267948966)}));
  Schedule s;
  s.tol_move = 1e-10;
  EquivariantMap ref{std::vector<SpacePoint>(7, hyperbolic_point(0, 0))};
  const auto r = uniqueness_test(g, ref, {1, 2, 3}, s, 2.0);
  EXPECT_FALSE(r.degenerate());
  EXPECT_LE(r.max_pairwise_d2, 1e-6);
  EXPECT_EQ(r.minimizers.size(), 3u);
}

TEST(Uniqueness, TranslationCycleIsFlaggedDegenerate) {
  const auto g = cycle_graph(hyperbolic_plane(), 8, word({hyperbolic_translation(1.0)}));
  EquivariantMap ref{std::vector<SpacePoint>(8, hyperbolic_point(0, 0))};
  const auto r = uniqueness_test(g, ref, {1, 2}, Schedule{});
  EXPECT_TRUE(r.image_in_geodesic);
  EXPECT_FALSE(r.image_constant);
  EXPECT_TRUE(r.degenerate());
  EXPECT_THROW(uniqueness_test(g, ref, {1}, Schedule{}), InputError);
}

TEST(Uniqueness, ConstantMinimizersAreDegenerate) {
  const auto g = path_graph(euclidean_space(2), 4, {true, false, false, false});
  EquivariantMap ref{std::vector<SpacePoint>(4, euclidean_point({1.0, 2.0}))};
  const auto r = uniqueness_test(g, ref, {1, 2}, Schedule{});
  EXPECT_TRUE(r.image_constant);
  EXPECT_LE(r.max_pairwise_d2, 1e-6);
}

TEST(Degeneracy, SegmentDistanceAndImageTest) {
  const auto e = euclidean_space(2);
  const auto a = euclidean_point({0, 0}), b = euclidean_point({2, 0});
  EXPECT_NEAR(distance_to_segment(e, a, b, euclidean_point({1, 3})), 3.0, 1e-9);
  EXPECT_NEAR(distance_to_segment(e, a, b, euclidean_point({5, 4})), 5.0, 1e-12);
  EquivariantMap line{{a, euclidean_point({0.5, 0}), b}};
  EXPECT_EQ(image_degeneracy(e, line, 1e-6), std::make_pair(true, false));
  EquivariantMap bent{{a, euclidean_point({1, 0.1}), b}};
  EXPECT_EQ(image_degeneracy(e, bent, 1e-6), std::make_pair(false, false));
  EquivariantMap point{{a, a}};
  EXPECT_EQ(image_degeneracy(e, point, 1e-6), std::make_pair(true, true));
}
