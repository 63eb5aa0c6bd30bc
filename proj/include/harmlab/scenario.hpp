#pragma once

// Config-driven scenarios with CSV traces and a JSON report.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "harmlab/audit.hpp"
#include "harmlab/config.hpp"
#include "harmlab/csv.hpp"
#include "harmlab/experiments.hpp"
#include "harmlab/gain_graph.hpp"
#include "harmlab/solver.hpp"
#include "harmlab/space_spec.hpp"
#include "harmlab/wp_model.hpp"

namespace harmlab {

struct Verdict {
  enum class Status { Pass, Fail, DegenerateFlagged };

  std::string name;
  Status status = Status::Fail;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

inline const char* to_string(Verdict::Status s) {
  switch (s) {
    case Verdict::Status::Pass: return "pass";
    case Verdict::Status::Fail: return "fail";
    case Verdict::Status::DegenerateFlagged: return "degenerate-flagged";
  }
  return "?";
}

struct ScenarioReport {
  std::string scenario;
  std::vector<Verdict> verdicts;
  std::vector<std::string> csv_files;
  double elapsed_seconds = 0.0;
  std::uint64_t config_hash = 0;

  /// 0 when everything passed, 2 on any failure, otherwise 3 when something was flagged degenerate.
  int exit_code() const {
    bool degenerate = false;
    for (const auto& v : verdicts) {
      if (v.status == Verdict::Status::Fail) return 2;
      degenerate = degenerate || v.status == Verdict::Status::DegenerateFlagged;
    }
    return degenerate ? 3 : 0;
  }
};

namespace scenario_detail {

inline Verdict at_most(std::string name, double measured, double threshold, std::string detail = {}) {
  return {std::move(name), measured <= threshold ? Verdict::Status::Pass : Verdict::Status::Fail, measured, threshold,
          std::move(detail)};
}

inline Verdict at_least(std::string name, double measured, double threshold, std::string detail = {}) {
  return {std::move(name), measured >= threshold ? Verdict::Status::Pass : Verdict::Status::Fail, measured, threshold,
          std::move(detail)};
}

class Run {
 public:
  explicit Run(const ScenarioConfig& cfg) : cfg_(cfg) {
    report_.scenario = cfg.scenario;
    report_.config_hash = config_hash(cfg);
  }

  ScenarioReport& report() { return report_; }
  const ScenarioConfig& cfg() const { return cfg_; }

  void add(Verdict v) { report_.verdicts.push_back(std::move(v)); }

  void write(const CsvTable& table, const std::string& file) {
    std::error_code ec;
    std::filesystem::create_directories(cfg_.output_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg_.output_dir + "': " + ec.message());
    const std::string path = (std::filesystem::path(cfg_.output_dir) / file).string();
    write_csv(table, path);
    report_.csv_files.push_back(path);
  }

 private:
  const ScenarioConfig& cfg_;
  ScenarioReport report_;
};

inline std::vector<std::string> audit_targets(const ScenarioConfig& cfg) {
  if (cfg.target != "standard") return {cfg.target};
  return {"euclidean(2)", "hyperbolic", "tree(1,1,1.5)", "cusp", "model(" + std::to_string(cfg.genus) + ")"};
}

inline void npc_audit(Run& run) {
  const auto& cfg = run.cfg();
  CsvTable t{{"space", "samples", "min_cat0_slack", "max_abs_cat0_slack", "min_triangle_slack", "max_symmetry_error",
              "max_speed_error", "max_endpoint_error"},
             {}};
  std::uint64_t salt = 0;
  for (const auto& spec : audit_targets(cfg)) {
    const auto space = parse_space_spec(spec);
    const auto r = audit_space(space, cfg.audit_samples, cfg.seed + salt++);
    if (std::holds_alternative<Euclidean>(space.kind))
      run.add(at_most("cat0_exact[" + spec + "]", r.max_abs_cat0_slack, cfg.tolerances.cat0_euclidean));
    else
      run.add(at_least("cat0[" + spec + "]", r.min_cat0_slack, -cfg.tolerances.cat0));
    run.add(at_least("triangle[" + spec + "]", r.min_triangle_slack, -1e-9));
    run.add(at_most("symmetry[" + spec + "]", r.max_symmetry_error, 1e-9));
    run.add(at_most("constant_speed[" + spec + "]", r.max_speed_error, 1e-6));
    t.rows.push_back({spec, std::to_string(r.samples), format_number(r.min_cat0_slack), format_number(r.max_abs_cat0_slack),
                      format_number(r.min_triangle_slack), format_number(r.max_symmetry_error),
                      format_number(r.max_speed_error), format_number(r.max_endpoint_error)});
  }
  run.write(t, "audit.csv");
}

inline void metric_orders_scenario(Run& run) {
  const auto& cfg = run.cfg();
  const auto metric = ModelMetric::leading_order(cfg.genus);
  const auto m = metric_orders(metric);
  const double tol = cfg.tolerances.slope;
  run.add(at_most("slope_G_thth", std::abs(m.slope_g - 6.0), tol, "measured slope " + format_number(m.slope_g)));
  run.add(at_most("slope_Gamma_u_thth", std::abs(m.slope_gamma - 5.0), tol, "measured slope " + format_number(m.slope_gamma)));
  run.add(at_most("slope_displacement", std::abs(m.slope_displacement - 3.0), cfg.tolerances.displacement_slope,
                  "measured slope " + format_number(m.slope_displacement)));
  run.add(at_most("christoffel_vs_fd", christoffel_fd_audit(metric, 1000, cfg.seed), cfg.tolerances.christoffel));
  double worst_k = -std::numeric_limits<double>::infinity();
  for (double u : m.u) worst_k = std::max(worst_k, gauss_curvature_factor(metric, u));
  run.add(at_most("curvature_negative", worst_k, 0.0, "largest sectional curvature over the sampled u"));
  CsvTable t{{"u", "G_thth", "Gamma_u_thth", "displacement"}, {}};
  for (std::size_t i = 0; i < m.u.size(); ++i)
    t.rows.push_back({format_number(m.u[i]), format_number(m.g_thth[i]), format_number(m.gamma_u_thth[i]),
                      format_number(m.displacement[i])});
  run.write(t, "orders.csv");
}

}  // namespace scenario_detail

/// Builds the configured gain graph. Pinned vertices are those listed in the config.
inline GainGraph build_graph(const ScenarioConfig& cfg) {
  const auto target = parse_space_spec(cfg.target);
  const auto& g = cfg.graph;
  auto gain = [&](std::size_t i) { return i < g.gains.size() ? g.gains[i] : IsometryWord{}; };
  GainGraph base = [&] {
    if (g.kind == "cycle") {
      require(g.gains.size() <= 1, "graph: a cycle takes at most one gain (closing edge)");
      return cycle_graph(target, g.size, gain(0));
    }
    if (g.kind == "figure8") {
      require(g.gains.size() == 2, "graph: a figure8 takes exactly two gains");
      return figure_eight_graph(target, g.size, g.gains[0], g.gains[1]);
    }
    require(g.gains.empty(), "graph: " + g.kind + " graphs carry no gains");
    if (g.kind == "path") return path_graph(target, g.size);
    return grid_graph(target, g.size, true);
  }();
  if (g.pinned.empty()) return base;
  std::vector<bool> pinned(static_cast<std::size_t>(base.vertex_count()), false);
  for (int v = 0; v < base.vertex_count(); ++v) pinned[static_cast<std::size_t>(v)] = base.pinned(v);
  for (int v : g.pinned) {
    require(v >= 0 && v < base.vertex_count(), "graph: pinned vertex out of range");
    pinned[static_cast<std::size_t>(v)] = true;
  }
  return GainGraph(base.target(), base.measures(), base.edges(), std::move(pinned), base.grid());
}

/// Map with every vertex at the basepoint of the target.
inline EquivariantMap basepoint_map(const GainGraph& graph) {
  return EquivariantMap{std::vector<SpacePoint>(static_cast<std::size_t>(graph.vertex_count()), basepoint(graph.target()))};
}

namespace scenario_detail {

inline void stratification(Run& run) {
  const auto& cfg = run.cfg();
  const auto graph = build_graph(cfg);
  const auto& space = graph.target();
  std::mt19937_64 rng(cfg.seed);
  const auto init = random_map(graph, basepoint_map(graph), rng, cfg.init_scale);
  const auto res = minimize(graph, init, cfg.schedule, cfg.seed);
  run.write(trace_table(res.trace), "trace.csv");

  const auto gens = graph.gain_generators();
  double worst_u = 0.0;
  std::string twisted;
  for (int c = 1; c <= count_cusp_factors(space); ++c) {
    if (std::none_of(gens.begin(), gens.end(), [&](const IsometryWord& w) { return twists_curve(w, c); })) continue;
    twisted += (twisted.empty() ? "" : ",") + std::to_string(c);
    double min_u = std::numeric_limits<double>::infinity();
    std::vector<CuspPoint> cps;
    for (const auto& v : res.map.values) {
      cps.clear();
      collect_cusp_points(space, v, cps);
      min_u = std::min(min_u, cps[static_cast<std::size_t>(c - 1)].u);
    }
    worst_u = std::max(worst_u, min_u);
  }
  require(!twisted.empty(), "stratification scenario: no gain twists a curve of the target");
  const double e = res.trace.records.empty() ? res.trace.initial_energy : res.trace.records.back().energy;
  const std::string how = std::string("termination ") + to_string(res.trace.termination) + " after " +
                          std::to_string(res.trace.records.size()) + " sweeps; twisted curves " + twisted;
  run.add(at_most("min_u_twisted", worst_u, cfg.tolerances.collapse_u, how));
  run.add(at_most("energy", e, cfg.tolerances.collapse_energy, how));

  const auto probe = properness_probe(space, gens, cfg.probe.level, cfg.probe.radius,
                                      static_cast<std::size_t>(cfg.probe.samples), cfg.seed);
  const bool escaped = probe.verdict == ProbeReport::Verdict::Escaped;
  run.add({"properness_escaped", escaped ? Verdict::Status::Pass : Verdict::Status::Fail, probe.farthest_sublevel_distance,
           probe.search_radius, std::string("probe verdict ") + to_string(probe.verdict)});
}

inline void unique_continuation(Run& run) {
  const auto& cfg = run.cfg();
  const int g = cfg.genus;
  const auto strata = strata_check(g, 100, 9, cfg.seed);
  run.add(at_most("pinned_stratum_preserved", strata.max_pinned_u, cfg.tolerances.strata,
                  "largest u_2 along geodesics joining points with u_2 = 0"));
  run.add({"interior_stratum_empty",
           strata.nonempty_interior_strata == 0 ? Verdict::Status::Pass : Verdict::Status::Fail,
           static_cast<double>(strata.nonempty_interior_strata), 0.0,
           "smallest coordinate met " + format_number(strata.min_interior_u)});

  const auto metric = ModelMetric::leading_order(g);
  const int n = cfg.graph.size;
  CsvTable t{{"problem", "cells", "h", "sweeps", "termination", "residual_sup", "subsolution_C"}, {}};
  double residual[2] = {0, 0}, constant[2] = {0, 0};
  for (int k = 0; k < 2; ++k) {
    const int cells = n << k;
    const auto inner = solve_dirichlet(g, cells, interior_data(g), cfg.schedule, cfg.seed);
    residual[k] = pde_residual(inner.graph, inner.result.map, metric).sup_norm;
    t.rows.push_back({"interior", std::to_string(cells), format_number(1.0 / cells),
                      std::to_string(inner.result.trace.records.size()), to_string(inner.result.trace.termination),
                      format_number(residual[k]), ""});
    const auto near = solve_dirichlet(g, cells, near_stratum_data(g), cfg.schedule, cfg.seed);
    constant[k] = subsolution_check(near.graph, near.result.map, metric).constant;
    t.rows.push_back({"near_stratum", std::to_string(cells), format_number(1.0 / cells),
                      std::to_string(near.result.trace.records.size()), to_string(near.result.trace.termination), "",
                      format_number(constant[k])});
  }
  run.write(t, "refinement.csv");
  run.add(at_least("residual_decay", residual[0] / residual[1], cfg.tolerances.residual_decay,
                   "sup-norm " + format_number(residual[0]) + " -> " + format_number(residual[1])));
  const double lo = std::min(constant[0], constant[1]), hi = std::max(constant[0], constant[1]);
  run.add(at_most("subsolution_C_stable", lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity(),
                  cfg.tolerances.subsolution_ratio, "C " + format_number(constant[0]) + " -> " + format_number(constant[1])));
}

inline void uniqueness(Run& run) {
  const auto& cfg = run.cfg();
  const auto graph = build_graph(cfg);
  const auto r = uniqueness_test(graph, basepoint_map(graph), cfg.seeds, cfg.schedule, cfg.init_scale);
  CsvTable t{{"seed", "energy", "d2_to_first"}, {}};
  for (std::size_t i = 0; i < r.minimizers.size(); ++i)
    t.rows.push_back({std::to_string(cfg.seeds[i]), format_number(r.energies[i]),
                      format_number(d2_distance(graph, r.minimizers[0], r.minimizers[i]))});
  run.write(t, "uniqueness.csv");
  if (r.degenerate()) {
    run.add({"max_pairwise_d2", Verdict::Status::DegenerateFlagged, r.max_pairwise_d2, cfg.tolerances.uniqueness,
             r.image_constant ? "minimizers are constant maps; uniqueness not asserted"
                              : "image lies in a geodesic; uniqueness not asserted"});
  } else {
    run.add(at_most("max_pairwise_d2", r.max_pairwise_d2, cfg.tolerances.uniqueness));
  }
}

inline void properness(Run& run) {
  const auto& cfg = run.cfg();
  const auto space = parse_space_spec(cfg.target);
  const auto probe = properness_probe(space, cfg.probe.generators, cfg.probe.level, cfg.probe.radius,
                                      static_cast<std::size_t>(cfg.probe.samples), cfg.seed);
  const std::string got = to_string(probe.verdict);
  run.add({"probe_" + cfg.probe.expect, got == cfg.probe.expect ? Verdict::Status::Pass : Verdict::Status::Fail,
           probe.farthest_sublevel_distance, probe.search_radius, "probe verdict " + got + "; " + probe.note});
  CsvTable t{{"sample", "delta"}, {}};
  for (std::size_t i = 0; i < probe.delta_values.size(); ++i)
    t.rows.push_back({std::to_string(i), format_number(probe.delta_values[i])});
  run.write(t, "probe.csv");
}

}  // namespace scenario_detail

/// Runs the configured scenario, writing CSVs under cfg.output_dir.
inline ScenarioReport run_scenario(const ScenarioConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  scenario_detail::Run run(cfg);
  const auto& s = cfg.scenario;
  if (s == "npc-audit")
    scenario_detail::npc_audit(run);
  else if (s == "metric-orders")
    scenario_detail::metric_orders_scenario(run);
  else if (s == "stratification")
    scenario_detail::stratification(run);
  else if (s == "unique-continuation")
    scenario_detail::unique_continuation(run);
  else if (s == "uniqueness")
    scenario_detail::uniqueness(run);
  else if (s == "properness")
    scenario_detail::properness(run);
  else
    throw InputError("unknown scenario '" + s + "'");
  auto report = std::move(run.report());
  report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

inline nlohmann::ordered_json number_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

/// Report as JSON; with `timestamp` false, elapsed_seconds is null so reruns compare byte for byte.
inline std::string report_json(const ScenarioReport& r, bool timestamp) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  auto& vs = j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : r.verdicts) {
    nlohmann::ordered_json e;
    e["name"] = v.name;
    e["status"] = to_string(v.status);
    e["measured"] = number_json(v.measured);
    e["threshold"] = number_json(v.threshold);
    e["detail"] = v.detail;
    vs.push_back(std::move(e));
  }
  j["csv_files"] = r.csv_files;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.config_hash));
  j["config_hash"] = hash;
  j["elapsed_seconds"] = timestamp ? number_json(r.elapsed_seconds) : nlohmann::ordered_json(nullptr);
  j["exit_code"] = r.exit_code();
  return j.dump(2) + "\n";
}

}  // namespace harmlab
