#pragma once

// Scenario configuration: sectioned key = value text. See docs/config.md for the schema.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "harmlab/csv.hpp"
#include "harmlab/errors.hpp"
#include "harmlab/isometry.hpp"
#include "harmlab/solver.hpp"
#include "harmlab/space_spec.hpp"

namespace harmlab {

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"npc-audit",           "metric-orders", "stratification",
                                              "unique-continuation", "uniqueness",    "properness"};
  return names;
}

struct GraphSpec {
  /// cycle | path | grid | figure8
  std::string kind = "cycle";
  /// Vertices of a cycle or path, loop length of a figure8, cells per side of a grid.
  int size = 8;
  /// cycle: at most one (closing edge); figure8: exactly two (one per loop); path, grid: none.
  std::vector<IsometryWord> gains;
  std::vector<int> pinned;

  friend bool operator==(const GraphSpec&, const GraphSpec&) = default;
};

struct Tolerances {
  double cat0 = 1e-6;
  double cat0_euclidean = 1e-12;
  double slope = 0.05;
  double christoffel = 1e-4;
  double displacement_slope = 0.1;
  double collapse_u = 1e-3;
  double collapse_energy = 1e-6;
  double strata = 1e-9;
  double uniqueness = 1e-4;
  double residual_decay = 2.0;
  double subsolution_ratio = 2.0;

  friend bool operator==(const Tolerances&, const Tolerances&) = default;
};

struct ProbeSettings {
  std::vector<IsometryWord> generators;
  double level = 0.1;
  double radius = 3.0;
  int samples = 2000;
  /// escaped | bounded_within_radius
  std::string expect = "escaped";

  friend bool operator==(const ProbeSettings&, const ProbeSettings&) = default;
};

struct ScenarioConfig {
  std::string scenario;
  int genus = 2;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  /// Target spec; "standard" (npc-audit only) audits one space of each of the five kinds.
  std::string target;
  GraphSpec graph;
  Schedule schedule;
  double init_scale = 1.0;
  int audit_samples = 10000;
  ProbeSettings probe;
  Tolerances tolerances;
  std::string output_dir = "out";

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, sep);) out.push_back(trim(part));
  return out;
}

[[noreturn]] inline void fail_at(int line, const std::string& msg) {
  throw InputError("config line " + std::to_string(line) + ": " + msg);
}

template <class T>
T parse_integral(const std::string& v, int line, const std::string& key) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    fail_at(line, "key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

inline double parse_real(const std::string& v, int line, const std::string& key) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty() || !std::isfinite(out))
    fail_at(line, "key '" + key + "' expects a number, got '" + v + "'");
  return out;
}

inline bool parse_flag(const std::string& v, int line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail_at(line, "key '" + key + "' expects true or false, got '" + v + "'");
}

inline std::vector<IsometryWord> parse_words(const std::string& v, int line, const std::string& key) {
  std::vector<IsometryWord> out;
  try {
    for (const auto& w : split(v, ';')) out.push_back(parse_word(w));
  } catch (const InputError& e) {
    fail_at(line, "key '" + key + "': " + e.what());
  }
  return out;
}

inline std::string join_words(const std::vector<IsometryWord>& ws) {
  std::string out;
  for (std::size_t i = 0; i < ws.size(); ++i) out += (i ? ";" : "") + to_string(ws[i]);
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

inline std::string flag(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string section;
  std::string key;
  bool required;
  std::function<void(ScenarioConfig&, const std::string&, int)> set;
  std::function<std::string(const ScenarioConfig&)> get;

  std::string name() const { return section + "." + key; }
};

inline const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    auto add = [&](std::string sec, std::string key, bool req, auto set, auto get) {
      f.push_back({std::move(sec), std::move(key), req, set, get});
    };
    auto add_real = [&](std::string sec, std::string key, auto access) {
      const std::string name = key;
      add(sec, key, false,
          [access, name](ScenarioConfig& c, const std::string& v, int line) { access(c) = parse_real(v, line, name); },
          [access](const ScenarioConfig& c) { return format_number(access(const_cast<ScenarioConfig&>(c))); });
    };

    add("scenario", "name", true,
        [](ScenarioConfig& c, const std::string& v, int line) {
          const auto& names = scenario_names();
          if (std::find(names.begin(), names.end(), v) == names.end())
            fail_at(line, "unknown scenario '" + v + "'");
          c.scenario = v;
        },
        [](const ScenarioConfig& c) { return c.scenario; });
    add("scenario", "genus", true,
        [](ScenarioConfig& c, const std::string& v, int line) {
          c.genus = parse_integral<int>(v, line, "genus");
          if (c.genus < 2) fail_at(line, "genus must be ≥ 2 (the model needs 3g - 3 ≥ 3 curves)");
        },
        [](const ScenarioConfig& c) { return std::to_string(c.genus); });
    add("scenario", "seed", false,
        [](ScenarioConfig& c, const std::string& v, int line) { c.seed = parse_integral<std::uint64_t>(v, line, "seed"); },
        [](const ScenarioConfig& c) { return std::to_string(c.seed); });
    add("scenario", "seeds", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          c.seeds.clear();
          for (const auto& s : split(v, ',')) c.seeds.push_back(parse_integral<std::uint64_t>(s, line, "seeds"));
        },
        [](const ScenarioConfig& c) { return join(c.seeds); });
    add("scenario", "init_scale", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          c.init_scale = parse_real(v, line, "init_scale");
          if (c.init_scale <= 0) fail_at(line, "init_scale must be > 0");
        },
        [](const ScenarioConfig& c) { return format_number(c.init_scale); });

    add("target", "spec", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          if (v != "standard") {
            try {
              parse_space_spec(v);
            } catch (const InputError& e) {
              fail_at(line, e.what());
            }
          }
          c.target = v;
        },
        [](const ScenarioConfig& c) { return c.target; });

    add("graph", "kind", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          if (v != "cycle" && v != "path" && v != "grid" && v != "figure8")
            fail_at(line, "graph kind must be cycle, path, grid or figure8, got '" + v + "'");
          c.graph.kind = v;
        },
        [](const ScenarioConfig& c) { return c.graph.kind; });
    add("graph", "size", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          c.graph.size = parse_integral<int>(v, line, "size");
          if (c.graph.size < 2) fail_at(line, "graph size must be >= 2");
        },
        [](const ScenarioConfig& c) { return std::to_string(c.graph.size); });
    add("graph", "gains", false,
        [](ScenarioConfig& c, const std::string& v, int line) { c.graph.gains = parse_words(v, line, "gains"); },
        [](const ScenarioConfig& c) { return join_words(c.graph.gains); });
    add("graph", "pinned", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          c.graph.pinned.clear();
          for (const auto& s : split(v, ',')) c.graph.pinned.push_back(parse_integral<int>(s, line, "pinned"));
        },
        [](const ScenarioConfig& c) { return join(c.graph.pinned); });

    add("solver", "max_sweeps", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          c.schedule.max_sweeps = parse_integral<int>(v, line, "max_sweeps");
          if (c.schedule.max_sweeps < 0) fail_at(line, "max_sweeps must be >= 0");
        },
        [](const ScenarioConfig& c) { return std::to_string(c.schedule.max_sweeps); });
    add_real("solver", "tol_energy_rel", [](ScenarioConfig& c) -> double& { return c.schedule.tol_energy_rel; });
    add_real("solver", "tol_move", [](ScenarioConfig& c) -> double& { return c.schedule.tol_move; });
    add("solver", "stratum_moves", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          c.schedule.stratum_moves = parse_flag(v, line, "stratum_moves");
        },
        [](const ScenarioConfig& c) { return flag(c.schedule.stratum_moves); });
    add("solver", "stall_sweeps", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          c.schedule.stall_sweeps = parse_integral<int>(v, line, "stall_sweeps");
        },
        [](const ScenarioConfig& c) { return std::to_string(c.schedule.stall_sweeps); });

    add("audit", "samples", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          c.audit_samples = parse_integral<int>(v, line, "samples");
          if (c.audit_samples < 1) fail_at(line, "audit samples must be >= 1");
        },
        [](const ScenarioConfig& c) { return std::to_string(c.audit_samples); });

    add("probe", "generators", false,
        [](ScenarioConfig& c, const std::string& v, int line) { c.probe.generators = parse_words(v, line, "generators"); },
        [](const ScenarioConfig& c) { return join_words(c.probe.generators); });
    add_real("probe", "level", [](ScenarioConfig& c) -> double& { return c.probe.level; });
    add_real("probe", "radius", [](ScenarioConfig& c) -> double& { return c.probe.radius; });
    add("probe", "samples", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          c.probe.samples = parse_integral<int>(v, line, "samples");
          if (c.probe.samples < 1) fail_at(line, "probe samples must be >= 1");
        },
        [](const ScenarioConfig& c) { return std::to_string(c.probe.samples); });
    add("probe", "expect", false,
        [](ScenarioConfig& c, const std::string& v, int line) {
          if (v != "escaped" && v != "bounded_within_radius")
            fail_at(line, "probe expect must be escaped or bounded_within_radius");
          c.probe.expect = v;
        },
        [](const ScenarioConfig& c) { return c.probe.expect; });

    add_real("tolerances", "cat0", [](ScenarioConfig& c) -> double& { return c.tolerances.cat0; });
    add_real("tolerances", "cat0_euclidean", [](ScenarioConfig& c) -> double& { return c.tolerances.cat0_euclidean; });
    add_real("tolerances", "slope", [](ScenarioConfig& c) -> double& { return c.tolerances.slope; });
    add_real("tolerances", "christoffel", [](ScenarioConfig& c) -> double& { return c.tolerances.christoffel; });
    add_real("tolerances", "displacement_slope",
             [](ScenarioConfig& c) -> double& { return c.tolerances.displacement_slope; });
    add_real("tolerances", "collapse_u", [](ScenarioConfig& c) -> double& { return c.tolerances.collapse_u; });
    add_real("tolerances", "collapse_energy", [](ScenarioConfig& c) -> double& { return c.tolerances.collapse_energy; });
    add_real("tolerances", "strata", [](ScenarioConfig& c) -> double& { return c.tolerances.strata; });
    add_real("tolerances", "uniqueness", [](ScenarioConfig& c) -> double& { return c.tolerances.uniqueness; });
    add_real("tolerances", "residual_decay", [](ScenarioConfig& c) -> double& { return c.tolerances.residual_decay; });
    add_real("tolerances", "subsolution_ratio",
             [](ScenarioConfig& c) -> double& { return c.tolerances.subsolution_ratio; });

    add("output", "dir", false, [](ScenarioConfig& c, const std::string& v, int) { c.output_dir = v; },
        [](const ScenarioConfig& c) { return c.output_dir; });
    return f;
  }();
  return fields;
}

inline bool is_model_spec(const std::string& spec) {
  if (spec == "standard") return false;
  const auto s = parse_space_spec(spec);
  const auto* prod = std::get_if<Product>(&s.kind);
  return prod && std::all_of(prod->factors.begin(), prod->factors.end(),
                             [](const NpcSpace& f) { return std::holds_alternative<CuspFactor>(f.kind); });
}

/// Radius enclosing the level-1.5 sublevel set of two unit translations along perpendicular
/// axes through the basepoint, with 5% margin.
inline double two_translation_radius() {
  const double rho = std::acosh(std::sinh(0.75) / std::sinh(0.5));
  return 1.05 * std::asinh(std::sqrt(2.0) * std::sinh(rho));
}

inline std::vector<IsometryWord> perpendicular_translations() {
  return {word({hyperbolic_translation(1.0, 0.0)}), word({hyperbolic_translation(1.0, 1.5707963267948966)})};
}

/// Scenario-dependent defaults for keys absent from the text.
inline void fill_defaults(ScenarioConfig& c, const std::set<std::string>& given) {
  const std::string& s = c.scenario;
  const auto has = [&](const char* k) { return given.count(k) > 0; };
  if (!has("target.spec")) {
    if (s == "npc-audit")
      c.target = "standard";
    else if (s == "uniqueness")
      c.target = "hyperbolic";
    else
      c.target = "model(" + std::to_string(c.genus) + ")";
  }
  const bool model = is_model_spec(c.target);
  const bool hyperbolic = c.target == "hyperbolic";
  if (s == "stratification") {
    if (!has("graph.kind")) c.graph.kind = "cycle";
    if (!has("graph.gains")) c.graph.gains = {word({twist(1)})};
    if (!has("solver.max_sweeps")) c.schedule.max_sweeps = 10000;
  } else if (s == "uniqueness") {
    if (hyperbolic) {
      if (!has("graph.kind")) c.graph.kind = "figure8";
      if (!has("graph.size")) c.graph.size = 4;
      if (!has("graph.gains")) c.graph.gains = perpendicular_translations();
      if (!has("solver.tol_move")) c.schedule.tol_move = 1e-10;
    } else if (std::holds_alternative<Euclidean>(parse_space_spec(c.target).kind)) {
      // Translations along two axes keep the image off a single line; one pinned vertex removes
      // the flat of translates.
      const int dim = std::get<Euclidean>(parse_space_spec(c.target).kind).dim;
      auto axis = [dim](int k) {
        std::vector<double> offset(static_cast<std::size_t>(dim), 0.0);
        offset[static_cast<std::size_t>(k)] = 1.0;
        return word({euclidean_translation(offset)});
      };
      if (dim >= 2) {
        if (!has("graph.kind")) c.graph.kind = "figure8";
        if (!has("graph.size")) c.graph.size = 4;
        if (!has("graph.gains")) c.graph.gains = {axis(0), axis(1)};
      } else if (!has("graph.gains")) {
        c.graph.gains = {axis(0)};
      }
      if (!has("graph.pinned")) c.graph.pinned = {0};
      if (!has("solver.tol_move")) c.schedule.tol_move = 1e-12;
    }
  } else if (s == "unique-continuation") {
    if (!has("graph.kind")) c.graph.kind = "grid";
    if (!has("solver.tol_move")) c.schedule.tol_move = 1e-13;
    if (!has("solver.tol_energy_rel")) c.schedule.tol_energy_rel = 0.0;
  } else if (s == "properness") {
    if (!has("probe.generators")) c.probe.generators = model ? std::vector{word({twist(1)})} : perpendicular_translations();
    if (hyperbolic) {
      if (!has("probe.level")) c.probe.level = 1.5;
      if (!has("probe.radius")) c.probe.radius = two_translation_radius();
      if (!has("probe.expect")) c.probe.expect = "bounded_within_radius";
    }
  }
}

}  // namespace config_detail

/// Parses the sectioned key = value format. Unknown sections or keys, duplicate keys, type
/// mismatches and missing required keys are errors carrying the offending line number.
inline ScenarioConfig parse_config(const std::string& text) {
  using namespace config_detail;
  std::map<std::string, const Field*> by_name;
  for (const auto& f : schema()) by_name[f.name()] = &f;

  ScenarioConfig cfg;
  std::set<std::string> given;
  std::vector<std::pair<const Field*, std::pair<std::string, int>>> assignments;
  std::string section;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_at(line_no, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      const bool known = std::any_of(schema().begin(), schema().end(), [&](const Field& f) { return f.section == section; });
      if (!known) fail_at(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(line_no, "expected 'key = value', got '" + line + "'");
    if (section.empty()) fail_at(line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string name = section + "." + key;
    const auto it = by_name.find(name);
    if (it == by_name.end()) fail_at(line_no, "unknown key '" + key + "' in section [" + section + "]");
    if (!given.insert(name).second) fail_at(line_no, "duplicate key '" + key + "' in section [" + section + "]");
    assignments.push_back({it->second, {trim(line.substr(eq + 1)), line_no}});
  }

  std::vector<std::string> missing;
  for (const auto& f : schema())
    if (f.required && !given.count(f.name())) missing.push_back(f.name());
  if (!missing.empty()) {
    std::string msg = "config: missing required keys:";
    for (const auto& m : missing) msg += " " + m;
    throw InputError(msg);
  }

  // Scenario and genus first so that dependent checks can see them.
  std::stable_sort(assignments.begin(), assignments.end(),
                   [](const auto& a, const auto& b) { return a.first->required && !b.first->required; });
  for (const auto& [field, value] : assignments) field->set(cfg, value.first, value.second);
  fill_defaults(cfg, given);
  return cfg;
}

/// Canonical text with every key present; parse_config(emit_config(c)) == c.
inline std::string emit_config(const ScenarioConfig& cfg) {
  std::string out, section;
  for (const auto& f : config_detail::schema()) {
    if (f.section != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

/// 64-bit FNV-1a of the canonical config text.
inline std::uint64_t config_hash(const ScenarioConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : emit_config(cfg)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace harmlab
