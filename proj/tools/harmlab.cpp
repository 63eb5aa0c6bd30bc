// harmlab: run scenarios, validate configs, audit target spaces.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "harmlab/audit.hpp"
#include "harmlab/config.hpp"
#include "harmlab/scenario.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw harmlab::IoError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& path, const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out_dir,
            bool no_timestamp) {
  auto cfg = harmlab::parse_config(read_file(path));
  if (seed) cfg.seed = *seed;
  if (out_dir) cfg.output_dir = *out_dir;
  const auto report = harmlab::run_scenario(cfg);
  const std::string json = harmlab::report_json(report, !no_timestamp);
  std::filesystem::create_directories(cfg.output_dir);
  const auto report_path = (std::filesystem::path(cfg.output_dir) / "report.json").string();
  std::ofstream os(report_path, std::ios::binary);
  if (!(os << json)) throw harmlab::IoError("cannot write '" + report_path + "'");
  for (const auto& v : report.verdicts)
    std::cout << harmlab::to_string(v.status) << "  " << v.name << "  measured=" << harmlab::format_number(v.measured)
              << "  threshold=" << harmlab::format_number(v.threshold) << (v.detail.empty() ? "" : "  (" + v.detail + ")")
              << "\n";
  std::cout << "report: " << report_path << "\n";
  return report.exit_code();
}

int cmd_validate(const std::string& path) {
  const auto cfg = harmlab::parse_config(read_file(path));
  std::cout << harmlab::emit_config(cfg);
  return 0;
}

int cmd_audit(const std::string& spec, int samples, std::uint64_t seed) {
  const auto space = harmlab::parse_space_spec(spec);
  const auto r = harmlab::audit_space(space, samples, seed);
  const bool euclidean = std::holds_alternative<harmlab::Euclidean>(space.kind);
  const bool ok = (euclidean ? r.max_abs_cat0_slack <= 1e-12 : r.min_cat0_slack >= -1e-6) && r.min_triangle_slack >= -1e-9 &&
                  r.max_symmetry_error <= 1e-9 && r.max_speed_error <= 1e-6;
  nlohmann::ordered_json j;
  j["space"] = r.space;
  j["samples"] = r.samples;
  j["min_cat0_slack"] = r.min_cat0_slack;
  j["max_abs_cat0_slack"] = r.max_abs_cat0_slack;
  j["min_triangle_slack"] = r.min_triangle_slack;
  j["max_symmetry_error"] = r.max_symmetry_error;
  j["max_speed_error"] = r.max_speed_error;
  j["max_endpoint_error"] = r.max_endpoint_error;
  j["verdict"] = ok ? "pass" : "fail";
  std::cout << j.dump(2) << "\n";
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivariant harmonic maps into nonpositively curved model spaces"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool no_timestamp = false;
  auto* run = app.add_subcommand("run", "Run the scenario described by a config file");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Override scenario.seed");
  run->add_option("--out-dir", out_dir, "Override output.dir");
  run->add_flag("--no-timestamp", no_timestamp, "Leave elapsed_seconds null in the report");

  auto* validate = app.add_subcommand("validate", "Parse a config file and print it with defaults filled in");
  validate->add_option("config", config_path, "Config file")->required();

  std::string spec;
  int samples = 10000;
  std::uint64_t audit_seed = 1;
  auto* audit = app.add_subcommand("audit-space", "Randomized metric and CAT(0) audit of a target space");
  audit->add_option("target", spec, "Target spec, e.g. model(2) or product(hyperbolic;cusp)")->required();
  audit->add_option("--samples", samples, "Random quadruples")->check(CLI::PositiveNumber);
  audit->add_option("--seed", audit_seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(config_path, seed, out_dir, no_timestamp);
    if (*validate) return cmd_validate(config_path);
    return cmd_audit(spec, samples, audit_seed);
  } catch (const harmlab::IoError& e) {
    std::cerr << "harmlab: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "harmlab: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "harmlab: " << e.what() << "\n";
    return kExitUsage;
  }
}
