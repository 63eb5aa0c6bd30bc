#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "harmlab/scenario.hpp"

using namespace harmlab;
namespace fs = std::filesystem;

namespace {

fs::path workdir() {
  const auto dir = fs::temp_directory_path() / "harmlab_test_scenario";
  fs::create_directories(dir);
  return dir;
}

ScenarioConfig config(const std::string& body, const std::string& out) {
  auto c = parse_config(body);
  c.output_dir = (workdir() / out).string();
  return c;
}

const Verdict& verdict(const ScenarioReport& r, const std::string& name) {
  for (const auto& v : r.verdicts)
    if (v.name == name) return v;
  throw std::runtime_error("no verdict " + name);
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = workdir() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(HARMLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Scenario, MetricOrdersPasses) {
  const auto r = run_scenario(config("[scenario]\nname = metric-orders\ngenus = 2\n", "orders"));
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_NEAR(verdict(r, "slope_G_thth").measured, 0.0, 0.05);
  EXPECT_NEAR(verdict(r, "slope_Gamma_u_thth").measured, 0.0, 0.05);
  ASSERT_EQ(r.csv_files.size(), 1u);
  EXPECT_TRUE(fs::exists(r.csv_files[0]));
}

TEST(Scenario, StratificationCollapses) {
  const auto r = run_scenario(config("[scenario]\nname = stratification\ngenus = 2\n[probe]\nsamples = 300\n", "strat"));
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_LT(verdict(r, "min_u_twisted").measured, 1e-3);
  EXPECT_LT(verdict(r, "energy").measured, 1e-6);
  EXPECT_EQ(verdict(r, "properness_escaped").status, Verdict::Status::Pass);
  const auto trace = read_trace_csv(r.csv_files[0]);
  EXPECT_FALSE(trace.empty());
}

TEST(Scenario, StratificationWithoutStratumMovesFails) {
  const auto r = run_scenario(config(
      "[scenario]\nname = stratification\ngenus = 2\n[solver]\nstratum_moves = false\nmax_sweeps = 20\n[probe]\nsamples = 100\n",
      "strat_fail"));
  EXPECT_EQ(r.exit_code(), 2);
  EXPECT_EQ(verdict(r, "min_u_twisted").status, Verdict::Status::Fail);
}

TEST(Scenario, HyperbolicUniquenessPasses) {
  const auto r = run_scenario(config("[scenario]\nname = uniqueness\ngenus = 2\nseeds = 1,2,3\n", "uniq"));
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_LE(verdict(r, "max_pairwise_d2").measured, 1e-4);
}

TEST(Scenario, EuclideanUniquenessPasses) {
  const auto r = run_scenario(config("[scenario]\nname = uniqueness\ngenus = 2\n[target]\nspec = euclidean(2)\n", "uniq_e"));
  EXPECT_EQ(r.exit_code(), 0) << verdict(r, "max_pairwise_d2").detail;
}

TEST(Scenario, TranslationCycleIsFlagged) {
  const auto r = run_scenario(config(
      "[scenario]\nname = uniqueness\ngenus = 2\nseeds = 1,2\n[graph]\nkind = cycle\nsize = 8\ngains = htrans(1)\n", "uniq_flat"));
  EXPECT_EQ(r.exit_code(), 3);
  EXPECT_EQ(verdict(r, "max_pairwise_d2").status, Verdict::Status::DegenerateFlagged);
}

TEST(Scenario, PropernessVerdicts) {
  const auto bounded = run_scenario(config("[scenario]\nname = properness\ngenus = 2\n[target]\nspec = hyperbolic\n", "prop_h"));
  EXPECT_EQ(bounded.exit_code(), 0);
  EXPECT_EQ(bounded.verdicts.at(0).name, "probe_bounded_within_radius");
  const auto escaped = run_scenario(config("[scenario]\nname = properness\ngenus = 2\n", "prop_m"));
  EXPECT_EQ(escaped.exit_code(), 0);
  EXPECT_EQ(escaped.verdicts.at(0).name, "probe_escaped");
  const auto wrong = run_scenario(
      config("[scenario]\nname = properness\ngenus = 2\n[probe]\nexpect = bounded_within_radius\nsamples = 200\n", "prop_x"));
  EXPECT_EQ(wrong.exit_code(), 2);
}

TEST(Scenario, SmallAuditPasses) {
  const auto r = run_scenario(config("[scenario]\nname = npc-audit\ngenus = 2\n[audit]\nsamples = 200\n", "audit"));
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_EQ(verdict(r, "cat0_exact[euclidean(2)]").status, Verdict::Status::Pass);
  EXPECT_EQ(verdict(r, "cat0[model(2)]").status, Verdict::Status::Pass);
}

TEST(Scenario, ReportJsonFields) {
  const auto r = run_scenario(config("[scenario]\nname = metric-orders\ngenus = 2\n", "json"));
  const auto j = nlohmann::json::parse(report_json(r, false));
  EXPECT_EQ(j["scenario"], "metric-orders");
  EXPECT_TRUE(j["elapsed_seconds"].is_null());
  EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(j["verdicts"].size(), r.verdicts.size());
  EXPECT_EQ(j["exit_code"], 0);
  EXPECT_TRUE(nlohmann::json::parse(report_json(r, true))["elapsed_seconds"].is_number());
}

TEST(Cli, RunIsByteIdenticalWithoutTimestamp) {
  const auto cfg = write_config("det.conf", "[scenario]\nname = stratification\ngenus = 2\n[probe]\nsamples = 200\n");
  const auto out = workdir() / "det_out";
  const std::string args = "run " + cfg.string() + " --seed 5 --out-dir " + out.string() + " --no-timestamp";
  ASSERT_EQ(cli(args), 0);
  const auto first = slurp(out / "report.json"), trace = slurp(out / "trace.csv");
  ASSERT_EQ(cli(args), 0);
  EXPECT_EQ(slurp(out / "report.json"), first);
  EXPECT_EQ(slurp(out / "trace.csv"), trace);
  EXPECT_FALSE(first.empty());
}

TEST(Cli, ExitCodes) {
  const auto fail = write_config("fail.conf", "[scenario]\nname = properness\ngenus = 2\n[probe]\nexpect = bounded_within_radius\nsamples = 100\n");
  EXPECT_EQ(cli("run " + fail.string() + " --out-dir " + (workdir() / "fail_out").string()), 2);
  const auto flat = write_config(
      "flat.conf", "[scenario]\nname = uniqueness\ngenus = 2\nseeds = 1,2\n[graph]\nkind = cycle\ngains = htrans(1)\n");
  EXPECT_EQ(cli("run " + flat.string() + " --out-dir " + (workdir() / "flat_out").string()), 3);
  const auto ok = write_config("ok.conf", "[scenario]\nname = metric-orders\ngenus = 2\n");
  EXPECT_EQ(cli("run " + ok.string() + " --out-dir " + (workdir() / "ok_out").string()), 0);
  // Output directory below a regular file cannot be created.
  EXPECT_EQ(cli("run " + ok.string() + " --out-dir " + ok.string() + "/sub"), 4);
  EXPECT_EQ(cli("run " + (workdir() / "missing.conf").string()), 4);
  const auto bad = write_config("bad.conf", "[scenario]\nname = stratification\ngenus = 1\n");
  EXPECT_EQ(cli("run " + bad.string()), 1);
  EXPECT_EQ(cli("validate " + bad.string()), 1);
  EXPECT_EQ(cli("validate " + ok.string()), 0);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("audit-space 'tree(1,2)' --samples 200"), 0);
  EXPECT_EQ(cli("audit-space 'sphere'"), 1);
}
