#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hymem_cli/app.hpp"
#include "hymem_cli/plot.hpp"
#include "hymem_cli/report.hpp"
#include "hymem_cli/trajectory_io.hpp"

using namespace hymem;
using namespace hymem::cli;
namespace fs = std::filesystem;

namespace {

std::string scenario_path(const std::string& name) { return std::string(HYMEM_SCENARIO_DIR) + "/" + name; }

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hymem_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p.string();
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::string& cmd, const std::string& scenario, const fs::path& out_dir) {
  CliOptions o;
  o.command = cmd;
  o.scenario = scenario;
  o.out = out_dir.string();
  o.jobs = 2;
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_command(o, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(CmdSimulate, VanishingInputScenarioHasHundredJumps) {
  const auto dir = fresh_dir("u1");
  const auto r = run("simulate", scenario_path("quadcopter-u1.json"), dir);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto meta = json::parse(slurp(dir / "quadcopter-u1.meta.json"));
  EXPECT_EQ(meta.at("jump_count").get<int>(), 100);
  EXPECT_EQ(meta.at("end_condition").get<std::string>(), "horizon");
  const auto table = read_table((dir / "quadcopter-u1.csv").string());
  EXPECT_EQ(table.rows.size(), 4101u);
  for (const char* c : {"t", "j", "p1", "v3", "mode", "tau", "u1", "norm_W", "V", "dini", "energy"}) {
    EXPECT_GE(table.column(c), 0) << c;
  }
}

TEST(CmdSimulate, EmptyInputBlockDefaultsToZero) {
  const auto dir = fresh_dir("zero_input");
  const auto path = write_file(dir, "s.json", R"({"name": "z", "integrator": {"max_time": 1}})");
  ASSERT_EQ(run("simulate", path, dir).code, kExitOk);
  const auto table = read_table((dir / "z.csv").string());
  for (const char* c : {"u1", "u2", "u3", "energy"}) {
    const int k = table.column(c);
    ASSERT_GE(k, 0) << c;
    for (const auto& row : table.rows) {
      EXPECT_EQ(row[static_cast<std::size_t>(k)], 0.0);
    }
  }
}

TEST(CmdSimulate, MalformedScenarioNamesTheKey) {
  const auto dir = fresh_dir("malformed");
  const auto bad_key = write_file(dir, "a.json", R"({"integrator": {"stepp": 0.005}})");
  auto r = run("simulate", bad_key, dir);
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("integrator.stepp"), std::string::npos) << r.err;
  const auto bad_json = write_file(dir, "b.json", "{\n  \"name\": \"x\",,\n}");
  r = run("simulate", bad_json, dir);
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  const auto bad_value = write_file(dir, "c.json", R"({"system": {"mass": -1}})");
  EXPECT_EQ(run("simulate", bad_value, dir).code, kExitError);
}

TEST(CmdSimulate, SimulationErrorsCarryRunId) {
  const auto dir = fresh_dir("sim_error");
  const auto path = write_file(dir, "s.json", R"({"integrator": {"step": 0.003}, "runs": [{"id": "bad-run"}]})");
  const auto r = run("simulate", path, dir);
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("bad-run"), std::string::npos) << r.err;
}

TEST(CmdCheck, NoChecksGivesEmptyValidReport) {
  const auto dir = fresh_dir("no_checks");
  const auto path = write_file(dir, "s.json", R"({"name": "n", "integrator": {"max_time": 1}})");
  ASSERT_EQ(run("check", path, dir).code, kExitOk);
  const auto rep = json::parse(slurp(dir / "report.json"));
  EXPECT_TRUE(rep.at("checks").empty());
  EXPECT_TRUE(rep.at("pass").get<bool>());
}

TEST(CmdCheck, NonKInfinityCertificateFailsBeforeRunning) {
  const auto dir = fresh_dir("bad_cert");
  const auto path = write_file(dir, "s.json",
                               R"({"name": "c", "certificate": {"alpha1": {"family": "saturating", "c": 1}},
                                   "analysis": {"checks": {"jump_nonincrease": {}}}})");
  const auto r = run("check", path, dir);
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("certificate.alpha1"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "c.csv"));
}

TEST(CmdCheck, MissingCalibrationRunIsAnError) {
  const auto dir = fresh_dir("missing_cal");
  const auto path = write_file(dir, "s.json", R"({"name": "m", "integrator": {"max_time": 1},
      "analysis": {"checks": {"iiss_bound": {"beta": {"fit": ["nope"]}, "rho": {"fit": ["m"]}}}}})");
  const auto r = run("check", path, dir);
  EXPECT_EQ(r.code, kExitError);
  EXPECT_NE(r.err.find("nope"), std::string::npos) << r.err;
}

TEST(CmdCheck, FailingCheckExitsWithOne) {
  const auto dir = fresh_dir("failing");
  const auto path = write_file(dir, "s.json", R"({"name": "f", "integrator": {"max_time": 2},
      "certificate": {"sigma": [1, 2], "mu": [1, 1]},
      "analysis": {"checks": {"jump_nonincrease": {}}}})");
  EXPECT_EQ(run("check", path, dir).code, kExitCheckFailed);
}

TEST(CmdCheck, SuiteReportAndRoundTrip) {
  const auto dir = fresh_dir("suite");
  const auto sc = scenario_path("quadcopter-suite.json");
  const auto all = run("all", sc, dir);
  ASSERT_EQ(all.code, kExitOk) << all.out << all.err;
  const std::string in_memory = slurp(dir / "report.json");
  const auto rep = json::parse(in_memory);
  EXPECT_EQ(rep.at("checks").size(), 7u);
  for (const auto& c : rep.at("checks")) {
    EXPECT_TRUE(c.at("pass").get<bool>()) << c.at("check");
  }
  const auto chk = run("check", sc, dir);
  ASSERT_EQ(chk.code, kExitOk);
  EXPECT_NE(chk.out.find("loaded from trajectory file"), std::string::npos);
  EXPECT_EQ(chk.out.find("simulated"), std::string::npos);
  EXPECT_EQ(slurp(dir / "report.json"), in_memory);
}

TEST(CmdCheck, ByteIdenticalOutputs) {
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  const auto sc = scenario_path("quadcopter-u2.json");
  ASSERT_EQ(run("all", sc, a).code, kExitOk);
  CliOptions o;
  o.command = "all";
  o.scenario = sc;
  o.out = b.string();
  o.jobs = 1;
  std::ostringstream sink;
  ASSERT_EQ(run_command(o, sink, sink), kExitOk);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
  }
  EXPECT_GE(files, 5u);
}

TEST(CmdCheck, ChangedScenarioIsResimulated) {
  const auto dir = fresh_dir("stale");
  const auto a = write_file(dir, "a.json", R"({"name": "s", "integrator": {"max_time": 1}})");
  ASSERT_EQ(run("simulate", a, dir).code, kExitOk);
  const auto b = write_file(dir, "b.json", R"({"name": "s", "integrator": {"max_time": 1},
      "input": {"type": "constant", "value": [0.5, 0, -0.2]}})");
  const auto r = run("check", b, dir);
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("simulated"), std::string::npos);
}

TEST(TrajectoryIo, ReadBackMatchesRecord) {
  const auto dir = fresh_dir("io");
  const Scenario sc = load_scenario(scenario_path("quadcopter-u3.json"));
  const auto sys = build_system(sc);
  const auto rec = simulate(sys, build_initial_arc(sc, sc.runs.front()), sc.runs.front().input, sc.options);
  const std::string stem = (dir / "r").string();
  write_trajectory(stem, sc, sc.runs.front(), rec);
  const auto back = read_trajectory(stem, sys);
  ASSERT_EQ(back.point_count(), rec.point_count());
  EXPECT_EQ(back.jump_count(), rec.jump_count());
  rec.for_each_point([&](SampleIndex i) {
    EXPECT_EQ(back.state(i), rec.state(i));
    EXPECT_EQ(back.input(i), rec.input(i));
  });
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(CmdPlot, WritesSvgFromTrajectoryFiles) {
  const auto dir = fresh_dir("plot");
  ASSERT_EQ(run("simulate", scenario_path("quadcopter-u3.json"), dir).code, kExitOk);
  CliOptions o;
  o.command = "plot";
  o.files = {(dir / "quadcopter-u3.csv").string()};
  std::ostringstream out;
  std::ostringstream err;
  ASSERT_EQ(run_command(o, out, err), kExitOk) << err.str();
  const std::string svg = slurp(dir / "quadcopter-u3.norm.svg");
  EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0, true);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "quadcopter-u3.velocity.svg"));
}

TEST(CmdPlot, MissingTrajectoryIsAnError) {
  const auto dir = fresh_dir("plot_missing");
  EXPECT_EQ(run("plot", scenario_path("quadcopter-u1.json"), dir).code, kExitError);
}

TEST(RenderSvg, SeriesAndJumpMarkers) {
  PlotSpec spec;
  spec.title = "t & <x>";
  spec.series.push_back({"a", {0, 1, 2}, {0, 1, 4}, "#1f77b4"});
  spec.markers = {0.5, 1.5};
  const std::string svg = render_svg(spec);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
  EXPECT_NE(svg.find("t &amp; &lt;x&gt;"), std::string::npos);
}

TEST(OutputDir, Precedence) {
  Scenario sc;
  CliOptions o;
  unsetenv(kOutDirEnv);
  EXPECT_EQ(resolve_output_dir(o, sc), "out");
  sc.output = "from-scenario";
  EXPECT_EQ(resolve_output_dir(o, sc), "from-scenario");
  setenv(kOutDirEnv, "from-env", 1);
  EXPECT_EQ(resolve_output_dir(o, sc), "from-env");
  o.out = "from-flag";
  EXPECT_EQ(resolve_output_dir(o, sc), "from-flag");
  unsetenv(kOutDirEnv);
}

TEST(Overrides, StepAndHorizon) {
  Scenario sc = load_scenario(scenario_path("quadcopter-u1.json"));
  CliOptions o;
  o.step = 0.01;
  o.tend = 3.0;
  apply_overrides(sc, o);
  EXPECT_EQ(sc.options.step, 0.01);
  EXPECT_EQ(sc.options.t_end, 3.0);
  o.step = -1.0;
  EXPECT_THROW(apply_overrides(sc, o), ScenarioError);
}
