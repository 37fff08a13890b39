#include "hymem_cli/app.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "hymem_cli/plot.hpp"
#include "hymem_cli/report.hpp"
#include "hymem_cli/trajectory_io.hpp"

namespace hymem::cli {

namespace fs = std::filesystem;

std::string resolve_output_dir(const CliOptions& opt, const Scenario& sc) {
  if (opt.out) {
    return *opt.out;
  }
  if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    return env;
  }
  if (sc.output && !sc.output->empty()) {
    return *sc.output;
  }
  return "out";
}

void apply_overrides(Scenario& sc, const CliOptions& opt) {
  if (opt.step) {
    if (!(*opt.step > 0.0)) {
      throw ScenarioError("--step must be positive");
    }
    sc.options.step = *opt.step;
  }
  if (opt.tend) {
    if (!(*opt.tend > 0.0)) {
      throw ScenarioError("--tend must be positive");
    }
    sc.options.t_end = *opt.tend;
  }
}

std::vector<RunOutcome> simulate_runs(const Scenario& sc, const SystemDefinition& sys, unsigned jobs) {
  std::vector<RunOutcome> out(sc.runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < sc.runs.size(); i = next++) {
      const RunSpec& run = sc.runs[i];
      out[i].id = run.id;
      try {
        out[i].record.emplace(simulate(sys, build_initial_arc(sc, run), run.input, sc.options));
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  if (jobs == 0) {
    jobs = std::max(1u, std::thread::hardware_concurrency());
  }
  const auto n = static_cast<unsigned>(std::min<std::size_t>(jobs, sc.runs.size()));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& t : pool) {
    t.join();
  }
  return out;
}

namespace {

bool report_sim_errors(const std::vector<RunOutcome>& runs, std::ostream& err) {
  bool ok = true;
  for (const auto& r : runs) {
    if (!r.record) {
      err << "error: run '" << r.id << "': " << r.error << '\n';
      ok = false;
    }
  }
  return ok;
}

void write_runs(const Scenario& sc, const std::vector<RunOutcome>& runs, const std::string& dir, std::ostream& out) {
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& rec = *runs[i].record;
    write_trajectory((fs::path(dir) / sc.runs[i].id).string(), sc, sc.runs[i], rec);
    out << "run " << runs[i].id << ": " << rec.point_count() << " points, " << rec.jump_count() << " jumps, end "
        << to_string(rec.meta().end) << '\n';
  }
}

// Reuses a trajectory on disk when its metadata matches the run; otherwise simulates.
std::optional<SolutionRecord> load_matching(const Scenario& sc, const RunSpec& run, const SystemDefinition& sys,
                                            const std::string& dir) {
  const std::string stem = (fs::path(dir) / run.id).string();
  if (!fs::exists(stem + ".csv") || !fs::exists(stem + ".meta.json") || sc.options.record_stride != 1) {
    return std::nullopt;
  }
  json meta;
  try {
    std::ifstream in(stem + ".meta.json");
    meta = json::parse(in);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (meta.value("scenario", "") != sc.name || meta.value("input", json()) != input_to_json(run.input)) {
    return std::nullopt;
  }
  SolutionRecord rec = read_trajectory(stem, sys);
  const auto& o = rec.meta().options;
  const auto& s = sc.options;
  if (o.step != s.step || o.t_end != s.t_end || o.max_time != s.max_time || o.priority != s.priority ||
      o.max_consecutive_jumps != s.max_consecutive_jumps) {
    return std::nullopt;
  }
  const MemoryArc a = rec.initial_arc();
  const MemoryArc b = build_initial_arc(sc, run);
  if (a.current() != b.current()) {
    return std::nullopt;
  }
  return rec;
}

int do_check(const Scenario& sc, const SystemDefinition& sys, const std::vector<const SolutionRecord*>& recs,
             const std::string& dir, std::ostream& out) {
  const auto outcome = run_checks(sc, sys, recs);
  const std::string path = (fs::path(dir) / "report.json").string();
  std::ofstream f(path);
  if (!f) {
    throw TrajectoryError("cannot write '" + path + "'");
  }
  f << outcome.report.dump(2) << '\n';
  for (const auto& c : outcome.report.at("checks")) {
    out << "check " << c.at("check").get<std::string>() << ": " << (c.at("pass").get<bool>() ? "pass" : "FAIL")
        << '\n';
  }
  out << "report: " << path << " (" << (outcome.pass ? "all checks pass" : "some checks FAIL") << ")\n";
  return outcome.pass ? kExitOk : kExitCheckFailed;
}

void do_plot(const Scenario& sc, const std::string& dir, std::ostream& out) {
  for (const auto& run : sc.runs) {
    const std::string stem = (fs::path(dir) / run.id).string();
    if (!fs::exists(stem + ".csv")) {
      throw TrajectoryError("trajectory file '" + stem + ".csv' not found; run 'simulate' first");
    }
    for (const auto& p : plot_trajectory(stem + ".csv", stem, run.id)) {
      out << "plot: " << p << '\n';
    }
  }
}

}  // namespace

int run_command(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    if (opt.command == "plot" && opt.scenario.empty()) {
      if (opt.files.empty()) {
        err << "error: plot needs --scenario or trajectory files\n";
        return kExitError;
      }
      for (const auto& f : opt.files) {
        fs::path p(f);
        const std::string stem = (p.parent_path() / p.stem()).string();
        for (const auto& w : plot_trajectory(f, stem, p.stem().string())) {
          out << "plot: " << w << '\n';
        }
      }
      return kExitOk;
    }
    if (opt.scenario.empty()) {
      err << "error: --scenario is required\n";
      return kExitError;
    }
    Scenario sc = load_scenario(opt.scenario);
    apply_overrides(sc, opt);
    validate_scenario(sc);
    const SystemDefinition sys = build_system(sc);
    const std::string dir = resolve_output_dir(opt, sc);
    fs::create_directories(dir);

    if (opt.command == "plot") {
      do_plot(sc, dir, out);
      return kExitOk;
    }
    if (opt.command == "check") {
      std::vector<std::optional<SolutionRecord>> loaded(sc.runs.size());
      Scenario missing = sc;
      missing.runs.clear();
      std::vector<std::size_t> missing_idx;
      for (std::size_t i = 0; i < sc.runs.size(); ++i) {
        loaded[i] = load_matching(sc, sc.runs[i], sys, dir);
        out << "run " << sc.runs[i].id << ": " << (loaded[i] ? "loaded from trajectory file" : "simulated") << '\n';
        if (!loaded[i]) {
          missing.runs.push_back(sc.runs[i]);
          missing_idx.push_back(i);
        }
      }
      if (!missing.runs.empty()) {
        auto sims = simulate_runs(missing, sys, opt.jobs);
        if (!report_sim_errors(sims, err)) {
          return kExitError;
        }
        for (std::size_t k = 0; k < sims.size(); ++k) {
          loaded[missing_idx[k]] = std::move(sims[k].record);
        }
      }
      std::vector<const SolutionRecord*> recs;
      for (const auto& r : loaded) {
        recs.push_back(&*r);
      }
      return do_check(sc, sys, recs, dir, out);
    }
    if (opt.command != "simulate" && opt.command != "all") {
      err << "error: unknown command '" << opt.command << "'\n";
      return kExitError;
    }
    const auto runs = simulate_runs(sc, sys, opt.jobs);
    if (!report_sim_errors(runs, err)) {
      return kExitError;
    }
    write_runs(sc, runs, dir, out);
    if (opt.command == "simulate") {
      return kExitOk;
    }
    std::vector<const SolutionRecord*> recs;
    for (const auto& r : runs) {
      recs.push_back(&*r.record);
    }
    // Checks always run at full resolution, so thinned runs are checked in memory.
    const int code = do_check(sc, sys, recs, dir, out);
    do_plot(sc, dir, out);
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int run_cli(int argc, char** argv) {
  CLI::App app{"hymem: simulation and iISS verification for hybrid systems with memory"};
  app.require_subcommand(1);
  CliOptions opt;
  double step = 0.0;
  double tend = 0.0;
  long long seed = 0;
  std::string out_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "Scenario file (JSON)");
    sub->add_option("--out", out_dir, std::string("Output directory (default: $") + kOutDirEnv +
                                          ", then the scenario's \"output\", then ./out)");
    sub->add_option("--step", step, "Integrator step h [s]; must divide the delay and timer bound");
    sub->add_option("--tend", tend, "Horizon in hybrid length t + j");
    sub->add_option("--seed", seed, "Reserved; dynamics are deterministic");
    sub->add_option("--jobs", opt.jobs, "Worker threads for scenario runs (0: all cores)");
  };
  auto* sim = app.add_subcommand("simulate", "Simulate every run and write trajectory files");
  auto* chk = app.add_subcommand("check", "Run the requested checks and write report.json");
  auto* plt = app.add_subcommand("plot", "Write SVG plots from trajectory files");
  auto* all = app.add_subcommand("all", "simulate, check and plot");
  for (auto* s : {sim, chk, plt, all}) {
    add_common(s);
  }
  plt->add_option("files", opt.files, "Trajectory CSV files (instead of --scenario)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }
  for (auto* s : {sim, chk, plt, all}) {
    if (s->parsed()) {
      opt.command = s->get_name();
      if (s->count("--out")) {
        opt.out = out_dir;
      }
      if (s->count("--step")) {
        opt.step = step;
      }
      if (s->count("--tend")) {
        opt.tend = tend;
      }
      if (s->count("--seed")) {
        opt.seed = seed;
      }
    }
  }
  return run_command(opt, std::cout, std::cerr);
}

}  // namespace hymem::cli
