#include "mnlb/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mnlb {

namespace fs = std::filesystem;

std::filesystem::path resolve_out_root(const ExperimentConfig& cfg,
                                       const std::string& out_override) {
  if (!out_override.empty()) return out_override;
  if (const char* env = std::getenv("MNLB_OUT_ROOT");
      env != nullptr && *env != '\0') {
    return env;
  }
  return cfg.out_dir;
}

namespace {

std::string trace_file_name(int seed_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trace_seed%03d.csv", seed_index);
  return buf;
}

std::string cell_dir_name(Algorithm algo, long T) {
  return to_string(algo) + "_T" + std::to_string(T);
}

DerivedValues derived_for(const ExperimentConfig& cfg,
                          const std::vector<RunResult>& results) {
  Algorithm algo = cfg.algorithms.front();
  long T = cfg.T_grid.front();
  DerivedValues derived;
  bool found = false;
  for (const RunResult& r : results) {
    if (r.trace) {
      derived.lambda = r.trace->lambda;
      derived.gamma = r.trace->gamma;
      derived.kappa = r.trace->kappa;
      found = true;
      break;
    }
  }
  if (!found) {
    // no run finished; echo what the resolvers would have used
    if (algo == Algorithm::bmnl) {
      derived.lambda =
          resolve_lambda_batched(cfg.algo, cfg.K, cfg.d, cfg.S, T);
      derived.gamma = confidence_radius_batched(cfg.S, cfg.K, cfg.d,
                                                static_cast<double>(T),
                                                derived.lambda,
                                                cfg.algo.c_gamma)
                          .gamma;
    } else {
      derived.lambda = resolve_lambda_rs(cfg.algo, cfg.K, cfg.d, cfg.S, T,
                                         cfg.algo.delta);
      derived.gamma = confidence_radius_rs(cfg.S, cfg.K, cfg.d,
                                           static_cast<double>(T),
                                           cfg.algo.delta, cfg.algo.C,
                                           cfg.algo.c_gamma)
                          .gamma;
    }
    derived.kappa = cfg.algo.kappa;
  }
  if (algo == Algorithm::bmnl) {
    int batches = cfg.M > 0 ? cfg.M : default_batch_count(T);
    derived.batch_boundaries = BatchSchedule::make(T, batches).boundaries;
  }
  return derived;
}

struct DirectoryAggregate {
  std::string label;
  std::vector<AggregateRow> rows;
};

DirectoryAggregate aggregate_directory(const std::string& dir,
                                       const std::string& label) {
  fs::path p(dir);
  if (!fs::is_directory(p)) {
    throw ConfigError(dir, "not a run directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(p)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("trace_", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".csv") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw ConfigError(dir, "contains no trace CSVs");
  }
  std::sort(files.begin(), files.end());
  std::vector<RegretTrace> traces;
  traces.reserve(files.size());
  for (const fs::path& f : files) traces.push_back(read_trace_csv(f));
  return {label, aggregate(traces)};
}

}  // namespace

int run_cell(const ExperimentConfig& cell_cfg, const std::filesystem::path& dir,
             int jobs) {
  if (!cell_cfg.single_cell()) {
    throw std::logic_error("run_cell needs a pinned grid cell");
  }
  Algorithm algo = cell_cfg.algorithms.front();
  long T = cell_cfg.T_grid.front();
  fs::create_directories(dir);

  EnvironmentSpec spec = cell_cfg.environment_spec();
  std::vector<RunResult> results =
      run_experiment(algo, spec, T, cell_cfg.M, cell_cfg.algo,
                     cell_cfg.n_seeds, cell_cfg.master_seed, jobs);

  std::uint64_t hash = config_hash(cell_cfg);
  std::vector<ArtifactStatus> artifacts;
  std::vector<RegretTrace> ok_traces;
  bool partial = false;
  for (const RunResult& r : results) {
    std::string file = trace_file_name(r.seed_index);
    if (r.trace) {
      write_trace_csv(dir / file, *r.trace, hash);
      artifacts.push_back({file, "ok"});
      ok_traces.push_back(*r.trace);
    } else {
      partial = true;
      artifacts.push_back({file, "failed: " + r.error});
      std::cerr << "mnlb: seed " << r.seed_index << " failed: " << r.error
                << "\n";
    }
  }
  if (!ok_traces.empty()) {
    write_aggregate_csv(dir / "aggregate.csv", aggregate(ok_traces));
    artifacts.push_back({"aggregate.csv", "ok"});
  } else {
    artifacts.push_back({"aggregate.csv", "skipped: no successful runs"});
  }
  write_manifest(dir / "manifest.ini", cell_cfg, derived_for(cell_cfg, results),
                 artifacts, partial);
  return partial ? kExitRuntime : kExitOk;
}

int cmd_run(const CliOptions& opt) {
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::parse_file(opt.config_path);
  } catch (const ConfigError& e) {
    std::cerr << "mnlb: config error: " << e.what() << "\n";
    return kExitValidation;
  }
  if (!cfg.single_cell()) {
    std::cerr << "mnlb: config error: experiment.algorithm/experiment.T: "
                 "run takes a single cell; use the sweep command for grids\n";
    return kExitValidation;
  }
  try {
    return run_cell(cfg, resolve_out_root(cfg, opt.out_override), opt.jobs);
  } catch (const std::exception& e) {
    std::cerr << "mnlb: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_sweep(const CliOptions& opt) {
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::parse_file(opt.config_path);
  } catch (const ConfigError& e) {
    std::cerr << "mnlb: config error: " << e.what() << "\n";
    return kExitValidation;
  }
  fs::path root = resolve_out_root(cfg, opt.out_override);
  fs::create_directories(root);

  struct CellOutcome {
    Algorithm algo;
    long T;
    std::string dir;
    std::string status;
  };
  std::vector<CellOutcome> outcomes;
  int exit_code = kExitOk;
  for (Algorithm algo : cfg.algorithms) {
    for (long T : cfg.T_grid) {
      std::string name = cell_dir_name(algo, T);
      std::string status = "ok";
      try {
        int code = run_cell(cfg.cell(algo, T), root / name, opt.jobs);
        if (code != kExitOk) {
          status = "partial";
          exit_code = kExitRuntime;
        }
      } catch (const std::exception& e) {
        status = std::string("failed: ") + e.what();
        exit_code = kExitRuntime;
        std::cerr << "mnlb: cell " << name << " failed: " << e.what() << "\n";
      }
      outcomes.push_back({algo, T, name, status});
    }
  }

  // the index is written last so its presence marks a finished sweep
  std::ostringstream index;
  index << "algorithm,T,directory,status\n";
  for (const CellOutcome& c : outcomes) {
    index << to_string(c.algo) << ',' << c.T << ',' << c.dir << ','
          << c.status << "\n";
  }
  std::ofstream out(root / "index.csv", std::ios::binary);
  out << index.str();
  if (!out) {
    std::cerr << "mnlb: cannot write " << (root / "index.csv") << "\n";
    return kExitRuntime;
  }
  return exit_code;
}

int cmd_report(const CliOptions& opt) {
  if (opt.report_dirs.empty()) {
    std::cerr << "mnlb: report needs at least one run directory\n";
    return kExitValidation;
  }

  // label by basename, falling back to the full path on collision
  std::vector<std::string> labels;
  for (const std::string& dir : opt.report_dirs) {
    fs::path p(dir);
    std::string base = p.filename().string();
    if (base.empty()) base = p.parent_path().filename().string();
    labels.push_back(base.empty() ? dir : base);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i] == labels[j]) {
        labels[i] = opt.report_dirs[i];
        labels[j] = opt.report_dirs[j];
      }
    }
  }

  std::vector<DirectoryAggregate> aggs;
  try {
    for (std::size_t i = 0; i < opt.report_dirs.size(); ++i) {
      aggs.push_back(aggregate_directory(opt.report_dirs[i], labels[i]));
    }
  } catch (const ConfigError& e) {
    std::cerr << "mnlb: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "mnlb: " << e.what() << "\n";
    return kExitRuntime;
  }

  try {
    fs::path out_dir(opt.report_out);
    fs::create_directories(out_dir);

    std::ostringstream csv;
    csv << "series,round,regret_mean,regret_std,regret_lo,regret_hi,"
           "switches_mean,switches_std\n";
    std::vector<ChartSeries> regret_series, switch_series;
    for (const DirectoryAggregate& agg : aggs) {
      ChartSeries reg{agg.label, {}, {}, {}, {}};
      ChartSeries sw{agg.label, {}, {}, {}, {}};
      for (const AggregateRow& r : agg.rows) {
        csv << agg.label << ',' << r.round << ','
            << format_double(r.regret_mean) << ','
            << format_double(r.regret_std) << ','
            << format_double(r.regret_lo) << ','
            << format_double(r.regret_hi) << ','
            << format_double(r.switches_mean) << ','
            << format_double(r.switches_std) << "\n";
        double x = static_cast<double>(r.round);
        reg.x.push_back(x);
        reg.y.push_back(r.regret_mean);
        reg.lo.push_back(r.regret_lo);
        reg.hi.push_back(r.regret_hi);
        sw.x.push_back(x);
        sw.y.push_back(r.switches_mean);
        sw.lo.push_back(r.switches_mean - 2.0 * r.switches_std);
        sw.hi.push_back(r.switches_mean + 2.0 * r.switches_std);
      }
      regret_series.push_back(std::move(reg));
      switch_series.push_back(std::move(sw));
    }

    std::ofstream csv_out(out_dir / "report.csv", std::ios::binary);
    csv_out << csv.str();
    if (!csv_out) throw std::runtime_error("cannot write report.csv");
    write_line_chart_svg(out_dir / "regret.svg",
                         "Cumulative regret (mean +/- 2 std)", "round",
                         "cumulative regret", regret_series);
    write_line_chart_svg(out_dir / "switches.svg",
                         "Policy updates (mean +/- 2 std)", "round",
                         "cumulative policy updates", switch_series);
  } catch (const std::exception& e) {
    std::cerr << "mnlb: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_verify(const CliOptions& opt) {
  VerifyOptions vopts;
  vopts.switch_budget_factor = opt.switch_budget_factor;
  VerifyReport report;
  try {
    report = verify_suite(opt.suite, opt.seed, vopts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "mnlb: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "mnlb: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::cout << format_report(report);
  return report.all_pass() ? kExitOk : kExitInvariant;
}

}  // namespace mnlb
