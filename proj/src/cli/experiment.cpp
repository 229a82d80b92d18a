#include "tcblran/cli/experiment.hpp"

#include "tcblran/cli/svg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace tcblran::cli {

namespace fs = std::filesystem;
using io::json;

bool RunResult::ok() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageRecord& s) { return s.status == "ok"; });
}

bool RunResult::has_status(std::string_view status) const {
  return std::any_of(stages.begin(), stages.end(), [&](const StageRecord& s) { return s.status == status; });
}

Dataset build_experiment_dataset(const ExperimentConfig& config) { return build_dataset(config.data); }

ReportMetadata metadata_for(const ExperimentConfig& config, std::uint64_t seed) {
  ReportMetadata m;
  m.system = std::string(to_string(config.data.system));
  m.snr_db = config.data.snr_db;
  m.n_train = config.data.n_train;
  m.model_kind = std::string(to_string(config.model_kind));
  m.seed = seed;
  return m;
}

json config_to_json(const ExperimentConfig& config) {
  json j = json::object();
  for (const auto& key : known_keys()) {
    if (key != "run.output_dir") j[key] = get_value(config, key);
  }
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  std::string text;
  for (const auto& [key, value] : j.items()) text += key + " = " + value.get<std::string>() + "\n";
  return parse_config_text(text);
}

std::string comment_header(const ExperimentConfig& config, std::string_view kind) {
  std::string out = "# schema_version = " + std::to_string(io::kSchemaVersion) + "\n";
  out += "# kind = " + std::string(kind) + "\n";
  std::istringstream echo(to_text(config));
  std::string line;
  while (std::getline(echo, line)) out += "# " + line + "\n";
  return out;
}

std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

namespace {

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

void write_history(const fs::path& path, const TrainingHistory& history, const ExperimentConfig& config) {
  std::ostringstream out;
  out << comment_header(config, "history");
  history.write_csv(out);
  write_text(path, out.str());
}

void write_errors(const fs::path& path, const EvalReport& report, const ExperimentConfig& config) {
  std::ostringstream out;
  out << comment_header(config, "errors") << "ic,t,rel_error\n";
  for (std::size_t ic = 0; ic < report.series.size(); ++ic) {
    for (std::size_t k = 0; k < report.series[ic].size(); ++k) {
      out << ic << ',' << format_value(static_cast<double>(k) * report.dt) << ','
          << format_value(report.series[ic][k]) << '\n';
    }
  }
  write_text(path, out.str());
}

json report_with_config(const EvalReport& report, const ExperimentConfig& config) {
  json j = io::report_to_json(report);
  j["config"] = config_to_json(config);
  return j;
}

std::string status_for(const std::exception_ptr& error, std::string& message) {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError& e) {
    message = e.what();
    return "config_error";
  } catch (const NumericError& e) {
    message = e.what();
    return "numeric_error";
  } catch (const std::exception& e) {
    message = e.what();
    return "error";
  }
}

StageRecord record(std::optional<std::uint64_t> seed, std::string stage, const std::exception_ptr& error = nullptr) {
  StageRecord r{seed, std::move(stage), "ok", ""};
  if (error) r.status = status_for(error, r.message);
  return r;
}

TruthSimulator truth_for(const ExperimentConfig& config) {
  return rk4_truth(ControlAffineSystem::by_kind(config.data.system), config.data.dt);
}

// Median over all (seed, ic) series at each time step.
Series median_curve(const std::vector<EvalReport>& reports, std::string label) {
  Series s;
  s.label = std::move(label);
  if (reports.empty()) return s;
  std::size_t length = 0;
  for (const auto& r : reports)
    for (const auto& series : r.series) length = std::max(length, series.size());
  for (std::size_t k = 0; k < length; ++k) {
    std::vector<double> values;
    for (const auto& r : reports)
      for (const auto& series : r.series)
        if (k < series.size() && !std::isnan(series[k])) values.push_back(series[k]);
    s.x.push_back(static_cast<double>(k) * reports.front().dt);
    s.y.push_back(values.empty() ? std::nan("") : summarize(values).median);
  }
  return s;
}

json manifest_json(const ExperimentConfig& config, const RunResult& result) {
  json stages = json::array();
  for (const auto& s : result.stages) {
    stages.push_back({{"seed", s.seed ? json(*s.seed) : json(nullptr)},
                      {"stage", s.stage},
                      {"status", s.status},
                      {"message", s.message}});
  }
  return {{"schema_version", io::kSchemaVersion},
          {"kind", "manifest"},
          {"status", result.ok() ? "ok" : "failed"},
          {"config", config_to_json(config)},
          {"stages", std::move(stages)}};
}

json summary_json(const ExperimentConfig& config, const AggregateSummary& summary,
                  const std::vector<EvalReport>& reports) {
  json per_seed = json::array();
  for (const auto& r : reports) {
    per_seed.push_back({{"seed", r.meta.seed}, {"stats", io::stats_to_json(r.stats())}});
  }
  json meta = io::metadata_to_json(summary.meta);
  meta.erase("seed");
  return {{"schema_version", io::kSchemaVersion},
          {"kind", "summary"},
          {"config", config_to_json(config)},
          {"meta", meta},
          {"seeds", summary.seeds},
          {"stats", io::stats_to_json(summary.stats)},
          {"per_seed", std::move(per_seed)}};
}

void write_plots(const fs::path& dir, const ExperimentConfig& config, const std::vector<EvalReport>& reports,
                 const std::vector<std::pair<std::uint64_t, TrainingHistory>>& histories) {
  if (!reports.empty()) {
    write_text(dir / "error_vs_time.svg",
               line_chart_svg({median_curve(reports, config.run_name())},
                              {"Relative prediction error with time (median over ICs and seeds)", "t [s]",
                               "relative error"},
                              true));
  }
  if (!histories.empty()) {
    std::vector<Series> curves;
    for (const auto& [seed, history] : histories) {
      Series s;
      s.label = "seed " + std::to_string(seed);
      for (const auto& e : history.epochs) {
        s.x.push_back(static_cast<double>(e.epoch));
        s.y.push_back(e.losses.total);
      }
      curves.push_back(std::move(s));
    }
    write_text(dir / "loss_history.svg", line_chart_svg(curves, {"Training loss", "epoch", "L_tot"}, true));
  }
}

EvalReport evaluate_seed(const ExperimentConfig& config, const Dataset& dataset, const ModelParams& params,
                         std::uint64_t seed, const fs::path& seed_dir) {
  EvalReport report = evaluate_model(params, truth_for(config), dataset, config.eval, metadata_for(config, seed));
  write_errors(seed_dir / "errors.csv", report, config);
  io::write_json(seed_dir / "report.json", report_with_config(report, config));
  return report;
}

// Fans the seeds out over worker threads; each worker owns its seed
// directory, the caller owns the run directory.
template <class Work>
void for_each_seed(const ExperimentConfig& config, Work work) {
  const std::size_t n = config.seeds.size();
  const std::size_t workers = std::min(config.threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) work(i);
    });
  }
  for (auto& t : pool) t.join();
}

void finish_run(RunResult& result, const ExperimentConfig& config, bool plots,
                const std::vector<std::pair<std::uint64_t, TrainingHistory>>& histories) {
  if (!result.reports.empty()) {
    try {
      result.summary = aggregate_seeds(result.reports);
      io::write_json(result.dir / "summary.json", summary_json(config, *result.summary, result.reports));
      result.stages.push_back(record(std::nullopt, "summary"));
    } catch (...) {
      result.stages.push_back(record(std::nullopt, "summary", std::current_exception()));
    }
  }
  if (plots) {
    try {
      write_plots(result.dir, config, result.reports, histories);
    } catch (...) {
      result.stages.push_back(record(std::nullopt, "plot", std::current_exception()));
    }
  }
  io::write_json(result.dir / "manifest.json", manifest_json(config, result));
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  RunResult result;
  result.dir = resolve_output_dir(config);
  fs::create_directories(result.dir);
  write_text(result.dir / "config.txt", comment_header(config, "config") + to_text(config));

  Dataset dataset;
  try {
    dataset = build_experiment_dataset(config);
    result.stages.push_back(record(std::nullopt, "dataset"));
  } catch (...) {
    result.stages.push_back(record(std::nullopt, "dataset", std::current_exception()));
    io::write_json(result.dir / "manifest.json", manifest_json(config, result));
    return result;
  }

  const std::size_t n = config.seeds.size();
  std::vector<std::vector<StageRecord>> stages(n);
  std::vector<std::optional<EvalReport>> reports(n);
  std::vector<std::optional<TrainingHistory>> histories(n);

  for_each_seed(config, [&](std::size_t i) {
    const std::uint64_t seed = config.seeds[i];
    const fs::path seed_dir = result.dir / seed_dir_name(seed);
    std::optional<TrainResult> trained;
    try {
      TrainingSetup setup = config.setup;
      setup.trainer.seed = seed;
      trained = train(setup, dataset);
      write_history(seed_dir / "history.csv", trained->history, config);
      io::write_json(seed_dir / "checkpoint.json",
                     io::checkpoint_to_json({trained->params, seed, setup.trainer.epochs, config_to_json(config)}));
      histories[i] = trained->history;
      stages[i].push_back(record(seed, "train"));
    } catch (...) {
      stages[i].push_back(record(seed, "train", std::current_exception()));
      return;
    }
    if (!options.evaluate) return;
    try {
      reports[i] = evaluate_seed(config, dataset, trained->params, seed, seed_dir);
      stages[i].push_back(record(seed, "evaluate"));
    } catch (...) {
      stages[i].push_back(record(seed, "evaluate", std::current_exception()));
    }
  });

  std::vector<std::pair<std::uint64_t, TrainingHistory>> finished_histories;
  for (std::size_t i = 0; i < n; ++i) {
    result.stages.insert(result.stages.end(), stages[i].begin(), stages[i].end());
    if (reports[i]) result.reports.push_back(std::move(*reports[i]));
    if (histories[i]) finished_histories.emplace_back(config.seeds[i], std::move(*histories[i]));
  }
  finish_run(result, config, options.plots, finished_histories);
  return result;
}

ExperimentConfig load_run_config(const fs::path& run_dir) {
  std::ifstream in(run_dir / "config.txt");
  if (!in) throw ConfigError("no config.txt in " + run_dir.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig config = parse_config_text(text.str());
  config.output_dir = run_dir;
  return config;
}

RunResult evaluate_run(const fs::path& run_dir, const std::vector<std::string>& overrides) {
  std::ifstream in(run_dir / "config.txt");
  if (!in) throw ConfigError("no config.txt in " + run_dir.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig config = parse_config_text(text.str(), overrides);
  config.output_dir = run_dir;

  RunResult result;
  result.dir = run_dir;
  Dataset dataset;
  try {
    dataset = build_experiment_dataset(config);
    result.stages.push_back(record(std::nullopt, "dataset"));
  } catch (...) {
    result.stages.push_back(record(std::nullopt, "dataset", std::current_exception()));
    io::write_json(result.dir / "manifest.json", manifest_json(config, result));
    return result;
  }
  for (const std::uint64_t seed : config.seeds) {
    const fs::path seed_dir = run_dir / seed_dir_name(seed);
    try {
      const io::Checkpoint ck = io::checkpoint_from_json(io::read_json(seed_dir / "checkpoint.json"));
      result.reports.push_back(evaluate_seed(config, dataset, ck.params, seed, seed_dir));
      result.stages.push_back(record(seed, "evaluate"));
    } catch (...) {
      result.stages.push_back(record(seed, "evaluate", std::current_exception()));
    }
  }
  write_text(run_dir / "config.txt", comment_header(config, "config") + to_text(config));
  finish_run(result, config, true, {});
  return result;
}

std::vector<EvalReport> load_reports(const fs::path& run_dir) {
  const ExperimentConfig config = load_run_config(run_dir);
  std::vector<EvalReport> out;
  for (const std::uint64_t seed : config.seeds) {
    const fs::path path = run_dir / seed_dir_name(seed) / "report.json";
    if (fs::exists(path)) out.push_back(io::report_from_json(io::read_json(path)));
  }
  if (out.empty()) throw ConfigError("no evaluation reports under " + run_dir.string());
  return out;
}

std::vector<SweepRow> sweep(const std::vector<ExperimentConfig>& configs,
                            const std::vector<std::size_t>& n_train_values, const fs::path& out_dir) {
  if (configs.empty() || n_train_values.empty()) throw ConfigError("sweep: nothing to run");
  std::vector<SweepRow> rows;
  for (const std::size_t n_train : n_train_values) {
    for (const auto& base : configs) {
      ExperimentConfig config = base;
      config.data.n_train = n_train;
      config.output_dir = out_dir / config.run_name();
      config.validate();
      SweepRow row{n_train, config.model_kind, config.output_dir, std::nullopt};
      const RunResult result = run_experiment(config);
      if (result.summary) row.stats = result.summary->stats;
      rows.push_back(row);
    }
  }

  std::ostringstream csv;
  csv << comment_header(configs.front(), "sweep") << "n_train,model_kind,median,mean,std,count,run\n";
  for (const auto& r : rows) {
    csv << r.n_train << ',' << to_string(r.kind) << ',';
    if (r.stats) {
      csv << format_value(r.stats->median) << ',' << format_value(r.stats->mean) << ','
          << format_value(r.stats->stddev) << ',' << r.stats->count;
    } else {
      csv << "nan,nan,nan,0";
    }
    csv << ',' << r.dir.filename().string() << '\n';
  }
  write_text(out_dir / "sweep.csv", csv.str());

  std::vector<std::string> legend;
  for (const auto& c : configs) legend.emplace_back(to_string(c.model_kind));
  std::vector<BarGroup> groups;
  for (std::size_t v = 0; v < n_train_values.size(); ++v) {
    BarGroup g{"N_train=" + std::to_string(n_train_values[v]), {}};
    for (std::size_t c = 0; c < configs.size(); ++c) {
      const auto& r = rows[v * configs.size() + c];
      g.values.push_back(r.stats ? r.stats->median : std::nan(""));
    }
    groups.push_back(std::move(g));
  }
  write_text(out_dir / "sweep.svg",
             bar_chart_svg(groups, legend,
                           {"Time-average relative prediction error (median)", "training length",
                            "relative error"}));
  return rows;
}

RunComparison compare_runs(const fs::path& run_a, const fs::path& run_b) {
  const ExperimentConfig config_a = load_run_config(run_a);
  const ExperimentConfig config_b = load_run_config(run_b);
  RunComparison out;
  out.comparison = compare_reports(load_reports(run_a), load_reports(run_b));
  const Comparison& c = out.comparison;
  out.json = {{"schema_version", io::kSchemaVersion},
              {"kind", "comparison"},
              {"a", {{"run", run_a.string()}, {"meta", io::metadata_to_json(c.meta_a)}, {"stats", io::stats_to_json(c.a)},
                     {"config", config_to_json(config_a)}}},
              {"b", {{"run", run_b.string()}, {"meta", io::metadata_to_json(c.meta_b)}, {"stats", io::stats_to_json(c.b)},
                     {"config", config_to_json(config_b)}}},
              {"median_difference", c.median_difference},
              {"mean_difference", c.mean_difference},
              {"win_rate", c.win_rate},
              {"pairs", c.pairs}};
  out.json["a"]["meta"].erase("seed");
  out.json["b"]["meta"].erase("seed");
  return out;
}

std::string format_comparison(const Comparison& c) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-10s %12s %12s %12s %6s\n", "model", "median", "mean", "std", "n");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-10s %12.6g %12.6g %12.6g %6zu\n", c.meta_a.model_kind.c_str(), c.a.median,
                c.a.mean, c.a.stddev, c.a.count);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-10s %12.6g %12.6g %12.6g %6zu\n", c.meta_b.model_kind.c_str(), c.b.median,
                c.b.mean, c.b.stddev, c.b.count);
  out += buf;
  std::snprintf(buf, sizeof buf, "paired: median diff %.6g, mean diff %.6g, win rate %.3f over %zu pairs\n",
                c.median_difference, c.mean_difference, c.win_rate, c.pairs);
  out += buf;
  return out;
}

void plot_error_vs_time(const std::vector<fs::path>& runs, const fs::path& svg_path) {
  if (runs.empty()) throw ConfigError("plot: no runs given");
  std::vector<Series> curves;
  for (const auto& run : runs) curves.push_back(median_curve(load_reports(run), load_run_config(run).run_name()));
  write_text(svg_path, line_chart_svg(curves,
                                      {"Relative prediction error with time (median over ICs and seeds)",
                                       "t [s]", "relative error"},
                                      true));
}

}  // namespace tcblran::cli
