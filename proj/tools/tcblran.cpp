// Command-line front end: simulate | train | evaluate | compare | sweep | plot.

#include "tcblran/cli/experiment.hpp"
#include "tcblran/cli/svg.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace tcblran;
using namespace tcblran::cli;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct ConfigFlags {
  std::string config_file;
  std::string preset_name;
  std::vector<std::string> sets;
  std::string output;

  void attach(CLI::App& app) {
    app.add_option("-c,--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("-p,--preset", preset_name, "preset such as pendulum-clean-tcblran");
    app.add_option("-s,--set", sets, "override, e.g. --set train.epochs=10 (repeatable)");
    app.add_option("-o,--output", output, "output directory");
  }

  std::vector<std::string> overrides() const {
    std::vector<std::string> all;
    if (!preset_name.empty()) all.push_back("preset=" + preset_name);
    all.insert(all.end(), sets.begin(), sets.end());
    if (!output.empty()) all.push_back("run.output_dir=" + output);
    return all;
  }

  ExperimentConfig load(const std::vector<std::string>& extra = {}) const {
    auto all = overrides();
    all.insert(all.end(), extra.begin(), extra.end());
    return config_file.empty() ? parse_overrides(all) : parse_config(config_file, all);
  }
};

int exit_code_for(const RunResult& r) {
  if (r.ok()) return kExitOk;
  for (const auto& s : r.stages) {
    if (s.status != "ok") {
      std::cerr << "stage " << s.stage << (s.seed ? " (seed " + std::to_string(*s.seed) + ")" : "") << ": "
                << s.status << ": " << s.message << '\n';
    }
  }
  if (r.has_status("numeric_error")) return kExitNumeric;
  if (r.has_status("config_error")) return kExitConfig;
  return kExitFailure;
}

void print_summary(const RunResult& r) {
  std::cout << "run directory: " << r.dir.string() << '\n';
  if (r.summary) {
    const auto& s = r.summary->stats;
    std::cout << r.summary->meta.describe() << ": median " << s.median << ", mean " << s.mean << ", std "
              << s.stddev << " over " << s.count << " (seed, ic) pairs\n";
  }
}

int simulate_command(const ExperimentConfig& config) {
  const Dataset ds = build_experiment_dataset(config);
  const fs::path dir = resolve_output_dir(config);
  fs::create_directories(dir);
  io::json j = io::dataset_to_json(ds);
  j["config"] = config_to_json(config);
  io::write_json(dir / "dataset.json", j);

  std::ofstream csv(dir / "trajectory.csv");
  csv << comment_header(config, "trajectory") << "t";
  for (Eigen::Index i = 0; i < ds.clean_states.rows(); ++i) csv << ",x" << i + 1;
  csv << ",u\n";
  csv.precision(17);
  std::vector<Series> series(static_cast<std::size_t>(ds.clean_states.rows()));
  for (Eigen::Index n = 0; n < ds.clean_states.cols(); ++n) {
    const double t = static_cast<double>(n) * ds.dt;
    csv << t;
    for (Eigen::Index i = 0; i < ds.clean_states.rows(); ++i) {
      csv << ',' << ds.clean_states(i, n);
      auto& s = series[static_cast<std::size_t>(i)];
      s.label = "x" + std::to_string(i + 1);
      s.x.push_back(t);
      s.y.push_back(ds.clean_states(i, n));
    }
    csv << ',';
    if (n < ds.controls.cols()) csv << ds.controls(0, n);
    csv << '\n';
  }
  std::ofstream(dir / "trajectory.svg")
      << line_chart_svg(series, {std::string(to_string(config.data.system)) + " trajectory", "t [s]", "state"});
  std::cout << "wrote " << (dir / "dataset.json").string() << " and trajectory.csv (" << ds.size() << " samples)\n";
  return kExitOk;
}

std::vector<std::size_t> parse_sizes(const std::string& list) {
  std::vector<std::size_t> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("--values: expected comma-separated integers, got '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilinear Koopman autoencoders with temporal consistency for control-affine systems"};
  bool list_presets = false;
  app.add_flag("--list-presets", list_presets, "print preset names and exit");
  app.require_subcommand(0, 1);

  ConfigFlags sim_flags, train_flags, sweep_flags;

  auto* simulate = app.add_subcommand("simulate", "simulate, lift and store a dataset");
  sim_flags.attach(*simulate);

  auto* train = app.add_subcommand("train", "train and evaluate every seed, then aggregate");
  train_flags.attach(*train);
  bool no_eval = false;
  train->add_flag("--no-eval", no_eval, "stop after training and checkpointing");

  auto* evaluate = app.add_subcommand("evaluate", "re-evaluate the checkpoints of a finished run");
  std::string eval_run;
  std::vector<std::string> eval_sets;
  evaluate->add_option("run", eval_run, "run directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("-s,--set", eval_sets, "override, e.g. --set eval.horizon=10");

  auto* compare = app.add_subcommand("compare", "paired comparison of two evaluated runs");
  std::string run_a, run_b, compare_out;
  compare->add_option("run_a", run_a, "first run directory")->required()->check(CLI::ExistingDirectory);
  compare->add_option("run_b", run_b, "second run directory")->required()->check(CLI::ExistingDirectory);
  compare->add_option("-o,--output", compare_out, "write the comparison as JSON");

  auto* sweep_cmd = app.add_subcommand("sweep", "repeat a run over several training lengths");
  sweep_flags.attach(*sweep_cmd);
  std::string sweep_values = "32,64,128,256";
  std::string sweep_kinds;
  sweep_cmd->add_option("--values", sweep_values, "comma-separated N_train values")->capture_default_str();
  sweep_cmd->add_option("--kinds", sweep_kinds, "comma-separated model kinds (default: the config's)");

  auto* plot = app.add_subcommand("plot", "overlay error-vs-time curves of evaluated runs");
  std::vector<std::string> plot_runs;
  std::string plot_out = "error_vs_time.svg";
  plot->add_option("runs", plot_runs, "run directories")->required()->check(CLI::ExistingDirectory);
  plot->add_option("-o,--output", plot_out, "SVG path")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (list_presets) {
      for (const auto& name : preset_names()) std::cout << name << '\n';
      return kExitOk;
    }
    if (simulate->parsed()) return simulate_command(sim_flags.load());
    if (train->parsed()) {
      RunOptions options;
      options.evaluate = !no_eval;
      const RunResult r = run_experiment(train_flags.load(), options);
      print_summary(r);
      return exit_code_for(r);
    }
    if (evaluate->parsed()) {
      const RunResult r = evaluate_run(eval_run, eval_sets);
      print_summary(r);
      return exit_code_for(r);
    }
    if (compare->parsed()) {
      const RunComparison c = compare_runs(run_a, run_b);
      std::cout << format_comparison(c.comparison);
      if (!compare_out.empty()) io::write_json(compare_out, c.json);
      return kExitOk;
    }
    if (sweep_cmd->parsed()) {
      const ExperimentConfig base = sweep_flags.load();
      std::vector<ExperimentConfig> configs;
      if (sweep_kinds.empty()) {
        configs.push_back(base);
      } else {
        std::stringstream in(sweep_kinds);
        std::string kind;
        while (std::getline(in, kind, ',')) configs.push_back(sweep_flags.load({"model.kind=" + kind}));
      }
      const fs::path out = sweep_flags.output.empty() ? default_output_root() / ("sweep-" + base.run_name())
                                                      : fs::path(sweep_flags.output);
      const auto rows = sweep(configs, parse_sizes(sweep_values), out);
      for (const auto& r : rows) {
        std::cout << "N_train=" << r.n_train << ' ' << to_string(r.kind) << ": ";
        if (r.stats) {
          std::cout << "median " << r.stats->median << '\n';
        } else {
          std::cout << "failed (see " << (r.dir / "manifest.json").string() << ")\n";
        }
      }
      std::cout << "wrote " << (out / "sweep.csv").string() << '\n';
      return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.stats.has_value(); })
                 ? kExitOk
                 : kExitFailure;
    }
    if (plot->parsed()) {
      std::vector<fs::path> runs(plot_runs.begin(), plot_runs.end());
      plot_error_vs_time(runs, plot_out);
      std::cout << "wrote " << plot_out << '\n';
      return kExitOk;
    }
    std::cerr << app.help();
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
