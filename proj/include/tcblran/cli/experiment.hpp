#pragma once

#include "tcblran/cli/config.hpp"
#include "tcblran/io.hpp"

#include <filesystem>
#include <optional>

namespace tcblran::cli {

struct StageRecord {
  std::optional<std::uint64_t> seed;  // empty for run-level stages
  std::string stage;                  // dataset, train, evaluate, summary
  std::string status;                 // ok, config_error, numeric_error, error
  std::string message;
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<EvalReport> reports;  // seeds that finished evaluation, in seed order
  std::optional<AggregateSummary> summary;
  std::vector<StageRecord> stages;

  bool ok() const;
  bool has_status(std::string_view status) const;
};

struct RunOptions {
  bool evaluate = true;
  bool plots = true;
};

/// Per seed: dataset -> train -> checkpoint -> evaluate -> report, then the
/// aggregate summary. Stage failures land in manifest.json; finished seeds
/// keep their files. Throws ConfigError only for an invalid config.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Re-evaluates every checkpoint of a finished run. Overrides apply on top of
/// the stored config echo (typically eval.* keys).
RunResult evaluate_run(const std::filesystem::path& run_dir,
                       const std::vector<std::string>& overrides = {});

Dataset build_experiment_dataset(const ExperimentConfig& config);
ReportMetadata metadata_for(const ExperimentConfig& config, std::uint64_t seed);

/// Config echo as a JSON object of key -> value text.
io::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const io::json& j);
/// '#'-prefixed lines carrying the schema version, file kind and config echo.
std::string comment_header(const ExperimentConfig& config, std::string_view kind);

std::string seed_dir_name(std::uint64_t seed);
ExperimentConfig load_run_config(const std::filesystem::path& run_dir);
std::vector<EvalReport> load_reports(const std::filesystem::path& run_dir);

struct SweepRow {
  std::size_t n_train = 0;
  ModelKind kind = ModelKind::tcblran;
  std::filesystem::path dir;
  std::optional<SummaryStats> stats;  // empty when the run failed
};

/// One run per (config, n_train); configs usually differ only in model kind.
/// Writes sweep.csv and sweep.svg into out_dir.
std::vector<SweepRow> sweep(const std::vector<ExperimentConfig>& configs,
                            const std::vector<std::size_t>& n_train_values,
                            const std::filesystem::path& out_dir);

struct RunComparison {
  Comparison comparison;
  io::json json;  // includes both config echoes
};

RunComparison compare_runs(const std::filesystem::path& run_a, const std::filesystem::path& run_b);
std::string format_comparison(const Comparison& c);

/// Median relative error against time for each run, one line per run.
void plot_error_vs_time(const std::vector<std::filesystem::path>& runs,
                        const std::filesystem::path& svg_path);

}  // namespace tcblran::cli
