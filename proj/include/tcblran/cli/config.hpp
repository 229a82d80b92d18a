#pragma once

#include "tcblran/evaluation.hpp"
#include "tcblran/training.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tcblran::cli {

enum class ModelKind { tcblran, blran };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

struct ExperimentConfig {
  DatasetConfig data;
  double t_span = 220.0;  // seconds of simulated data, t_span / dt samples
  TrainingSetup setup;
  EvalConfig eval;
  ModelKind model_kind = ModelKind::tcblran;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t threads = 1;
  std::filesystem::path output_dir;  // empty: derived from the output root

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// Short identifier such as "pendulum-20db-blran-n32".
  std::string run_name() const;
};

/// Hyperparameters of the reference experiments for one system, noise
/// setting and model kind. Any SNR selects the noisy column.
ExperimentConfig table_defaults(SystemKind system, bool noisy, ModelKind kind);

/// "<system>-<clean|20db>-<tcblran|blran>", e.g. "vdp-20db-blran".
ExperimentConfig preset(std::string_view name);
std::vector<std::string> preset_names();

/// Every key accepted by set_value, in echo order.
const std::vector<std::string>& known_keys();

void set_value(ExperimentConfig& config, std::string_view key, std::string_view value);
std::string get_value(const ExperimentConfig& config, std::string_view key);

/// key = value lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text,
                                                                  std::string_view origin);

/// Merges file entries with "key=value" overrides (overrides win). The
/// system, model kind and noise setting select the defaults that the
/// remaining keys modify; a "preset" key supplies all three at once.
ExperimentConfig parse_config_text(std::string_view text,
                                   const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides = {});
ExperimentConfig parse_overrides(const std::vector<std::string>& overrides);

/// Canonical, re-parseable echo of every key except run.output_dir.
std::string to_text(const ExperimentConfig& config);

/// TCBLRAN_OUTPUT_ROOT if set, otherwise "runs".
std::filesystem::path default_output_root();
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

}  // namespace tcblran::cli
