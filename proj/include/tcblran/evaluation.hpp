#pragma once

#include "tcblran/datagen.hpp"
#include "tcblran/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace tcblran {

struct EvalConfig {
  double horizon = 25.0;  // seconds
  std::size_t n_ics = 30;
  std::uint64_t control_seed = 1000;
  double control_lo = -0.15;
  double control_hi = 0.15;

  /// Number of error samples, horizon / dt. Throws ConfigError unless the
  /// ratio is integral.
  std::size_t series_length(double dt) const;
  /// Control seed used for the rollout from the ic-th initial condition.
  std::uint64_t control_seed_for(std::size_t ic) const { return control_seed + ic; }
};

/// Produces controls.size() + 1 true states in original coordinates.
using TruthSimulator =
    std::function<VectorSequence(const Vector& x0, const VectorSequence& controls)>;

TruthSimulator rk4_truth(ControlAffineSystem system, double dt);

/// ||pred_k - truth_k|| / ||truth_k||. Entries whose truth has zero norm are
/// NaN and reported once on stderr.
std::vector<double> relative_error_series(const VectorSequence& pred,
                                          const VectorSequence& truth);

/// Mean of the series, skipping NaN entries.
double time_averaged_relative_error(const std::vector<double>& series);

struct ReportMetadata {
  std::string system;
  std::optional<double> snr_db;
  std::size_t n_train = 0;
  std::string model_kind;
  std::uint64_t seed = 0;

  /// Same configuration apart from the training seed.
  bool same_configuration(const ReportMetadata& other) const;
  std::string describe() const;
};

struct SummaryStats {
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t count = 0;
};

/// Order-independent statistics (values are sorted before reduction).
SummaryStats summarize(std::vector<double> values);

struct EvalReport {
  ReportMetadata meta;
  double dt = 0.0;
  std::uint64_t control_seed = 0;
  std::vector<std::size_t> ic_indices;
  std::vector<std::vector<double>> series;
  std::vector<double> time_averaged;

  SummaryStats stats() const { return summarize(time_averaged); }
};

/// Rolls the model out from each of the last n_ics training samples under
/// fresh random controls and scores it against the simulated truth in the
/// original state space.
EvalReport evaluate_model(const ModelParams& params, const TruthSimulator& truth,
                          const Dataset& dataset, const EvalConfig& config,
                          ReportMetadata meta);

struct AggregateSummary {
  ReportMetadata meta;  // seed field is meaningless here
  std::vector<std::uint64_t> seeds;
  SummaryStats stats;  // pooled over ICs x seeds
};

AggregateSummary aggregate_seeds(const std::vector<EvalReport>& reports);

struct Comparison {
  ReportMetadata meta_a;
  ReportMetadata meta_b;
  SummaryStats a;
  SummaryStats b;
  double median_difference = 0.0;  // a - b
  double mean_difference = 0.0;
  double win_rate = 0.0;           // share of pairs where a beats b, ties count half
  std::size_t pairs = 0;
};

/// Paired comparison over (seed, initial condition); both sides must share
/// system, noise level, N_train and evaluation controls.
Comparison compare_reports(const std::vector<EvalReport>& a, const std::vector<EvalReport>& b);

}  // namespace tcblran
