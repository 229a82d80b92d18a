#include "tcblran/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>

namespace tcblran {

std::size_t EvalConfig::series_length(double dt) const {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("eval: horizon and dt must be positive");
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 1.0) {
    throw ConfigError("eval.horizon (" + std::to_string(horizon) +
                      ") is not an integral multiple of dt (" + std::to_string(dt) + ")");
  }
  return static_cast<std::size_t>(rounded);
}

TruthSimulator rk4_truth(ControlAffineSystem system, double dt) {
  return [system = std::move(system), dt](const Vector& x0, const VectorSequence& controls) {
    if (controls.empty()) return VectorSequence{x0};
    return simulate(system, x0, controls, dt).states;
  };
}

std::vector<double> relative_error_series(const VectorSequence& pred,
                                          const VectorSequence& truth) {
  if (pred.size() != truth.size()) {
    throw InvalidArgument("relative_error_series: " + std::to_string(pred.size()) +
                          " predictions vs " + std::to_string(truth.size()) + " truth states");
  }
  std::vector<double> out;
  out.reserve(pred.size());
  std::size_t excluded = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (pred[k].size() != truth[k].size()) {
      throw InvalidArgument("relative_error_series: dimension mismatch at step " +
                            std::to_string(k));
    }
    const double denom = truth[k].norm();
    if (denom == 0.0) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      ++excluded;
      continue;
    }
    out.push_back((pred[k] - truth[k]).norm() / denom);
  }
  if (excluded > 0) {
    std::cerr << "warning: relative_error_series excluded " << excluded
              << " step(s) with zero-norm truth\n";
  }
  return out;
}

double time_averaged_relative_error(const std::vector<double>& series) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : series) {
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  if (n == 0) throw InvalidArgument("time_averaged_relative_error: empty series");
  return sum / static_cast<double>(n);
}

bool ReportMetadata::same_configuration(const ReportMetadata& other) const {
  return system == other.system && snr_db == other.snr_db && n_train == other.n_train &&
         model_kind == other.model_kind;
}

std::string ReportMetadata::describe() const {
  return system + "/" + (snr_db ? std::to_string(*snr_db) + "dB" : std::string("clean")) +
         "/N_train=" + std::to_string(n_train) + "/" + model_kind;
}

SummaryStats summarize(std::vector<double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

EvalReport evaluate_model(const ModelParams& params, const TruthSimulator& truth,
                          const Dataset& dataset, const EvalConfig& config,
                          ReportMetadata meta) {
  const std::size_t length = config.series_length(dataset.dt);
  EvalReport report;
  report.meta = std::move(meta);
  report.dt = dataset.dt;
  report.control_seed = config.control_seed;
  report.ic_indices = dataset.eval_initial_indices(config.n_ics);

  for (std::size_t ic = 0; ic < report.ic_indices.size(); ++ic) {
    const auto sample = static_cast<Eigen::Index>(report.ic_indices[ic]);
    try {
      const VectorSequence controls = random_piecewise_control(
          config.control_seed_for(ic), length - 1, config.control_lo, config.control_hi);
      const Vector x0 = dataset.clean_states.col(sample);
      const VectorSequence truth_states = truth(x0, controls);
      const VectorSequence lifted_pred =
          predict_with_reconstruction(params, dataset.lifted_clean.col(sample), controls);
      VectorSequence pred;
      pred.reserve(lifted_pred.size());
      for (const auto& p : lifted_pred) pred.push_back(unlift(dataset.lift, p));
      report.series.push_back(relative_error_series(pred, truth_states));
      report.time_averaged.push_back(time_averaged_relative_error(report.series.back()));
    } catch (const NumericError& e) {
      throw NumericError("evaluation of initial condition " + std::to_string(ic) + " (sample " +
                         std::to_string(sample) + "): " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("evaluation of initial condition " + std::to_string(ic) +
                            " (sample " + std::to_string(sample) + "): " + e.what());
    }
  }
  return report;
}

AggregateSummary aggregate_seeds(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw InvalidArgument("aggregate_seeds: no reports");
  AggregateSummary out;
  out.meta = reports.front().meta;
  std::vector<double> pooled;
  for (const auto& r : reports) {
    if (!r.meta.same_configuration(out.meta)) {
      throw InvalidArgument("aggregate_seeds: mixed metadata " + r.meta.describe() + " vs " +
                            out.meta.describe());
    }
    out.seeds.push_back(r.meta.seed);
    pooled.insert(pooled.end(), r.time_averaged.begin(), r.time_averaged.end());
  }
  std::sort(out.seeds.begin(), out.seeds.end());
  out.stats = summarize(std::move(pooled));
  return out;
}

Comparison compare_reports(const std::vector<EvalReport>& a, const std::vector<EvalReport>& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("compare: both sides need reports");
  const auto& ma = a.front().meta;
  const auto& mb = b.front().meta;
  if (ma.system != mb.system || ma.snr_db != mb.snr_db || ma.n_train != mb.n_train) {
    throw InvalidArgument("compare: mismatched configurations " + ma.describe() + " vs " +
                          mb.describe());
  }
  Comparison c;
  c.meta_a = aggregate_seeds(a).meta;
  c.meta_b = aggregate_seeds(b).meta;

  std::map<std::pair<std::uint64_t, std::size_t>, double> lookup;
  for (const auto& r : b) {
    for (std::size_t i = 0; i < r.ic_indices.size(); ++i) {
      lookup[{r.meta.seed, r.ic_indices[i]}] = r.time_averaged[i];
    }
  }
  std::vector<double> va, vb;
  double wins = 0.0;
  for (const auto& r : a) {
    const auto other = std::find_if(b.begin(), b.end(), [&](const EvalReport& x) {
      return x.meta.seed == r.meta.seed;
    });
    if (other != b.end() && other->control_seed != r.control_seed) {
      throw InvalidArgument("compare: evaluation control seeds differ for seed " +
                            std::to_string(r.meta.seed));
    }
    for (std::size_t i = 0; i < r.ic_indices.size(); ++i) {
      auto it = lookup.find({r.meta.seed, r.ic_indices[i]});
      if (it == lookup.end()) continue;
      va.push_back(r.time_averaged[i]);
      vb.push_back(it->second);
      if (r.time_averaged[i] < it->second) {
        wins += 1.0;
      } else if (r.time_averaged[i] == it->second) {
        wins += 0.5;
      }
    }
  }
  if (va.empty()) throw InvalidArgument("compare: no shared (seed, initial condition) pairs");
  c.pairs = va.size();
  c.a = summarize(va);
  c.b = summarize(vb);
  c.median_difference = c.a.median - c.b.median;
  c.mean_difference = c.a.mean - c.b.mean;
  c.win_rate = wins / static_cast<double>(c.pairs);
  return c;
}

}  // namespace tcblran
