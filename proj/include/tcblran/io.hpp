#pragma once

// JSON containers for datasets, checkpoints and evaluation reports. Every
// container carries a schema version; doubles are written in shortest
// round-trip form so that loading reproduces the exact bits.

#include "tcblran/datagen.hpp"
#include "tcblran/evaluation.hpp"
#include "tcblran/model.hpp"

#include <json.hpp>

#include <filesystem>

namespace tcblran::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

json dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const json& j);

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  json config;  // echo of the producing configuration
};

json checkpoint_to_json(const Checkpoint& ck);
Checkpoint checkpoint_from_json(const json& j);

json report_to_json(const EvalReport& report);
EvalReport report_from_json(const json& j);

json stats_to_json(const SummaryStats& s);
json metadata_to_json(const ReportMetadata& m);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace tcblran::io
