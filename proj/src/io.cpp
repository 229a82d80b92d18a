#include "tcblran/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace tcblran::io {

namespace {

void check_schema(const json& j, const char* kind) {
  if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSchemaVersion) {
    throw ConfigError(std::string(kind) + ": unsupported or missing schema_version");
  }
  if (j.value("kind", std::string()) != kind) {
    throw ConfigError(std::string("expected a ") + kind + " container, got '" +
                      j.value("kind", std::string("?")) + "'");
  }
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json series_to_json(const std::vector<double>& s) {
  json arr = json::array();
  for (double v : s) arr.push_back(std::isnan(v) ? json(nullptr) : json(v));
  return arr;
}

std::vector<double> series_from_json(const json& j) {
  std::vector<double> out;
  for (const auto& v : j) {
    out.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
  }
  return out;
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index k = 0; k < m.size(); ++k) data.push_back(m.data()[k]);
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ConfigError("matrix: data length does not match " + shape_string(rows, cols));
  }
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = data[static_cast<std::size_t>(k)].get<double>();
  return m;
}

json dataset_to_json(const Dataset& ds) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "dataset"},
          {"system", ds.system_name},
          {"dt", ds.dt},
          {"lift_seed", ds.lift.seed},
          {"control_seed", ds.control_seed},
          {"noise_seed", ds.noise_seed},
          {"snr_db", optional_to_json(ds.snr_db)},
          {"n_train", ds.n_train},
          {"lift", matrix_to_json(ds.lift.q)},
          {"clean_states", matrix_to_json(ds.clean_states)},
          {"controls", matrix_to_json(ds.controls)},
          {"lifted_states", matrix_to_json(ds.lifted_states)}};
}

Dataset dataset_from_json(const json& j) {
  check_schema(j, "dataset");
  Dataset ds;
  ds.system_name = j.at("system").get<std::string>();
  ds.dt = j.at("dt").get<double>();
  ds.lift.seed = j.at("lift_seed").get<std::uint64_t>();
  ds.lift.q = matrix_from_json(j.at("lift"));
  ds.control_seed = j.at("control_seed").get<std::uint64_t>();
  ds.noise_seed = j.at("noise_seed").get<std::uint64_t>();
  ds.snr_db = optional_from_json(j.at("snr_db"));
  ds.n_train = j.at("n_train").get<std::size_t>();
  ds.clean_states = matrix_from_json(j.at("clean_states"));
  ds.controls = matrix_from_json(j.at("controls"));
  ds.lifted_states = matrix_from_json(j.at("lifted_states"));
  ds.lifted_clean = ds.lift.q * ds.clean_states;
  return ds;
}

json checkpoint_to_json(const Checkpoint& ck) {
  const Architecture& a = ck.params.arch();
  json tensors = json::array();
  for (std::size_t i = 0; i < ck.params.tensors().size(); ++i) {
    json t = matrix_to_json(ck.params[i]);
    t["name"] = slot_name(i);
    tensors.push_back(std::move(t));
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "checkpoint"},
          {"architecture",
           {{"input_dim", a.input_dim},
            {"latent_dim", a.latent_dim},
            {"encoder_hidden", a.encoder_hidden},
            {"decoder_hidden", a.decoder_hidden},
            {"input_count", a.input_count},
            {"activation", std::string(to_string(a.activation))}}},
          {"seed", ck.seed},
          {"epochs", ck.epochs},
          {"config", ck.config},
          {"tensors", std::move(tensors)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  check_schema(j, "checkpoint");
  const json& ja = j.at("architecture");
  Architecture a;
  a.input_dim = ja.at("input_dim").get<Eigen::Index>();
  a.latent_dim = ja.at("latent_dim").get<Eigen::Index>();
  a.encoder_hidden = ja.at("encoder_hidden").get<Eigen::Index>();
  a.decoder_hidden = ja.at("decoder_hidden").get<Eigen::Index>();
  a.input_count = ja.at("input_count").get<Eigen::Index>();
  a.activation = activation_from_string(ja.at("activation").get<std::string>());
  Checkpoint ck;
  ck.params = ModelParams(a);
  const json& tensors = j.at("tensors");
  if (tensors.size() != ck.params.tensors().size()) {
    throw ConfigError("checkpoint: expected " + std::to_string(ck.params.tensors().size()) +
                      " tensors, found " + std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Matrix m = matrix_from_json(tensors[i]);
    if (m.rows() != ck.params[i].rows() || m.cols() != ck.params[i].cols()) {
      throw ConfigError("checkpoint: tensor " + slot_name(i) + " has shape " + shape_of(m) +
                        ", architecture requires " + shape_of(ck.params[i]));
    }
    ck.params[i] = std::move(m);
  }
  ck.seed = j.at("seed").get<std::uint64_t>();
  ck.epochs = j.at("epochs").get<std::size_t>();
  ck.config = j.value("config", json::object());
  return ck;
}

json metadata_to_json(const ReportMetadata& m) {
  return {{"system", m.system},
          {"snr_db", optional_to_json(m.snr_db)},
          {"n_train", m.n_train},
          {"model_kind", m.model_kind},
          {"seed", m.seed}};
}

json stats_to_json(const SummaryStats& s) {
  return {{"median", s.median}, {"mean", s.mean}, {"std", s.stddev}, {"count", s.count}};
}

json report_to_json(const EvalReport& r) {
  json series = json::array();
  for (const auto& s : r.series) series.push_back(series_to_json(s));
  return {{"schema_version", kSchemaVersion},
          {"kind", "eval_report"},
          {"meta", metadata_to_json(r.meta)},
          {"dt", r.dt},
          {"control_seed", r.control_seed},
          {"ic_indices", r.ic_indices},
          {"time_averaged", r.time_averaged},
          {"stats", stats_to_json(r.stats())},
          {"series", std::move(series)}};
}

EvalReport report_from_json(const json& j) {
  check_schema(j, "eval_report");
  EvalReport r;
  const json& m = j.at("meta");
  r.meta.system = m.at("system").get<std::string>();
  r.meta.snr_db = optional_from_json(m.at("snr_db"));
  r.meta.n_train = m.at("n_train").get<std::size_t>();
  r.meta.model_kind = m.at("model_kind").get<std::string>();
  r.meta.seed = m.at("seed").get<std::uint64_t>();
  r.dt = j.at("dt").get<double>();
  r.control_seed = j.at("control_seed").get<std::uint64_t>();
  r.ic_indices = j.at("ic_indices").get<std::vector<std::size_t>>();
  r.time_averaged = j.at("time_averaged").get<std::vector<double>>();
  for (const auto& s : j.at("series")) r.series.push_back(series_from_json(s));
  if (r.series.size() != r.ic_indices.size() || r.time_averaged.size() != r.ic_indices.size()) {
    throw ConfigError("eval_report: series, averages and initial conditions disagree in count");
  }
  return r;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

}  // namespace tcblran::io
