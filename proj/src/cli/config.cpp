#include "tcblran/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace tcblran::cli {

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::tcblran ? "tcblran" : "blran";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "tcblran") return ModelKind::tcblran;
  if (name == "blran") return ModelKind::blran;
  throw ConfigError("model.kind: expected tcblran or blran, got '" + std::string(name) + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(value)};
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(std::string(key) + ": expected a nonnegative integer, got '" + s + "'");
  }
  return v;
}

std::size_t parse_size(std::string_view key, std::string_view text) {
  return static_cast<std::size_t>(parse_unsigned(key, text));
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

template <class T>
std::string join(const std::vector<T>& values, const std::function<std::string(const T&)>& fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += fmt(values[i]);
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class Get>
Field real_field(std::string key, Get ref) {
  return {[key, ref](ExperimentConfig& c, std::string_view v) { ref(c) = parse_double(key, v); },
          [ref](const ExperimentConfig& c) {
            return format_double(ref(const_cast<ExperimentConfig&>(c)));
          }};
}

template <class Get>
Field size_field(std::string key, Get ref) {
  return {[key, ref](ExperimentConfig& c, std::string_view v) {
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(parse_unsigned(key, v));
          },
          [ref](const ExperimentConfig& c) {
            return std::to_string(ref(const_cast<ExperimentConfig&>(c)));
          }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["system"] = {[](ExperimentConfig& c, std::string_view v) {
                     try {
                       c.data.system = system_kind_from_string(trim(v));
                     } catch (const InvalidArgument& e) {
                       throw ConfigError(std::string("system: ") + e.what());
                     }
                   },
                   [](const ExperimentConfig& c) { return std::string(to_string(c.data.system)); }};
    t["model.kind"] = {
        [](ExperimentConfig& c, std::string_view v) { c.model_kind = model_kind_from_string(trim(v)); },
        [](const ExperimentConfig& c) { return std::string(to_string(c.model_kind)); }};

    t["data.x0"] = {[](ExperimentConfig& c, std::string_view v) {
                      const auto items = split_list(v);
                      if (items.empty()) throw ConfigError("data.x0: expected a comma-separated vector");
                      Vector x(static_cast<Eigen::Index>(items.size()));
                      for (std::size_t i = 0; i < items.size(); ++i)
                        x(static_cast<Eigen::Index>(i)) = parse_double("data.x0", items[i]);
                      c.data.x0 = x;
                    },
                    [](const ExperimentConfig& c) {
                      std::vector<double> v(c.data.x0.data(), c.data.x0.data() + c.data.x0.size());
                      return join<double>(v, format_double);
                    }};
    t["data.dt"] = real_field("data.dt", [](ExperimentConfig& c) -> double& { return c.data.dt; });
    t["data.t_span"] = real_field("data.t_span", [](ExperimentConfig& c) -> double& { return c.t_span; });
    t["data.lifted_dim"] = size_field("data.lifted_dim", [](ExperimentConfig& c) -> Eigen::Index& {
      return c.data.lifted_dim;
    });
    t["data.lift_seed"] = size_field("data.lift_seed", [](ExperimentConfig& c) -> std::uint64_t& {
      return c.data.lift_seed;
    });
    t["data.control_seed"] = size_field(
        "data.control_seed", [](ExperimentConfig& c) -> std::uint64_t& { return c.data.control_seed; });
    t["data.control_lo"] =
        real_field("data.control_lo", [](ExperimentConfig& c) -> double& { return c.data.control_lo; });
    t["data.control_hi"] =
        real_field("data.control_hi", [](ExperimentConfig& c) -> double& { return c.data.control_hi; });
    t["data.snr_db"] = {[](ExperimentConfig& c, std::string_view v) {
                          const std::string s = trim(v);
                          if (s == "none" || s == "clean") {
                            c.data.snr_db.reset();
                          } else {
                            c.data.snr_db = parse_double("data.snr_db", s);
                          }
                        },
                        [](const ExperimentConfig& c) {
                          return c.data.snr_db ? format_double(*c.data.snr_db) : std::string("none");
                        }};
    t["data.noise_seed"] = size_field("data.noise_seed", [](ExperimentConfig& c) -> std::uint64_t& {
      return c.data.noise_seed;
    });
    t["data.n_train"] =
        size_field("data.n_train", [](ExperimentConfig& c) -> std::size_t& { return c.data.n_train; });

    t["model.latent_dim"] = size_field("model.latent_dim", [](ExperimentConfig& c) -> Eigen::Index& {
      return c.setup.arch.latent_dim;
    });
    t["model.encoder_hidden"] = size_field(
        "model.encoder_hidden", [](ExperimentConfig& c) -> Eigen::Index& { return c.setup.arch.encoder_hidden; });
    t["model.decoder_hidden"] = size_field(
        "model.decoder_hidden", [](ExperimentConfig& c) -> Eigen::Index& { return c.setup.arch.decoder_hidden; });
    t["model.activation"] = {[](ExperimentConfig& c, std::string_view v) {
                               try {
                                 c.setup.arch.activation = activation_from_string(trim(v));
                               } catch (const InvalidArgument& e) {
                                 throw ConfigError(std::string("model.activation: ") + e.what());
                               }
                             },
                             [](const ExperimentConfig& c) {
                               return std::string(to_string(c.setup.arch.activation));
                             }};

    t["loss.gamma_id"] =
        real_field("loss.gamma_id", [](ExperimentConfig& c) -> double& { return c.setup.weights.gamma_id; });
    t["loss.gamma_fwd"] =
        real_field("loss.gamma_fwd", [](ExperimentConfig& c) -> double& { return c.setup.weights.gamma_fwd; });
    t["loss.gamma_tc"] =
        real_field("loss.gamma_tc", [](ExperimentConfig& c) -> double& { return c.setup.weights.gamma_tc; });
    t["loss.k_m"] = size_field("loss.k_m", [](ExperimentConfig& c) -> std::size_t& { return c.setup.weights.k_m; });
    t["loss.k_tm"] =
        size_field("loss.k_tm", [](ExperimentConfig& c) -> std::size_t& { return c.setup.weights.k_tm; });
    t["loss.batch_size"] = size_field(
        "loss.batch_size", [](ExperimentConfig& c) -> std::size_t& { return c.setup.weights.batch_size; });

    t["train.lr"] = real_field("train.lr", [](ExperimentConfig& c) -> double& { return c.setup.trainer.lr0; });
    t["train.lr_decay"] =
        real_field("train.lr_decay", [](ExperimentConfig& c) -> double& { return c.setup.trainer.lr_decay; });
    t["train.milestones"] = {[](ExperimentConfig& c, std::string_view v) {
                               std::vector<std::size_t> m;
                               for (const auto& item : split_list(v)) m.push_back(parse_size("train.milestones", item));
                               c.setup.trainer.milestones = m;
                             },
                             [](const ExperimentConfig& c) {
                               return join<std::size_t>(c.setup.trainer.milestones,
                                                        [](const std::size_t& x) { return std::to_string(x); });
                             }};
    t["train.weight_decay"] = real_field(
        "train.weight_decay", [](ExperimentConfig& c) -> double& { return c.setup.trainer.weight_decay; });
    t["train.grad_clip"] =
        real_field("train.grad_clip", [](ExperimentConfig& c) -> double& { return c.setup.trainer.grad_clip; });
    t["train.epochs"] =
        size_field("train.epochs", [](ExperimentConfig& c) -> std::size_t& { return c.setup.trainer.epochs; });

    t["eval.horizon"] = real_field("eval.horizon", [](ExperimentConfig& c) -> double& { return c.eval.horizon; });
    t["eval.n_ics"] = size_field("eval.n_ics", [](ExperimentConfig& c) -> std::size_t& { return c.eval.n_ics; });
    t["eval.control_seed"] = size_field(
        "eval.control_seed", [](ExperimentConfig& c) -> std::uint64_t& { return c.eval.control_seed; });
    t["eval.control_lo"] =
        real_field("eval.control_lo", [](ExperimentConfig& c) -> double& { return c.eval.control_lo; });
    t["eval.control_hi"] =
        real_field("eval.control_hi", [](ExperimentConfig& c) -> double& { return c.eval.control_hi; });

    t["run.seeds"] = {[](ExperimentConfig& c, std::string_view v) {
                        std::vector<std::uint64_t> seeds;
                        for (const auto& item : split_list(v)) seeds.push_back(parse_unsigned("run.seeds", item));
                        c.seeds = seeds;
                      },
                      [](const ExperimentConfig& c) {
                        return join<std::uint64_t>(c.seeds, [](const std::uint64_t& x) { return std::to_string(x); });
                      }};
    t["run.threads"] = size_field("run.threads", [](ExperimentConfig& c) -> std::size_t& { return c.threads; });
    t["run.output_dir"] = {[](ExperimentConfig& c, std::string_view v) { c.output_dir = trim(v); },
                           [](const ExperimentConfig& c) { return c.output_dir.string(); }};
    return t;
  }();
  return table;
}

struct PresetParts {
  SystemKind system;
  bool noisy;
  ModelKind kind;
};

PresetParts split_preset(std::string_view name) {
  const std::string s(name);
  const auto a = s.find('-');
  const auto b = a == std::string::npos ? a : s.find('-', a + 1);
  if (b == std::string::npos || s.find('-', b + 1) != std::string::npos) {
    throw ConfigError("preset: expected <system>-<clean|20db>-<tcblran|blran>, got '" + s + "'");
  }
  PresetParts p{};
  try {
    p.system = system_kind_from_string(s.substr(0, a));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("preset: ") + e.what());
  }
  const std::string noise = s.substr(a + 1, b - a - 1);
  if (noise == "clean") {
    p.noisy = false;
  } else if (noise == "20db") {
    p.noisy = true;
  } else {
    throw ConfigError("preset: noise level must be clean or 20db, got '" + noise + "'");
  }
  p.kind = model_kind_from_string(s.substr(b + 1));
  return p;
}

std::string short_system_name(SystemKind k) {
  return k == SystemKind::vanderpol ? "vdp" : std::string(to_string(k));
}

}  // namespace

ExperimentConfig table_defaults(SystemKind system, bool noisy, ModelKind kind) {
  ExperimentConfig c;
  c.data.system = system;
  c.data.x0 = (Vector(2) << 0.8, 0.0).finished();
  c.data.dt = 0.1;
  c.t_span = 220.0;
  c.data.n_points = 2200;
  c.data.lifted_dim = 64;
  if (noisy) c.data.snr_db = 20.0;
  c.model_kind = kind;

  auto& arch = c.setup.arch;
  auto& w = c.setup.weights;
  auto& tr = c.setup.trainer;
  arch.input_dim = 64;
  arch.latent_dim = 12;
  arch.input_count = 1;
  tr.lr0 = 0.01;
  tr.lr_decay = 0.5;
  tr.milestones = {30, 100, 200, 400};
  tr.grad_clip = 0.05;
  tr.epochs = 600;
  w.gamma_id = 1.0;
  w.k_tm = 2;

  const bool tc = kind == ModelKind::tcblran;
  switch (system) {
    case SystemKind::vanderpol:
      arch.encoder_hidden = arch.decoder_hidden = 192;
      w.k_m = 32;
      w.batch_size = 64;
      c.data.n_train = 256;
      tr.weight_decay = 1.0;
      if (noisy) {
        w.gamma_fwd = tc ? 2.0 : 1.0;
        w.gamma_tc = 2.0;
      } else {
        w.gamma_fwd = 1.0;
        w.gamma_tc = 0.01;
      }
      break;
    case SystemKind::duffing:
      arch.encoder_hidden = arch.decoder_hidden = 128;
      w.k_m = 12;
      w.batch_size = 32;
      c.data.n_train = 32;
      tr.weight_decay = noisy ? 1.0 : (tc ? 0.01 : 0.1);
      w.gamma_fwd = 2.0;
      w.gamma_tc = 0.5;
      break;
    case SystemKind::pendulum:
    default:
      arch.encoder_hidden = arch.decoder_hidden = 128;
      w.k_m = 12;
      w.batch_size = 32;
      c.data.n_train = 32;
      if (noisy) {
        tr.weight_decay = 1.0;
        w.gamma_fwd = 0.5;
        w.gamma_tc = 0.5;
      } else {
        tr.weight_decay = tc ? 0.1 : 0.01;
        w.gamma_fwd = tc ? 1.0 : 2.0;
        w.gamma_tc = 2.0;
      }
      break;
  }
  if (!tc) w.gamma_tc = 0.0;
  return c;
}

ExperimentConfig preset(std::string_view name) {
  const PresetParts p = split_preset(name);
  return table_defaults(p.system, p.noisy, p.kind);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const char* sys : {"pendulum", "vdp", "duffing"})
    for (const char* noise : {"clean", "20db"})
      for (const char* kind : {"tcblran", "blran"})
        out.push_back(std::string(sys) + "-" + noise + "-" + kind);
  return out;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "system",           "model.kind",        "data.x0",           "data.dt",
      "data.t_span",      "data.lifted_dim",   "data.lift_seed",    "data.control_seed",
      "data.control_lo",  "data.control_hi",   "data.snr_db",       "data.noise_seed",
      "data.n_train",     "model.latent_dim",  "model.encoder_hidden", "model.decoder_hidden",
      "model.activation", "loss.gamma_id",     "loss.gamma_fwd",    "loss.gamma_tc",
      "loss.k_m",         "loss.k_tm",         "loss.batch_size",   "train.lr",
      "train.lr_decay",   "train.milestones",  "train.weight_decay", "train.grad_clip",
      "train.epochs",     "eval.horizon",      "eval.n_ics",        "eval.control_seed",
      "eval.control_lo",  "eval.control_hi",   "run.seeds",         "run.threads",
      "run.output_dir"};
  return keys;
}

void set_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  const auto& table = fields();
  const auto it = table.find(std::string(key));
  if (it == table.end()) throw ConfigError("unknown key '" + std::string(key) + "'");
  it->second.set(config, value);
  // Keep the derived quantities in step with their sources.
  if (config.data.dt > 0.0) config.data.n_points = static_cast<std::size_t>(std::llround(config.t_span / config.data.dt));
  config.setup.arch.input_dim = config.data.lifted_dim;
}

std::string get_value(const ExperimentConfig& config, std::string_view key) {
  const auto& table = fields();
  const auto it = table.find(std::string(key));
  if (it == table.end()) throw ConfigError("unknown key '" + std::string(key) + "'");
  return it->second.get(config);
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text,
                                                                  std::string_view origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + trim(line) + "'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
    }
    out.emplace_back(std::move(key), trim(std::string_view(line).substr(eq + 1)));
  }
  return out;
}

ExperimentConfig parse_config_text(std::string_view text, const std::vector<std::string>& overrides) {
  auto entries = parse_key_values(text, "config");
  for (const auto& o : overrides) {
    const auto parsed = parse_key_values(o, "--set " + o);
    if (parsed.size() != 1) throw ConfigError("override must be key=value, got '" + o + "'");
    entries.push_back(parsed.front());
  }

  const auto& table = fields();
  for (const auto& [key, value] : entries) {
    if (key != "preset" && !table.count(key)) throw ConfigError("unknown key '" + key + "'");
  }

  // Pass 1: the keys that choose the defaults.
  std::optional<PresetParts> chosen;
  std::optional<SystemKind> system;
  std::optional<ModelKind> kind;
  std::optional<bool> noisy;
  for (const auto& [key, value] : entries) {
    if (key == "preset") {
      chosen = split_preset(value);
    } else if (key == "system") {
      ExperimentConfig probe;
      set_value(probe, key, value);
      system = probe.data.system;
    } else if (key == "model.kind") {
      kind = model_kind_from_string(value);
    } else if (key == "data.snr_db") {
      ExperimentConfig probe;
      set_value(probe, key, value);
      noisy = probe.data.snr_db.has_value();
    }
  }
  if (chosen) {
    if (!system) system = chosen->system;
    if (!kind) kind = chosen->kind;
    if (!noisy) noisy = chosen->noisy;
  }
  std::vector<std::string> missing;
  if (!system) missing.push_back("system");
  if (!kind) missing.push_back("model.kind");
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("missing required fields: " + list + " (or give a preset, one of " +
                      preset_names().front() + ", ...)");
  }

  // Pass 2: everything else modifies the selected defaults, in order.
  ExperimentConfig config = table_defaults(*system, noisy.value_or(false), *kind);
  for (const auto& [key, value] : entries) {
    if (key != "preset") set_value(config, key, value);
  }
  config.validate();
  return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), overrides);
}

ExperimentConfig parse_overrides(const std::vector<std::string>& overrides) {
  return parse_config_text("", overrides);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& what) {
    throw ConfigError(key + ": " + what);
  };
  if (!(data.dt > 0.0)) fail("data.dt", "must be positive");
  if (!(t_span > 0.0)) fail("data.t_span", "must be positive");
  const double samples = t_span / data.dt;
  if (std::abs(samples - std::round(samples)) > 1e-9 * std::max(1.0, samples)) {
    fail("data.t_span", "must be an integral multiple of data.dt");
  }
  if (static_cast<std::size_t>(std::llround(samples)) != data.n_points) {
    fail("data.t_span", "does not match " + std::to_string(data.n_points) + " samples");
  }
  if (data.x0.size() != 2) fail("data.x0", "expected 2 entries, got " + std::to_string(data.x0.size()));
  if (setup.arch.input_dim != data.lifted_dim) fail("data.lifted_dim", "does not match the model input");
  if (model_kind == ModelKind::blran && setup.weights.gamma_tc != 0.0) {
    fail("loss.gamma_tc", "must be 0 for model.kind=blran");
  }
  if (seeds.empty()) fail("run.seeds", "at least one seed is required");
  if (threads == 0) fail("run.threads", "must be at least 1");
  if (eval.n_ics > data.n_train) {
    fail("eval.n_ics", std::to_string(eval.n_ics) + " exceeds data.n_train " + std::to_string(data.n_train));
  }
  if (!(eval.control_lo <= eval.control_hi)) fail("eval.control_lo", "must not exceed eval.control_hi");
  try {
    data.validate();
    setup.arch.validate();
    setup.weights.validate();
    setup.trainer.validate();
    eval.series_length(data.dt);
    if (setup.trainer.epochs > 0) {
      effective_batch_size(data.n_train, setup.weights.batch_size, setup.weights.k_m, setup.weights.k_tm);
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

std::string ExperimentConfig::run_name() const {
  return short_system_name(data.system) + "-" +
         (data.snr_db ? format_double(*data.snr_db) + "db" : std::string("clean")) + "-" +
         std::string(to_string(model_kind)) + "-n" + std::to_string(data.n_train);
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& key : known_keys()) {
    if (key == "run.output_dir") continue;
    out += key + " = " + get_value(config, key) + "\n";
  }
  return out;
}

std::filesystem::path default_output_root() {
  if (const char* root = std::getenv("TCBLRAN_OUTPUT_ROOT"); root && *root) return root;
  return "runs";
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  return default_output_root() / config.run_name();
}

}  // namespace tcblran::cli
