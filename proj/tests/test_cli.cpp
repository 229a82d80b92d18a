#include <doctest.h>

#include "tcblran/cli/experiment.hpp"
#include "tcblran/cli/svg.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace tcblran;
using namespace tcblran::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string without_comments(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out += line + "\n";
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "tcblran_test_cli" / name;
  fs::remove_all(p);
  return p;
}

// Tiny pendulum run that finishes in well under a second.
ExperimentConfig tiny(const fs::path& out, std::string kind = "tcblran") {
  return parse_overrides({"preset=pendulum-clean-" + kind, "data.t_span=20", "data.lifted_dim=8",
                          "model.latent_dim=4", "model.encoder_hidden=8", "model.decoder_hidden=8",
                          "loss.batch_size=8", "loss.k_m=4", "data.n_train=40", "eval.n_ics=3",
                          "eval.horizon=2", "train.epochs=3", "run.seeds=0,1",
                          "run.output_dir=" + out.string()});
}

}  // namespace

TEST_CASE("presets expand to the reference hyperparameters") {
  const ExperimentConfig p = preset("pendulum-clean-tcblran");
  CHECK(p.data.system == SystemKind::pendulum);
  CHECK_FALSE(p.data.snr_db.has_value());
  CHECK(p.setup.weights.k_m == 12);
  CHECK(p.setup.weights.k_tm == 2);
  CHECK(p.setup.weights.batch_size == 32);
  CHECK(p.setup.arch.latent_dim == 12);
  CHECK(p.setup.arch.encoder_hidden == 128);
  CHECK(p.setup.arch.decoder_hidden == 128);
  CHECK(p.setup.weights.gamma_id == 1.0);
  CHECK(p.setup.weights.gamma_fwd == 1.0);
  CHECK(p.setup.weights.gamma_tc == 2.0);
  CHECK(p.setup.trainer.weight_decay == 0.1);
  CHECK(p.setup.trainer.lr0 == 0.01);
  CHECK(p.setup.trainer.lr_decay == 0.5);
  CHECK(p.setup.trainer.grad_clip == 0.05);
  CHECK(p.setup.trainer.epochs == 600);
  CHECK(p.setup.trainer.milestones == std::vector<std::size_t>{30, 100, 200, 400});
  CHECK(p.data.n_points == 2200);
  CHECK(p.data.lifted_dim == 64);
  CHECK(p.data.n_train == 32);
  CHECK(p.data.x0 == (Vector(2) << 0.8, 0.0).finished());

  const ExperimentConfig v = preset("vdp-20db-blran");
  CHECK(v.data.system == SystemKind::vanderpol);
  CHECK(v.data.snr_db == 20.0);
  CHECK(v.setup.weights.k_m == 32);
  CHECK(v.setup.weights.batch_size == 64);
  CHECK(v.setup.arch.encoder_hidden == 192);
  CHECK(v.setup.weights.gamma_fwd == 1.0);
  CHECK(v.setup.weights.gamma_tc == 0.0);
  CHECK(v.data.n_train == 256);

  CHECK(preset("vdp-20db-tcblran").setup.weights.gamma_fwd == 2.0);
  CHECK(preset("pendulum-clean-blran").setup.trainer.weight_decay == 0.01);
  CHECK(preset("pendulum-clean-blran").setup.weights.gamma_fwd == 2.0);
  CHECK(preset("pendulum-20db-tcblran").setup.weights.gamma_fwd == 0.5);
  CHECK(preset("pendulum-20db-tcblran").setup.trainer.weight_decay == 1.0);
  CHECK(preset("duffing-clean-tcblran").setup.trainer.weight_decay == 0.01);
  CHECK(preset("duffing-clean-blran").setup.trainer.weight_decay == 0.1);
  CHECK(preset("vdp-clean-tcblran").setup.weights.gamma_tc == 0.01);

  CHECK(preset_names().size() == 12);
  for (const auto& name : preset_names()) CHECK_NOTHROW(preset(name).validate());
  CHECK_THROWS_AS(preset("pendulum-10db-tcblran"), ConfigError);
  CHECK_THROWS_AS(preset("lorenz-clean-tcblran"), ConfigError);
}

TEST_CASE("config parsing") {
  SUBCASE("empty config names the required fields") {
    try {
      parse_config_text("");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("system") != std::string::npos);
      CHECK(msg.find("model.kind") != std::string::npos);
    }
  }
  SUBCASE("system and kind select the table defaults") {
    const auto c = parse_config_text("system = vanderpol\nmodel.kind = tcblran\ndata.snr_db = 20\n");
    CHECK(c.setup.weights.gamma_tc == 2.0);
    CHECK(c.setup.weights.gamma_fwd == 2.0);
  }
  SUBCASE("overrides win over the file and keep their order") {
    const auto c = parse_config_text("preset = pendulum-clean-tcblran # comment\ntrain.epochs = 5\n",
                                     {"train.epochs=7", "run.seeds=3, 4"});
    CHECK(c.setup.trainer.epochs == 7);
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
  }
  SUBCASE("t_span and lifted_dim update derived sizes") {
    const auto c = parse_overrides({"preset=duffing-clean-tcblran", "data.t_span=50", "data.lifted_dim=16"});
    CHECK(c.data.n_points == 500);
    CHECK(c.setup.arch.input_dim == 16);
  }
  SUBCASE("errors name the key") {
    auto message = [](const std::vector<std::string>& o) {
      try {
        parse_overrides(o);
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message({"preset=pendulum-clean-tcblran", "nonsense.key=1"}).find("nonsense.key") != std::string::npos);
    CHECK(message({"preset=pendulum-clean-tcblran", "train.lr=fast"}).find("train.lr") != std::string::npos);
    CHECK(message({"preset=pendulum-clean-tcblran", "loss.k_tm=1"}).find("k_tm") != std::string::npos);
    CHECK(message({"preset=pendulum-clean-tcblran", "data.n_train=-3"}).find("data.n_train") != std::string::npos);
    CHECK(message({"preset=pendulum-clean-blran", "loss.gamma_tc=1"}).find("loss.gamma_tc") != std::string::npos);
    CHECK(message({"preset=pendulum-clean-tcblran", "eval.n_ics=40"}).find("eval.n_ics") != std::string::npos);
    CHECK(message({"preset=pendulum-clean-tcblran", "data.t_span=220.05"}).find("data.t_span") != std::string::npos);
    CHECK_THROWS_AS(parse_config_text("just words\n"), ConfigError);
  }
  SUBCASE("echo round trip") {
    const auto c = parse_overrides({"preset=vdp-20db-tcblran", "data.x0=0.5,-0.25", "loss.gamma_tc=0.125"});
    const auto back = parse_config_text(to_text(c));
    CHECK(to_text(back) == to_text(c));
    CHECK(back.data.x0(1) == -0.25);
    CHECK(to_text(c).find("run.output_dir") == std::string::npos);
  }
  SUBCASE("config files") {
    const fs::path dir = scratch("files");
    fs::create_directories(dir);
    std::ofstream(dir / "exp.cfg") << "system = duffing\nmodel.kind = blran\n";
    CHECK(parse_config(dir / "exp.cfg", {"train.epochs=2"}).setup.trainer.epochs == 2);
    CHECK_THROWS_AS(parse_config(dir / "missing.cfg"), ConfigError);
  }
}

TEST_CASE("output root follows the environment") {
  ExperimentConfig c = preset("pendulum-20db-blran");
  setenv("TCBLRAN_OUTPUT_ROOT", "/tmp/somewhere", 1);
  CHECK(resolve_output_dir(c) == fs::path("/tmp/somewhere/pendulum-20db-blran-n32"));
  unsetenv("TCBLRAN_OUTPUT_ROOT");
  CHECK(resolve_output_dir(c) == fs::path("runs/pendulum-20db-blran-n32"));
  c.output_dir = "/x/y";
  CHECK(resolve_output_dir(c) == fs::path("/x/y"));
}

TEST_CASE("smoke run writes every artifact and is reproducible") {
  const fs::path a = scratch("run_a");
  const fs::path b = scratch("run_b");
  ExperimentConfig ca = tiny(a);
  ca.setup.trainer.epochs = 1;
  ca.seeds = {0};
  const RunResult ra = run_experiment(ca);
  CHECK(ra.ok());
  for (const char* f : {"config.txt", "manifest.json", "summary.json", "error_vs_time.svg", "loss_history.svg",
                        "seed_0/history.csv", "seed_0/checkpoint.json", "seed_0/errors.csv", "seed_0/report.json"}) {
    CHECK_MESSAGE(fs::exists(a / f), f);
  }
  const std::string history = slurp(a / "seed_0/history.csv");
  CHECK(history.rfind("# schema_version = 1\n", 0) == 0);
  CHECK(history.find("# model.kind = tcblran") != std::string::npos);
  CHECK(without_comments(history).rfind("epoch,lr,L_id,L_fwd,L_tc,L_tot\n", 0) == 0);
  CHECK(without_comments(slurp(a / "seed_0/errors.csv")).rfind("ic,t,rel_error\n0,0,", 0) == 0);

  const auto summary = io::read_json(a / "summary.json");
  CHECK(summary["schema_version"] == 1);
  CHECK(summary["config"]["system"] == "pendulum");
  CHECK(summary["stats"]["count"] == 3);
  for (const char* key : {"median", "mean", "std", "count"}) CHECK(summary["stats"].contains(key));

  ExperimentConfig cb = ca;
  cb.output_dir = b;
  REQUIRE(run_experiment(cb).ok());
  CHECK(slurp(a / "seed_0/history.csv") == slurp(b / "seed_0/history.csv"));
  CHECK(slurp(a / "seed_0/errors.csv") == slurp(b / "seed_0/errors.csv"));
  CHECK(slurp(a / "seed_0/checkpoint.json") == slurp(b / "seed_0/checkpoint.json"));
}

TEST_CASE("threads do not change results") {
  const fs::path serial = scratch("serial");
  const fs::path threaded = scratch("threaded");
  ExperimentConfig c = tiny(serial);
  REQUIRE(run_experiment(c).ok());
  c.output_dir = threaded;
  c.threads = 2;
  REQUIRE(run_experiment(c).ok());
  for (const char* f : {"seed_0/history.csv", "seed_1/history.csv", "seed_1/errors.csv"}) {
    CHECK(without_comments(slurp(serial / f)) == without_comments(slurp(threaded / f)));
  }
}

TEST_CASE("failures land in the manifest") {
  const fs::path dir = scratch("failing");
  ExperimentConfig c = tiny(dir);
  c.setup.trainer.lr0 = 1e300;  // diverges immediately
  const RunResult r = run_experiment(c);
  CHECK_FALSE(r.ok());
  CHECK(r.has_status("numeric_error"));
  const auto manifest = io::read_json(dir / "manifest.json");
  CHECK(manifest["status"] == "failed");
  CHECK(manifest["stages"][1]["status"] == "numeric_error");
  CHECK(fs::exists(dir / "config.txt"));
}

TEST_CASE("evaluate, compare and plot finished runs") {
  const fs::path a = scratch("cmp_tc");
  const fs::path b = scratch("cmp_bl");
  REQUIRE(run_experiment(tiny(a)).ok());
  REQUIRE(run_experiment(tiny(b, "blran")).ok());

  const RunComparison self = compare_runs(a, a);
  CHECK(self.comparison.median_difference == 0.0);
  CHECK(self.comparison.mean_difference == 0.0);
  CHECK(self.comparison.win_rate == 0.5);
  CHECK(self.comparison.pairs == 6);

  const RunComparison cross = compare_runs(a, b);
  CHECK(cross.json["a"]["config"]["model.kind"] == "tcblran");
  CHECK(cross.json["b"]["config"]["model.kind"] == "blran");
  CHECK(format_comparison(cross.comparison).find("win rate") != std::string::npos);

  const std::string before = slurp(a / "seed_0/errors.csv");
  const RunResult again = evaluate_run(a);
  CHECK(again.ok());
  CHECK(slurp(a / "seed_0/errors.csv") == before);
  const RunResult shorter = evaluate_run(a, {"eval.horizon=1"});
  CHECK(shorter.reports.front().series.front().size() == 10);

  plot_error_vs_time({a, b}, a / "both.svg");
  const std::string svg = slurp(a / "both.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("blran") != std::string::npos);
}

TEST_CASE("sweep emits one row per training length") {
  const fs::path dir = scratch("sweep");
  ExperimentConfig c = tiny(dir);
  c.seeds = {0};
  c.setup.trainer.epochs = 1;
  const auto rows = sweep({c}, {20, 30, 40}, dir);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.stats.has_value());
  const std::string csv = without_comments(slurp(dir / "sweep.csv"));
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 4);
  CHECK(csv.find("\n30,tcblran,") != std::string::npos);
  CHECK(fs::exists(dir / "sweep.svg"));
}

TEST_CASE("svg charts") {
  const std::string line = line_chart_svg({{"a<b", {0, 1, 2}, {1, std::nan(""), 3}}}, {"t", "x", "y"}, true);
  CHECK(line.find("a&lt;b") != std::string::npos);
  CHECK(line.find(" M") != std::string::npos);
  CHECK(line.rfind("</svg>\n") == line.size() - 7);
  const std::string bars = bar_chart_svg({{"32", {0.1, 0.2}}, {"64", {0.05, 0.1}}}, {"tc", "bl"}, {"t", "x", "y"});
  std::size_t rects = 0;
  for (std::size_t pos = 0; (pos = bars.find("<rect", pos)) != std::string::npos; ++pos) ++rects;
  CHECK(rects == 1 + 4 + 2);  // background, bars, legend
}
