#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "diffad/pipeline.hpp"
#include "oracles.hpp"

using namespace diffad;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("diffad_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ToolkitConfig toy_config() {
  ToolkitConfig c;
  c.generator.features = 2;
  c.generator.length = 2000;
  c.window_length = 40;
  c.diffusion_steps = 20;
  c.beta_start = 1e-3;
  c.beta_end = 0.2;
  c.channels = 4;
  c.blocks = 1;
  c.state_dim = 4;
  c.embed_dim = 8;
  c.train_steps = 12;
  c.batch_size = 4;
  c.checkpoint_every = 5;
  c.sample_batch = 8;
  c.seed = 3;
  return c;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("config text round trip and validation") {
  const ToolkitConfig c = parse_config(
      "# comment\n"
      "window.mode = forecasting\n"
      "window.length = 250\n"
      "window.history = 175\n"
      "diffusion.T = 50\n"
      "detector.k_per_feature = 1, 2.5\n"
      "generate.types = spike,level_shift\n"
      "run.seed = 42\n");
  CHECK(c.mode == WindowMode::forecasting);
  CHECK(c.history == 175);
  CHECK(c.detection_stride() == 75);
  CHECK(c.detector.k_per_feature == std::vector<double>{1.0, 2.5});
  CHECK(c.generator.anomalies.types.size() == 2);
  CHECK(c.seed == 42);
  const ToolkitConfig again = parse_config(to_text(c));
  CHECK(to_text(again) == to_text(c));
  CHECK_THROWS_AS(parse_config("nope.key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("window.length = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("window.history = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("data.train = 0.8\ndata.validation = 0.3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("run.seed = 1\nrun.seed = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("window.mode = forecasting\nwindow.history = 100\n"), ConfigError);
}

TEST_CASE("checkpoint round trip is bit exact and corruption is detected") {
  const ToolkitConfig c = toy_config();
  Checkpoint ck;
  ck.model = init_model(c.model_config(2), 5);
  ck.schedule = build_linear_schedule(c.diffusion_steps, c.beta_start, c.beta_end);
  ck.norm = NormStats{NormMethod::mean_std, {0.1, 1.0 / 3.0}, {2.0, 1e-12}, "train"};
  ck.seed = 9;
  ck.step = 17;
  ck.adam = AdamState::for_params(ck.model.params.values());
  ck.adam.step = 17;
  ck.adam.m[0][0] = 0.25;
  const std::string bytes = serialize_checkpoint(ck);
  const Checkpoint back = deserialize_checkpoint(bytes);
  CHECK(back.model.params == ck.model.params);
  CHECK(back.model.config == ck.model.config);
  CHECK(back.norm == ck.norm);
  CHECK(back.step == 17);
  CHECK(back.adam.m[0][0] == 0.25);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK(checkpoint_hash(back) == checkpoint_hash(ck));
  std::string bad = bytes;
  bad[bad.size() / 2] ^= 0x01;
  CHECK_THROWS_AS(deserialize_checkpoint(bad), DataError);
  CHECK_THROWS_AS(deserialize_checkpoint("garbage"), DataError);
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("toy pipeline: generate, train, resume, detect, evaluate") {
  const fs::path dir = scratch("pipeline");
  ToolkitConfig c = toy_config();
  const GenerateResult g = run_generate(c, dir.string());
  const std::string header = slurp(g.path).substr(0, slurp(g.path).find('\n'));
  CHECK(header == "timestamp,kpi_00,kpi_01,label_kpi_00,label_kpi_01");
  CHECK(slurp(g.path) == slurp(run_generate(c, (dir / "again").string()).path));

  const Series data = read_series_csv(g.path);
  const TrainResult tr = run_train(c, data, (dir / "a").string());
  CHECK(tr.losses.size() == 12);
  CHECK(line_count(slurp(dir / "a" / "loss.csv")) == 13);
  const Checkpoint ck = load_checkpoint(tr.checkpoint_path);
  CHECK(ck.step == 12);
  CHECK(checkpoint_hash(ck) == checkpoint_hash(tr.checkpoint));

  SUBCASE("training batches never contain labeled rows") {
    const SeriesSplits sp = split_series(data, c.splits);
    for (const auto& starts : tr.batch_starts)
      for (std::size_t s : starts)
        for (std::size_t t = s; t < s + c.window_length; ++t) CHECK_FALSE(sp.train.row_labeled(t));
  }

  SUBCASE("resuming reproduces the uninterrupted run") {
    ToolkitConfig half = c;
    half.train_steps = 5;
    run_train(half, data, (dir / "b").string());
    const Checkpoint mid = load_checkpoint((dir / "b" / "checkpoint.bin").string());
    CHECK(mid.step == 5);
    const TrainResult rest = run_train(c, data, (dir / "b").string(), mid);
    CHECK(rest.first_step == 5);
    CHECK(rest.losses.size() == 7);
    CHECK(rest.losses.back() == tr.losses.back());
    CHECK(checkpoint_hash(rest.checkpoint) == checkpoint_hash(ck));
    CHECK(line_count(slurp(dir / "b" / "loss.csv")) == 13);
  }

  SUBCASE("detect and evaluate") {
    const DetectResult d = run_detect(c, ck, data, (dir / "det").string());
    const std::string report = slurp(dir / "det" / "report.csv");
    CHECK(report == slurp(dir / "det" / "report.csv"));
    // flag column agrees with its own zscore and threshold columns
    std::istringstream in(report);
    std::string line;
    std::getline(in, line);
    CHECK(line == "timestamp,feature,residual,zscore,threshold,flag");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) f.push_back(cell);
      REQUIRE(f.size() == 6);
      CHECK((std::abs(std::stod(f[3])) > std::stod(f[4])) == (f[5] == "1"));
      ++rows;
    }
    CHECK(rows == 2 * d.report.covered.size() - 2 * std::count(d.report.covered.begin(), d.report.covered.end(), 0));
    const std::string windows = slurp(dir / "det" / "windows.csv");
    CHECK(windows.substr(0, windows.find('\n')) == "split,window,series_id,start,length");
    CHECK(fs::exists(dir / "det" / "plots" / "kpi_00.csv"));
    CHECK(fs::exists(dir / "det" / "summary.json"));

    // same seed, same report
    run_detect(c, ck, data, (dir / "det2").string());
    CHECK(slurp(dir / "det2" / "report.csv") == report);

    const SeriesSplits sp = split_series(data, c.splits);
    const EvaluationResult ev = run_evaluate((dir / "det").string(), sp.test, default_sweep(), (dir / "ev").string());
    const EvaluationResult mem = evaluate_report(d.report, *sp.test.labels, default_sweep());
    CHECK(ev.overall.counts == mem.overall.counts);
    for (std::size_t i = 1; i < ev.sweep.size(); ++i) CHECK(ev.sweep[i].flagged <= ev.sweep[i - 1].flagged);
    CHECK(ev.sweep.size() == 13);
    CHECK(fs::exists(dir / "ev" / "metrics.json"));
    CHECK(line_count(slurp(dir / "ev" / "k_sweep.csv")) == 14);
    const auto svgs = run_report((dir / "det").string(), (dir / "svg").string());
    CHECK(svgs.size() == 2);

    // perfect and empty flag grids
    DetectionReport perfect = d.report;
    perfect.flags = *sp.test.labels;
    std::fill(perfect.covered.begin(), perfect.covered.end(), 1);
    const EvaluationResult p = evaluate_report(perfect, *sp.test.labels, {});
    CHECK(p.overall.f1 == 1.0);
    CHECK(p.overall.precision == 1.0);
    CHECK(p.overall.recall == 1.0);
    std::fill(perfect.flags.begin(), perfect.flags.end(), 0);
    CHECK(evaluate_report(perfect, *sp.test.labels, {}).overall.recall == 0.0);

    // labels that do not match the report are rejected
    Series other = sp.test;
    other.feature_names[0] = "other";
    CHECK_THROWS_AS(run_evaluate((dir / "det").string(), other, {}, (dir / "ev2").string()), DataError);
  }

  SUBCASE("mismatches are reported") {
    ToolkitConfig wrong = c;
    wrong.window_length = 50;
    CHECK_THROWS_AS(run_detect(wrong, ck, data, (dir / "x").string()), DataError);
    wrong = c;
    wrong.mode = WindowMode::forecasting;
    wrong.history = 20;
    CHECK_THROWS_AS(run_detect(wrong, ck, data, (dir / "x").string()), DataError);
    ToolkitConfig more = c;
    more.generator.features = 3;
    const Series data3 = run_generate(more, (dir / "g3").string()).series;
    CHECK_THROWS_AS(run_train(c, data3, (dir / "a").string(), ck), DataError);
  }
  fs::remove_all(dir);
}

TEST_CASE("forecasting provenance marks observed and target ranges") {
  const fs::path dir = scratch("forecast");
  ToolkitConfig c = toy_config();
  c.mode = WindowMode::forecasting;
  c.history = 25;
  c.train_steps = 3;
  const Series data = run_generate(c, dir.string()).series;
  const TrainResult tr = run_train(c, data, dir.string());
  const DetectResult d = run_detect(c, tr.checkpoint, data, dir.string());
  std::istringstream in(slurp(dir / "windows.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "split,window,series_id,start,length,observed_begin,observed_end,target_begin,target_end");
  std::getline(in, line);
  std::vector<std::string> f;
  std::stringstream ls(line);
  std::string cell;
  while (std::getline(ls, cell, ',')) f.push_back(cell);
  REQUIRE(f.size() == 9);
  CHECK(std::stoul(f[6]) - std::stoul(f[5]) == 25);
  CHECK(std::stoul(f[8]) - std::stoul(f[7]) == 15);
  for (std::size_t t = 0; t < 25; ++t) CHECK(d.test.covered[t] == 0);
  CHECK(d.test.covered[25] == 1);
  fs::remove_all(dir);
}

#ifdef DIFFAD_TOOL
TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  const std::string tool = DIFFAD_TOOL;
  auto run = [&](const std::string& args) {
    const int rc = std::system((tool + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
  };
  {
    std::ofstream cfg(dir / "toy.cfg");
    cfg << "generate.features = 2\ngenerate.length = 1000\nwindow.length = 40\ndiffusion.T = 10\n"
           "model.channels = 4\nmodel.blocks = 1\nmodel.state_dim = 4\nmodel.embed_dim = 8\n"
           "train.steps = 3\ntrain.batch_size = 2\n";
    std::ofstream bad(dir / "bad.cfg");
    bad << "window.length = 0\n";
  }
  const std::string out = " --out " + (dir / "o").string();
  const std::string cfg = " --config " + (dir / "toy.cfg").string();
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("generate --config " + (dir / "bad.cfg").string() + out) == 1);
  CHECK(run("generate" + cfg + out + " --seed 4") == 0);
  CHECK(run("train" + cfg + out) == 0);
  CHECK(run("detect" + cfg + out + " --checkpoint " + (dir / "o" / "checkpoint.bin").string() + " --k 2.5") == 0);
  CHECK(run("evaluate" + cfg + out + " --k 1 --k 3") == 0);
  CHECK(run("report" + out) == 0);
  CHECK(run("detect" + cfg + out + " --checkpoint " + (dir / "missing.bin").string()) == 2);
  CHECK(run("train" + cfg + out + " --data " + (dir / "nothing.csv").string()) == 2);
  fs::remove_all(dir);
}
#endif
