#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "diffad/pipeline.hpp"

using namespace diffad;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string checkpoint;
  std::string out = "out";
  std::string mode;
  std::vector<double> k;
  std::string data;
  std::string report_dir;
};

ToolkitConfig resolve(const Options& o) {
  ToolkitConfig c = o.config_path.empty() ? ToolkitConfig{} : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (!o.mode.empty()) c.mode = parse_window_mode(o.mode);
  if (!o.data.empty()) c.data_path = o.data;
  if (o.k.size() == 1) {
    c.detector.k = o.k[0];
    c.detector.k_per_feature.clear();
  }
  c.validate();
  return c;
}

std::string data_path(const ToolkitConfig& c, const Options& o) {
  return c.data_path.empty() ? (std::filesystem::path(o.out) / "data.csv").string() : c.data_path;
}

int cmd_generate(const Options& o) {
  const ToolkitConfig c = resolve(o);
  const GenerateResult r = run_generate(c, o.out);
  std::size_t labeled = 0;
  for (auto v : *r.series.labels) labeled += v;
  std::cout << "wrote " << r.path << ": " << r.series.features() << " features x " << r.series.length()
            << " steps, " << labeled << " labeled points\n";
  return kOk;
}

int cmd_train(const Options& o) {
  const ToolkitConfig c = resolve(o);
  const Series data = read_series_csv(data_path(c, o));
  std::optional<Checkpoint> resume;
  if (!o.checkpoint.empty()) resume = load_checkpoint(o.checkpoint);
  const TrainResult r = run_train(c, data, o.out, resume, &std::cout);
  std::cout << "wrote " << r.checkpoint_path << " (step " << r.checkpoint.step << ", hash "
            << checkpoint_hash(r.checkpoint) << ")\n";
  return kOk;
}

int cmd_detect(const Options& o) {
  const ToolkitConfig c = resolve(o);
  const Series data = read_series_csv(data_path(c, o));
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const DetectResult r = run_detect(c, ck, data, o.out);
  std::cout << "flagged " << r.report.flagged_count() << " points in " << r.report.length()
            << " test steps; report in " << o.out << "\n";
  return kOk;
}

int cmd_evaluate(const Options& o) {
  const ToolkitConfig c = resolve(o);
  const Series data = read_series_csv(data_path(c, o));
  const SeriesSplits splits = split_series(data, c.splits);
  const std::vector<double> ks = o.k.empty() ? default_sweep() : o.k;
  const std::string report_dir = o.report_dir.empty() ? o.out : o.report_dir;
  const EvaluationResult r = run_evaluate(report_dir, splits.test, ks, o.out);
  std::cout << "precision " << r.overall.precision << " recall " << r.overall.recall << " f1 " << r.overall.f1
            << "\n";
  return kOk;
}

int cmd_report(const Options& o) {
  const std::string report_dir = o.report_dir.empty() ? o.out : o.report_dir;
  const auto files = run_report(report_dir, (std::filesystem::path(o.out) / "svg").string());
  std::cout << "wrote " << files.size() << " plots\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-based anomaly detection for multivariate telemetry"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "run seed");
    sub->add_option("--out", o.out, "output directory");
  };
  auto* gen = app.add_subcommand("generate", "write a synthetic labeled benchmark");
  common(gen);
  auto* train = app.add_subcommand("train", "train the denoiser");
  common(train);
  train->add_option("--checkpoint", o.checkpoint, "resume from this checkpoint");
  auto* det = app.add_subcommand("detect", "score the test split");
  common(det);
  det->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  det->add_option("--k", o.k, "threshold multiplier")->expected(1);
  auto* eval = app.add_subcommand("evaluate", "metrics against labels");
  common(eval);
  eval->add_option("--k", o.k, "k values for the sweep table");
  eval->add_option("--report", o.report_dir, "detect output directory (default --out)");
  auto* rep = app.add_subcommand("report", "SVG plots from a detect run");
  rep->add_option("--out", o.out, "output directory");
  rep->add_option("--report", o.report_dir, "detect output directory (default --out)");
  for (auto* sub : {train, det, eval}) {
    sub->add_option("--mode", o.mode, "reconstruction or forecasting")
        ->check(CLI::IsMember({"reconstruction", "forecasting"}));
    sub->add_option("--data", o.data, "dataset CSV (default data.path or <out>/data.csv)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*train) return cmd_train(o);
    if (*det) return cmd_detect(o);
    if (*eval) return cmd_evaluate(o);
    if (*rep) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
