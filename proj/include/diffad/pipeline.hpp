#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "diffad/checkpoint.hpp"
#include "diffad/config.hpp"
#include "diffad/detector.hpp"
#include "diffad/evaluation.hpp"

namespace diffad {

// Command implementations behind the CLI. Each writes its artifacts into
// `out_dir` (created if needed) and returns what it wrote for callers that
// want to inspect results without re-reading files.

struct GenerateResult {
  Series series;
  std::string path;
};

/// Synthetic benchmark series (anomalies only in the test split) to <out>/data.csv.
GenerateResult run_generate(const ToolkitConfig& config, const std::string& out_dir);

struct TrainResult {
  Checkpoint checkpoint;
  std::string checkpoint_path;
  std::vector<double> losses;  // this invocation only
  std::size_t first_step = 0;  // absolute index of losses[0]
  std::size_t excluded_windows = 0;
  std::vector<std::vector<std::size_t>> batch_starts;  // per step, in train-split coordinates
};

/// Trains from scratch, or continues `resume` up to config.train_steps total steps.
/// Writes <out>/checkpoint.bin (every checkpoint_every steps and at the end)
/// and appends `step,loss` rows to <out>/loss.csv.
TrainResult run_train(const ToolkitConfig& config, const Series& data, const std::string& out_dir,
                      const std::optional<Checkpoint>& resume = std::nullopt, std::ostream* log = nullptr);

struct SplitReconstruction {
  Series original;         // split values in original units
  NdArray reconstruction;  // [K,N] original units; 0 where uncovered
  std::vector<std::uint8_t> covered;
  WindowBatch windows;  // provenance (data holds normalized inputs)
  TargetRegion region;
};

/// Regenerates one split with the checkpoint's model; split_tag selects
/// independent random streams per split.
SplitReconstruction reconstruct_split(const ToolkitConfig& config, const Checkpoint& ck, const Series& split,
                                      std::uint64_t split_tag);

struct DetectResult {
  SplitReconstruction validation;
  SplitReconstruction test;
  DetectionReport report;  // over the test split
  std::string checkpoint_hash;
};

/// Calibrates the detector on the validation split and flags the test split.
/// Writes report.csv, summary.json, windows.csv and plots/<feature>.csv.
DetectResult run_detect(const ToolkitConfig& config, const Checkpoint& ck, const Series& data,
                        const std::string& out_dir);

struct SweepRow {
  double k = 0.0;
  std::size_t flagged = 0;
  MetricsResult metrics;
};

struct EvaluationResult {
  MetricsResult overall;  // point-wise over every (feature, covered timestep)
  std::vector<MetricsResult> per_feature;
  MetricsResult timestep;  // OR-aggregated flags vs OR-aggregated labels
  std::vector<SweepRow> sweep;
  std::vector<std::string> feature_names;
};

/// In-memory evaluation; labels are the test split's K*N grid.
EvaluationResult evaluate_report(const DetectionReport& report, std::span<const std::uint8_t> labels,
                                 std::span<const double> sweep_ks);

/// Reads <report_dir>/report.csv and summary.json, aligns it with the labeled
/// series by (feature, timestamp), writes metrics.json and k_sweep.csv.
EvaluationResult run_evaluate(const std::string& report_dir, const Series& labeled, std::span<const double> sweep_ks,
                              const std::string& out_dir);

nlohmann::json metrics_json(const EvaluationResult& r);

/// SVG line plot per feature from <report_dir>/plots; returns the files written.
std::vector<std::string> run_report(const std::string& report_dir, const std::string& out_dir);

/// Default sweep: k = 0, 0.5, ..., 6.
std::vector<double> default_sweep();

}  // namespace diffad
