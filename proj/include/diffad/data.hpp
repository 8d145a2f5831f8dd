#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffad/noise_predictor.hpp"

namespace diffad {

/// Malformed or inconsistent input data (CSV content, splits, alignment).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One node's multivariate series: values [K, N]; labels, when present, are
/// K*N row-major flags with 1 marking an anomalous point.
struct Series {
  std::string id;
  std::vector<std::string> feature_names;
  std::vector<std::string> timestamps;
  NdArray values;
  std::optional<std::vector<std::uint8_t>> labels;

  std::size_t features() const { return values.dim(0); }
  std::size_t length() const { return values.dim(1); }
  double value(std::size_t k, std::size_t n) const { return values[k * length() + n]; }
  bool label(std::size_t k, std::size_t n) const { return labels && (*labels)[k * length() + n] != 0; }
  /// True if any feature is labeled at time n.
  bool row_labeled(std::size_t n) const;

  void validate() const;
  /// Time range [begin, end) with values, labels and timestamps.
  Series slice(std::size_t begin, std::size_t end) const;
};

Series read_series_csv(const std::string& path, const std::string& id = "");
void write_series_csv(const Series& series, const std::string& path, bool with_labels = true);

// ---------------------------------------------------------------------------
// Train/validation/test partitioning (contiguous, chronological).

struct SplitFractions {
  double train = 0.5;
  double validation = 0.2;
  double test = 0.3;
  void validate() const;
};

struct SeriesSplits {
  Series train, validation, test;
  std::size_t validation_begin = 0;
  std::size_t test_begin = 0;
};

SeriesSplits split_series(const Series& series, const SplitFractions& fractions);

// ---------------------------------------------------------------------------
// Normalization

enum class NormMethod { mean_std, median_iqr };
std::string to_string(NormMethod m);
NormMethod parse_norm_method(const std::string& s);

inline constexpr double kScaleFloor = 1e-12;

struct NormStats {
  NormMethod method = NormMethod::mean_std;
  std::vector<double> center;
  std::vector<double> scale;
  std::string fitted_on;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

NormStats normalize_fit(std::span<const Series> series, NormMethod method, const std::string& fitted_on = "train");
Series normalize_apply(const Series& series, const NormStats& stats);
Series normalize_invert(const Series& series, const NormStats& stats);

// ---------------------------------------------------------------------------
// Windowing

enum class WindowMode { reconstruction, forecasting };
std::string to_string(WindowMode m);
WindowMode parse_window_mode(const std::string& s);

struct WindowOrigin {
  std::string series_id;
  std::size_t start = 0;
};

/// B windows of C x L values cut from a source series.
struct WindowBatch {
  NdArray data;  // [B,C,L]
  std::vector<WindowOrigin> origins;
  WindowMode mode = WindowMode::reconstruction;
  std::size_t length = 0;
  std::size_t stride = 0;
  std::size_t history = 0;      // observed prefix, forecasting only
  std::size_t dropped_tail = 0;  // trailing points not covered by any window
  std::optional<NdArray> mask;   // [B,C,L], 1 = observed

  std::size_t size() const { return origins.size(); }
  std::size_t features() const { return data.dim(1); }
};

/// Consecutive disjoint windows; the remainder shorter than L is dropped.
WindowBatch make_reconstruction_windows(const Series& series, std::size_t length);
/// Windows starting at 0, stride, 2*stride, ...
WindowBatch make_sliding_windows(const Series& series, std::size_t length, std::size_t stride);

/// Windows at arbitrary start offsets.
WindowBatch make_windows_at(const Series& series, std::size_t length, std::span<const std::size_t> starts);

/// Subset of windows in the given order.
WindowBatch select_windows(const WindowBatch& batch, std::span<const std::size_t> indices);
/// Removes windows overlapping any labeled row of `source`; returns the count removed.
std::size_t drop_labeled_windows(WindowBatch& batch, const Series& source);

struct TargetRegion {
  std::size_t begin = 0;
  std::size_t length = 0;
};

struct ForecastSplit {
  Conditioning conditioning;  // mask 1 on [0,h), context zeroed on [h,L)
  TargetRegion target;
};

ForecastSplit split_history_target(const WindowBatch& batch, std::size_t history);
/// Marks `batch` as forecasting with an observed prefix of `history` steps.
void attach_history(WindowBatch& batch, std::size_t history);

/// Generated values mapped back to series coordinates.
struct StitchedSeries {
  NdArray values;                     // [K, N]; zero where uncovered
  std::vector<std::uint8_t> covered;  // N flags; 0 = no prediction
  std::size_t covered_count() const;
};

/// Places each window's (target region of the) outputs at its origin.
/// Overlapping contributions are averaged pointwise.
StitchedSeries stitch_windows(const NdArray& outputs, std::span<const WindowOrigin> origins,
                              std::size_t series_length, std::optional<TargetRegion> region = std::nullopt);

}  // namespace diffad
