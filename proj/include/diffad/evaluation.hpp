#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace diffad {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Point-wise counts over equally shaped 0/1 grids.
ConfusionCounts confusion_counts(std::span<const std::uint8_t> y, std::span<const std::uint8_t> y_hat);
/// Same over a K*N grid restricted to time steps with covered[n] != 0.
ConfusionCounts confusion_counts(std::span<const std::uint8_t> y, std::span<const std::uint8_t> y_hat,
                                 std::size_t features, std::span<const std::uint8_t> covered);

struct MetricsResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
  // Names of ratios whose denominator was zero (reported as 0).
  std::vector<std::string> undefined;

  bool is_undefined(const std::string& name) const;
};

MetricsResult metrics(const ConfusionCounts& c);

nlohmann::json to_json(const MetricsResult& m);

}  // namespace diffad
