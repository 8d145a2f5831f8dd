#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diffad/data.hpp"

namespace diffad {

struct Sinusoid {
  double period = 100.0;
  double amplitude = 1.0;
  double phase = 0.0;
};

/// baseline + sum of sinusoids + stationary AR(1) noise whose marginal std is noise_scale.
struct FeatureRecipe {
  double baseline = 0.0;
  std::vector<Sinusoid> sinusoids;
  double ar_coef = 0.0;
  double noise_scale = 1.0;
};

enum class AnomalyType { spike, dip, level_shift, noise_burst };
std::string to_string(AnomalyType t);
AnomalyType parse_anomaly_type(const std::string& s);

struct AnomalySpec {
  std::vector<AnomalyType> types = {AnomalyType::spike, AnomalyType::dip};
  double rate = 0.01;
  // In units of the feature's noise scale.
  double magnitude_min = 5.0;
  double magnitude_max = 10.0;
  std::size_t duration_min = 1;
  std::size_t duration_max = 3;

  void validate() const;
};

struct GeneratorConfig {
  std::size_t features = 17;
  std::size_t length = 40000;
  std::vector<FeatureRecipe> recipes;  // one per feature; empty = benchmark recipes
  AnomalySpec anomalies;
  std::uint64_t seed = 0;

  void validate() const;
  FeatureRecipe recipe(std::size_t k) const;
};

/// Deterministic per-feature recipe used when none is configured.
FeatureRecipe benchmark_recipe(std::size_t k);
GeneratorConfig benchmark_config();

/// Anomaly-free series with all-zero labels.
Series generate_normal(const GeneratorConfig& config, std::uint64_t seed);

/// Injects events into [begin, end) of every feature. Each feature receives
/// exactly round(rate * (end - begin)) labeled points in non-overlapping,
/// non-adjacent events; magnitudes are multiples of noise_scales[k]. Returns
/// the modified series; its labels are the union of existing and new ones.
Series inject_anomalies(const Series& series, const AnomalySpec& spec, std::span<const double> noise_scales,
                        std::uint64_t seed, std::size_t begin = 0, std::size_t end = static_cast<std::size_t>(-1));

/// Normal series with anomalies injected only into the test portion, so the
/// train and validation portions stay clean.
Series generate_benchmark(const GeneratorConfig& config, const SplitFractions& fractions, std::uint64_t seed);

}  // namespace diffad
