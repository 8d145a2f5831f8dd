#include "diffad/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "diffad/rng.hpp"

namespace diffad {

std::string to_string(AnomalyType t) {
  switch (t) {
    case AnomalyType::spike: return "spike";
    case AnomalyType::dip: return "dip";
    case AnomalyType::level_shift: return "level_shift";
    case AnomalyType::noise_burst: return "noise_burst";
  }
  return "?";
}

AnomalyType parse_anomaly_type(const std::string& s) {
  for (auto t : {AnomalyType::spike, AnomalyType::dip, AnomalyType::level_shift, AnomalyType::noise_burst}) {
    if (to_string(t) == s) return t;
  }
  throw std::invalid_argument("unknown anomaly type '" + s + "'");
}

void AnomalySpec::validate() const {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("anomaly rate must be in [0, 1)");
  if (!(magnitude_min > 0.0) || magnitude_max < magnitude_min) {
    throw std::invalid_argument("anomaly magnitudes must satisfy 0 < min <= max");
  }
  if (duration_min < 1 || duration_max < duration_min) {
    throw std::invalid_argument("anomaly durations must satisfy 1 <= min <= max");
  }
  if (rate > 0.0 && types.empty()) throw std::invalid_argument("anomaly rate > 0 with no anomaly types");
}

void GeneratorConfig::validate() const {
  if (features == 0 || length == 0) throw std::invalid_argument("generator needs K >= 1 and length >= 1");
  if (!recipes.empty() && recipes.size() != features) {
    throw std::invalid_argument("generator has " + std::to_string(recipes.size()) + " recipes for " +
                                std::to_string(features) + " features");
  }
  for (const auto& r : recipes) {
    if (!(std::abs(r.ar_coef) < 1.0)) throw std::invalid_argument("AR(1) coefficient must satisfy |phi| < 1");
    if (!(r.noise_scale >= 0.0)) throw std::invalid_argument("noise scale must be >= 0");
    for (const auto& s : r.sinusoids) {
      if (!(s.period > 0.0)) throw std::invalid_argument("sinusoid period must be > 0");
    }
  }
  anomalies.validate();
}

FeatureRecipe benchmark_recipe(std::size_t k) {
  const double kd = static_cast<double>(k);
  FeatureRecipe r;
  r.baseline = 10.0 + 2.0 * kd;
  r.sinusoids.push_back({24.0 + 3.0 * static_cast<double>(k % 5), 2.0 + 0.25 * static_cast<double>(k % 4), 0.7 * kd});
  r.sinusoids.push_back({150.0 + 40.0 * static_cast<double>(k % 3), 1.0, 1.3 * kd});
  r.ar_coef = 0.3;
  r.noise_scale = 0.5;
  return r;
}

FeatureRecipe GeneratorConfig::recipe(std::size_t k) const {
  return recipes.empty() ? benchmark_recipe(k) : recipes.at(k);
}

GeneratorConfig benchmark_config() { return GeneratorConfig{}; }

Series generate_normal(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t K = config.features, N = config.length;
  Series s;
  s.id = "synthetic";
  s.values = NdArray({K, N});
  s.labels = std::vector<std::uint8_t>(K * N, 0);
  for (std::size_t k = 0; k < K; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "kpi_%02zu", k);
    s.feature_names.emplace_back(name);
  }
  s.timestamps.reserve(N);
  for (std::size_t n = 0; n < N; ++n) s.timestamps.push_back(std::to_string(n));

  for (std::size_t k = 0; k < K; ++k) {
    const FeatureRecipe r = config.recipe(k);
    Rng rng(derive_seed(seed, 1, k));
    const double innov = r.noise_scale * std::sqrt(1.0 - r.ar_coef * r.ar_coef);
    double e = 0.0;
    double* row = s.values.data() + k * N;
    for (std::size_t n = 0; n < N; ++n) {
      if (r.noise_scale > 0.0) e = n == 0 ? r.noise_scale * rng.normal() : r.ar_coef * e + innov * rng.normal();
      double v = r.baseline;
      for (const auto& sin : r.sinusoids) {
        v += sin.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(n) / sin.period + sin.phase);
      }
      row[n] = v + e;
    }
  }
  return s;
}

Series inject_anomalies(const Series& series, const AnomalySpec& spec, std::span<const double> noise_scales,
                        std::uint64_t seed, std::size_t begin, std::size_t end) {
  spec.validate();
  series.validate();
  const std::size_t K = series.features(), N = series.length();
  if (noise_scales.size() != K) throw std::invalid_argument("one noise scale per feature required");
  end = std::min(end, N);
  if (begin >= end) throw std::invalid_argument("empty injection range");
  Series out = series;
  if (!out.labels) out.labels = std::vector<std::uint8_t>(K * N, 0);
  if (spec.rate == 0.0) return out;

  const std::size_t span = end - begin;
  const auto target = static_cast<std::size_t>(std::llround(spec.rate * static_cast<double>(span)));
  if (target < 1) {
    throw std::invalid_argument("anomaly rate " + std::to_string(spec.rate) + " over " + std::to_string(span) +
                                " points places no anomaly");
  }

  for (std::size_t k = 0; k < K; ++k) {
    if (!(noise_scales[k] > 0.0)) throw std::invalid_argument("anomaly magnitudes need a positive noise scale");
    Rng rng(derive_seed(seed, 2, k));
    std::uint8_t* lab = out.labels->data() + k * N;
    double* row = out.values.data() + k * N;
    std::size_t placed = 0, attempts = 0;
    const std::size_t max_attempts = 1000 * target + 1000;
    while (placed < target) {
      if (++attempts > max_attempts) {
        throw std::invalid_argument("could not place " + std::to_string(target) + " anomalous points without overlap");
      }
      const std::size_t d = std::min<std::size_t>(rng.uniform_int(spec.duration_min, spec.duration_max), target - placed);
      if (d > span) continue;
      const std::size_t start = begin + rng.uniform_int(0, span - d);
      // keep one clean point between events
      const std::size_t lo = start > begin ? start - 1 : start;
      const std::size_t hi = std::min(end, start + d + 1);
      bool free = true;
      for (std::size_t n = lo; n < hi && free; ++n) free = lab[n] == 0;
      if (!free) continue;

      const AnomalyType type = spec.types[rng.uniform_int(0, spec.types.size() - 1)];
      const double mag = rng.uniform(spec.magnitude_min, spec.magnitude_max) * noise_scales[k];
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      for (std::size_t n = start; n < start + d; ++n) {
        double delta = 0.0;
        switch (type) {
          case AnomalyType::spike: delta = mag; break;
          case AnomalyType::dip: delta = -mag; break;
          case AnomalyType::level_shift: delta = sign * mag; break;
          case AnomalyType::noise_burst: {
            // at least half a magnitude so every point moves
            const double u = rng.normal();
            delta = mag * (u >= 0.0 ? 0.5 + u : -0.5 + u);
            break;
          }
        }
        row[n] += delta;
        lab[n] = 1;
      }
      placed += d;
    }
  }
  return out;
}

Series generate_benchmark(const GeneratorConfig& config, const SplitFractions& fractions, std::uint64_t seed) {
  Series s = generate_normal(config, seed);
  fractions.validate();
  const SeriesSplits splits = split_series(s, fractions);
  std::vector<double> scales;
  for (std::size_t k = 0; k < config.features; ++k) scales.push_back(config.recipe(k).noise_scale);
  return inject_anomalies(s, config.anomalies, scales, derive_seed(seed, 3), splits.test_begin,
                          splits.test_begin + splits.test.length());
}

}  // namespace diffad
