#include "diffad/detector.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace diffad {

NdArray residual(const NdArray& x, const NdArray& x_hat) {
  if (x.shape() != x_hat.shape()) {
    throw ShapeError("residual: " + shape_string(x.shape()) + " vs " + shape_string(x_hat.shape()));
  }
  NdArray s(x.shape());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::abs(x[i] - x_hat[i]);
  return s;
}

double DetectorConfig::k_for(std::size_t feature) const {
  return k_per_feature.empty() ? k : k_per_feature.at(feature);
}

void DetectorConfig::validate(std::size_t features) const {
  if (!k_per_feature.empty() && k_per_feature.size() != features) {
    throw std::invalid_argument("detector: " + std::to_string(k_per_feature.size()) + " k values for " +
                                std::to_string(features) + " features");
  }
  if (!(k >= 0.0)) throw std::invalid_argument("detector: k must be >= 0");
  for (double v : k_per_feature) {
    if (!(v >= 0.0)) throw std::invalid_argument("detector: k must be >= 0");
  }
}

double median(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sequence");
  std::vector<double> w(v.begin(), v.end());
  const std::size_t mid = w.size() / 2;
  std::nth_element(w.begin(), w.begin() + mid, w.end());
  const double hi = w[mid];
  if (w.size() % 2 == 1) return hi;
  const double lo = *std::max_element(w.begin(), w.begin() + mid);
  return 0.5 * (lo + hi);
}

namespace {

void mean_std(std::span<const double> v, double& mean, double& sd) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  mean = m;
  sd = std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

FeatureStats fit_residual_stats(std::span<const double> reference, bool robust_scale) {
  if (reference.empty()) throw std::invalid_argument("empty reference residuals");
  FeatureStats st;
  st.center = median(reference);
  double mean = 0.0, sd = 0.0;
  mean_std(reference, mean, sd);
  if (robust_scale) {
    std::vector<double> dev;
    dev.reserve(reference.size());
    for (double x : reference) dev.push_back(std::abs(x - st.center));
    sd = 1.4826 * median(dev);
  }
  const auto [lo, hi] = std::minmax_element(reference.begin(), reference.end());
  st.constant = *lo == *hi;
  st.sigma = std::max(sd, kSigmaFloor);
  return st;
}

std::vector<double> zscore(std::span<const double> s, const FeatureStats& stats) {
  std::vector<double> z(s.size(), 0.0);
  if (stats.constant) return z;
  for (std::size_t i = 0; i < s.size(); ++i) z[i] = (s[i] - stats.center) / stats.sigma;
  return z;
}

Threshold compute_threshold(std::span<const double> z_reference, double k) {
  if (z_reference.empty()) throw std::invalid_argument("compute_threshold: empty reference");
  Threshold t;
  mean_std(z_reference, t.z_mean, t.z_std);
  t.value = t.z_mean + k * t.z_std;
  return t;
}

std::vector<std::uint8_t> flag_anomalies(std::span<const double> z, double threshold) {
  std::vector<std::uint8_t> f(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) f[i] = std::abs(z[i]) > threshold ? 1 : 0;
  return f;
}

std::vector<std::uint8_t> aggregate_flags(std::span<const std::uint8_t> flags, std::size_t features) {
  if (features == 0 || flags.size() % features != 0) throw ShapeError("aggregate_flags: grid not divisible by K");
  const std::size_t n = flags.size() / features;
  std::vector<std::uint8_t> out(n, 0);
  for (std::size_t k = 0; k < features; ++k) {
    for (std::size_t i = 0; i < n; ++i) out[i] |= flags[k * n + i];
  }
  return out;
}

namespace {

std::vector<double> covered_row(const NdArray& grid, std::size_t k, std::span<const std::uint8_t> covered) {
  const std::size_t n = grid.dim(1);
  std::vector<double> v;
  v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (covered.empty() || covered[i]) v.push_back(grid[k * n + i]);
  }
  return v;
}

void check_grid(const NdArray& grid, std::span<const std::uint8_t> covered) {
  if (grid.rank() != 2) throw ShapeError("detector expects residuals [K,N], got " + shape_string(grid.shape()));
  if (!covered.empty() && covered.size() != grid.dim(1)) {
    throw ShapeError("coverage mask has " + std::to_string(covered.size()) + " points for N=" +
                     std::to_string(grid.dim(1)));
  }
}

}  // namespace

ZScoreStats fit_detector(const NdArray& reference_residuals, std::span<const std::uint8_t> covered,
                         const DetectorConfig& config, const std::string& reference_name) {
  check_grid(reference_residuals, covered);
  const std::size_t K = reference_residuals.dim(0);
  config.validate(K);
  ZScoreStats out;
  out.reference = reference_name;
  for (std::size_t k = 0; k < K; ++k) {
    const std::vector<double> ref = covered_row(reference_residuals, k, covered);
    FeatureStats st = fit_residual_stats(ref, config.robust_scale);
    if (st.constant) std::cerr << "warning: feature " << k << " has constant reference residuals; Z set to 0\n";
    const Threshold t = compute_threshold(zscore(ref, st), config.k_for(k));
    st.z_mean = t.z_mean;
    st.z_std = t.z_std;
    st.k = config.k_for(k);
    out.features.push_back(st);
  }
  return out;
}

std::size_t DetectionReport::flagged_count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

DetectionReport detect(const NdArray& residuals, std::span<const std::uint8_t> covered, const ZScoreStats& stats) {
  check_grid(residuals, covered);
  const std::size_t K = residuals.dim(0), N = residuals.dim(1);
  if (stats.features.size() != K) {
    throw ShapeError("detector stats for " + std::to_string(stats.features.size()) + " features, data has " +
                     std::to_string(K));
  }
  DetectionReport r;
  r.residual = residuals;
  r.z = NdArray(residuals.shape());
  r.covered = covered.empty() ? std::vector<std::uint8_t>(N, 1) : std::vector<std::uint8_t>(covered.begin(), covered.end());
  r.flags.assign(K * N, 0);
  r.stats = stats;
  for (std::size_t k = 0; k < K; ++k) {
    const FeatureStats& st = stats.features[k];
    const double thr = st.threshold();
    r.thresholds.push_back(thr);
    const std::vector<double> z = zscore({residuals.data() + k * N, N}, st);
    for (std::size_t i = 0; i < N; ++i) {
      if (!r.covered[i]) continue;
      r.z[k * N + i] = z[i];
      r.flags[k * N + i] = std::abs(z[i]) > thr ? 1 : 0;
    }
  }
  r.aggregate = aggregate_flags(r.flags, K);
  return r;
}

}  // namespace diffad
