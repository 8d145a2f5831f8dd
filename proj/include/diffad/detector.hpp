#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diffad/ndarray.hpp"

namespace diffad {

inline constexpr double kSigmaFloor = 1e-12;

/// s = |x - x_hat| elementwise.
NdArray residual(const NdArray& x, const NdArray& x_hat);

struct DetectorConfig {
  double k = 3.0;
  std::vector<double> k_per_feature;  // overrides k when non-empty
  bool robust_scale = false;          // 1.4826 * MAD instead of std

  double k_for(std::size_t feature) const;
  void validate(std::size_t features) const;
};

/// Reference-split statistics for one feature.
struct FeatureStats {
  double center = 0.0;  // median of reference residuals
  double sigma = 0.0;   // population std (or scaled MAD), clamped
  double z_mean = 0.0;
  double z_std = 0.0;
  double k = 3.0;
  bool constant = false;  // reference residuals all equal; Z is reported as 0

  double threshold() const { return z_mean + k * z_std; }
};

struct ZScoreStats {
  std::vector<FeatureStats> features;
  std::string reference;
};

double median(std::span<const double> v);

/// Median center and (clamped) scale of one feature's reference residuals.
FeatureStats fit_residual_stats(std::span<const double> reference, bool robust_scale);
std::vector<double> zscore(std::span<const double> s, const FeatureStats& stats);

struct Threshold {
  double z_mean = 0.0;
  double z_std = 0.0;
  double value = 0.0;
};
/// Z-bar + k * Sigma over the reference Z; population std.
Threshold compute_threshold(std::span<const double> z_reference, double k);

/// |Z| > threshold, strictly.
std::vector<std::uint8_t> flag_anomalies(std::span<const double> z, double threshold);
/// OR across features of K*N row-major flags.
std::vector<std::uint8_t> aggregate_flags(std::span<const std::uint8_t> flags, std::size_t features);

/// Fits per-feature stats on reference residuals [K,N]; only points with
/// covered[n] != 0 take part (empty covered = all).
ZScoreStats fit_detector(const NdArray& reference_residuals, std::span<const std::uint8_t> covered,
                         const DetectorConfig& config, const std::string& reference_name = "validation");

struct DetectionReport {
  NdArray residual;  // [K,N]
  NdArray z;         // [K,N]; 0 where uncovered
  std::vector<double> thresholds;
  std::vector<std::uint8_t> covered;    // N
  std::vector<std::uint8_t> flags;      // K*N
  std::vector<std::uint8_t> aggregate;  // N
  ZScoreStats stats;

  std::size_t features() const { return residual.dim(0); }
  std::size_t length() const { return residual.dim(1); }
  std::size_t flagged_count() const;
};

DetectionReport detect(const NdArray& residuals, std::span<const std::uint8_t> covered, const ZScoreStats& stats);

}  // namespace diffad
