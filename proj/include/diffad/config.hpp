#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffad/adam.hpp"
#include "diffad/data.hpp"
#include "diffad/denoiser.hpp"
#include "diffad/detector.hpp"
#include "diffad/synthdata.hpp"

namespace diffad {

/// Malformed or inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ToolkitConfig {
  // data
  std::string data_path;  // dataset CSV; empty = <out>/data.csv
  SplitFractions splits;
  NormMethod normalization = NormMethod::mean_std;

  // window
  WindowMode mode = WindowMode::reconstruction;
  std::size_t window_length = 100;
  std::size_t history = 0;  // forecasting only
  std::size_t stride = 0;   // detection stride; 0 = L (reconstruction) or L - h (forecasting)

  // diffusion
  std::size_t diffusion_steps = 200;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::size_t noise_step = 0;  // reconstruction noising depth; 0 = T

  // model
  Backbone backbone = Backbone::ssm;
  std::size_t channels = 32;
  std::size_t blocks = 4;
  std::size_t state_dim = 16;
  std::size_t embed_dim = 64;
  std::size_t mlp_hidden = 256;
  std::size_t kernel_size = 3;

  // train
  std::size_t train_steps = 2000;
  std::size_t batch_size = 16;
  std::size_t train_stride = 1;
  std::size_t checkpoint_every = 500;
  AdamConfig adam;

  // detect
  std::size_t sample_batch = 32;
  DetectorConfig detector;

  // generate
  GeneratorConfig generator;

  std::uint64_t seed = 0;

  void validate() const;
  std::size_t detection_stride() const;
  ModelConfig model_config(std::size_t features) const;
};

/// Flat `section.key = value` text; '#' starts a comment. Unknown keys are errors.
ToolkitConfig parse_config(const std::string& text, ToolkitConfig base = {});
ToolkitConfig load_config(const std::string& path);
/// Every key with its current value, in a form parse_config accepts.
std::string to_text(const ToolkitConfig& config);

/// `key = value` lines to an ordered map; shared with checkpoint headers.
std::map<std::string, std::string> parse_key_values(const std::string& text);

std::string format_double(double v);
double parse_double(const std::string& key, const std::string& v);
std::uint64_t parse_uint(const std::string& key, const std::string& v);

}  // namespace diffad
