#include "diffad/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace diffad {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Entry {
  std::string key;
  std::function<std::string(const ToolkitConfig&)> get;
  std::function<void(ToolkitConfig&, const std::string&)> set;
};

template <class T>
Entry size_entry(std::string key, T ToolkitConfig::*field) {
  return {key, [field](const ToolkitConfig& c) { return std::to_string(c.*field); },
          [key, field](ToolkitConfig& c, const std::string& v) { c.*field = static_cast<T>(parse_uint(key, v)); }};
}

Entry real_entry(std::string key, std::function<double&(ToolkitConfig&)> ref) {
  return {key, [ref](const ToolkitConfig& c) { return format_double(ref(const_cast<ToolkitConfig&>(c))); },
          [key, ref](ToolkitConfig& c, const std::string& v) { ref(c) = parse_double(key, v); }};
}

Entry count_entry(std::string key, std::function<std::size_t&(ToolkitConfig&)> ref) {
  return {key, [ref](const ToolkitConfig& c) { return std::to_string(ref(const_cast<ToolkitConfig&>(c))); },
          [key, ref](ToolkitConfig& c, const std::string& v) { ref(c) = parse_uint(key, v); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back({"data.path", [](const ToolkitConfig& c) { return c.data_path; },
                 [](ToolkitConfig& c, const std::string& v) { c.data_path = v; }});
    t.push_back(real_entry("data.train", [](ToolkitConfig& c) -> double& { return c.splits.train; }));
    t.push_back(real_entry("data.validation", [](ToolkitConfig& c) -> double& { return c.splits.validation; }));
    t.push_back(real_entry("data.test", [](ToolkitConfig& c) -> double& { return c.splits.test; }));
    t.push_back({"data.normalization", [](const ToolkitConfig& c) { return to_string(c.normalization); },
                 [](ToolkitConfig& c, const std::string& v) {
                   try {
                     c.normalization = parse_norm_method(v);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(std::string("data.normalization: ") + e.what());
                   }
                 }});
    t.push_back({"window.mode", [](const ToolkitConfig& c) { return to_string(c.mode); },
                 [](ToolkitConfig& c, const std::string& v) {
                   try {
                     c.mode = parse_window_mode(v);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(std::string("window.mode: ") + e.what());
                   }
                 }});
    t.push_back(size_entry("window.length", &ToolkitConfig::window_length));
    t.push_back(size_entry("window.history", &ToolkitConfig::history));
    t.push_back(size_entry("window.stride", &ToolkitConfig::stride));
    t.push_back(size_entry("diffusion.T", &ToolkitConfig::diffusion_steps));
    t.push_back(real_entry("diffusion.beta_start", [](ToolkitConfig& c) -> double& { return c.beta_start; }));
    t.push_back(real_entry("diffusion.beta_end", [](ToolkitConfig& c) -> double& { return c.beta_end; }));
    t.push_back(size_entry("diffusion.noise_step", &ToolkitConfig::noise_step));
    t.push_back({"model.backbone", [](const ToolkitConfig& c) { return to_string(c.backbone); },
                 [](ToolkitConfig& c, const std::string& v) {
                   try {
                     c.backbone = parse_backbone(v);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(std::string("model.backbone: ") + e.what());
                   }
                 }});
    t.push_back(size_entry("model.channels", &ToolkitConfig::channels));
    t.push_back(size_entry("model.blocks", &ToolkitConfig::blocks));
    t.push_back(size_entry("model.state_dim", &ToolkitConfig::state_dim));
    t.push_back(size_entry("model.embed_dim", &ToolkitConfig::embed_dim));
    t.push_back(size_entry("model.mlp_hidden", &ToolkitConfig::mlp_hidden));
    t.push_back(size_entry("model.kernel_size", &ToolkitConfig::kernel_size));
    t.push_back(size_entry("train.steps", &ToolkitConfig::train_steps));
    t.push_back(size_entry("train.batch_size", &ToolkitConfig::batch_size));
    t.push_back(size_entry("train.stride", &ToolkitConfig::train_stride));
    t.push_back(size_entry("train.checkpoint_every", &ToolkitConfig::checkpoint_every));
    t.push_back(real_entry("train.learning_rate", [](ToolkitConfig& c) -> double& { return c.adam.learning_rate; }));
    t.push_back(real_entry("train.beta1", [](ToolkitConfig& c) -> double& { return c.adam.beta1; }));
    t.push_back(real_entry("train.beta2", [](ToolkitConfig& c) -> double& { return c.adam.beta2; }));
    t.push_back(real_entry("train.epsilon", [](ToolkitConfig& c) -> double& { return c.adam.epsilon; }));
    t.push_back(real_entry("train.clip_norm", [](ToolkitConfig& c) -> double& { return c.adam.clip_norm; }));
    t.push_back(size_entry("detect.batch", &ToolkitConfig::sample_batch));
    t.push_back(real_entry("detector.k", [](ToolkitConfig& c) -> double& { return c.detector.k; }));
    t.push_back({"detector.k_per_feature",
                 [](const ToolkitConfig& c) {
                   std::string s;
                   for (double v : c.detector.k_per_feature) s += (s.empty() ? "" : ",") + format_double(v);
                   return s;
                 },
                 [](ToolkitConfig& c, const std::string& v) {
                   c.detector.k_per_feature.clear();
                   for (const auto& item : split_list(v)) {
                     c.detector.k_per_feature.push_back(parse_double("detector.k_per_feature", item));
                   }
                 }});
    t.push_back({"detector.robust_scale", [](const ToolkitConfig& c) { return c.detector.robust_scale ? "true" : "false"; },
                 [](ToolkitConfig& c, const std::string& v) {
                   c.detector.robust_scale = parse_bool("detector.robust_scale", v);
                 }});
    t.push_back(count_entry("generate.features", [](ToolkitConfig& c) -> std::size_t& { return c.generator.features; }));
    t.push_back(count_entry("generate.length", [](ToolkitConfig& c) -> std::size_t& { return c.generator.length; }));
    t.push_back(real_entry("generate.rate", [](ToolkitConfig& c) -> double& { return c.generator.anomalies.rate; }));
    t.push_back({"generate.types",
                 [](const ToolkitConfig& c) {
                   std::string s;
                   for (auto ty : c.generator.anomalies.types) s += (s.empty() ? "" : ",") + to_string(ty);
                   return s;
                 },
                 [](ToolkitConfig& c, const std::string& v) {
                   c.generator.anomalies.types.clear();
                   for (const auto& item : split_list(v)) {
                     try {
                       c.generator.anomalies.types.push_back(parse_anomaly_type(item));
                     } catch (const std::invalid_argument& e) {
                       throw ConfigError(std::string("generate.types: ") + e.what());
                     }
                   }
                 }});
    t.push_back(real_entry("generate.magnitude_min",
                           [](ToolkitConfig& c) -> double& { return c.generator.anomalies.magnitude_min; }));
    t.push_back(real_entry("generate.magnitude_max",
                           [](ToolkitConfig& c) -> double& { return c.generator.anomalies.magnitude_max; }));
    t.push_back(count_entry("generate.duration_min",
                            [](ToolkitConfig& c) -> std::size_t& { return c.generator.anomalies.duration_min; }));
    t.push_back(count_entry("generate.duration_max",
                            [](ToolkitConfig& c) -> std::size_t& { return c.generator.anomalies.duration_max; }));
    t.push_back({"run.seed", [](const ToolkitConfig& c) { return std::to_string(c.seed); },
                 [](ToolkitConfig& c, const std::string& v) { c.seed = parse_uint("run.seed", v); }});
    return t;
  }();
  return table;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (out.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ToolkitConfig parse_config(const std::string& text, ToolkitConfig base) {
  for (const auto& [key, value] : parse_key_values(text)) {
    const auto& table = entries();
    auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return e.key == key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(base, value);
  }
  base.validate();
  return base;
}

ToolkitConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ToolkitConfig& config) {
  std::string out;
  for (const auto& e : entries()) out += e.key + " = " + e.get(config) + "\n";
  return out;
}

void ToolkitConfig::validate() const {
  try {
    splits.validate();
    generator.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (window_length == 0) throw ConfigError("window.length must be >= 1");
  if (mode == WindowMode::forecasting) {
    if (history == 0 || history >= window_length) {
      throw ConfigError("forecasting needs 0 < window.history < window.length");
    }
  } else if (history != 0) {
    throw ConfigError("window.history is only valid in forecasting mode");
  }
  if (diffusion_steps == 0) throw ConfigError("diffusion.T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ConfigError("diffusion betas must satisfy 0 < beta_start <= beta_end < 1");
  }
  if (noise_step > diffusion_steps) throw ConfigError("diffusion.noise_step exceeds diffusion.T");
  if (mode == WindowMode::forecasting && noise_step != 0) {
    throw ConfigError("diffusion.noise_step applies to reconstruction mode only");
  }
  if (batch_size == 0 || train_stride == 0 || sample_batch == 0) {
    throw ConfigError("batch sizes and strides must be >= 1");
  }
  if (!(adam.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (!(detector.k >= 0.0)) throw ConfigError("detector.k must be >= 0");
  for (double k : detector.k_per_feature) {
    if (!(k >= 0.0)) throw ConfigError("detector.k_per_feature entries must be >= 0");
  }
  try {
    model_config(1).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::size_t ToolkitConfig::detection_stride() const {
  if (stride != 0) return stride;
  return mode == WindowMode::forecasting ? window_length - history : window_length;
}

ModelConfig ToolkitConfig::model_config(std::size_t features) const {
  ModelConfig m;
  m.backbone = backbone;
  m.features = features;
  m.length = window_length;
  m.channels = channels;
  m.blocks = blocks;
  m.state_dim = state_dim;
  m.embed_dim = embed_dim;
  m.mlp_hidden = mlp_hidden;
  m.kernel_size = kernel_size;
  return m;
}

}  // namespace diffad
