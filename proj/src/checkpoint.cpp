#include "diffad/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "diffad/config.hpp"

namespace diffad {

static_assert(std::endian::native == std::endian::little, "checkpoint blob assumes a little-endian host");

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw DataError("checkpoint truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + format_double(x);
  return s;
}

std::vector<double> split_doubles(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

std::string shape_token(const Shape& s) {
  std::string out;
  for (std::size_t d : s) out += (out.empty() ? "" : "x") + std::to_string(d);
  return out;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string header_text(const Checkpoint& ck) {
  const ModelConfig& m = ck.model.config;
  std::ostringstream h;
  h << "format = diffad-checkpoint\n";
  h << "model.backbone = " << to_string(m.backbone) << "\n";
  h << "model.features = " << m.features << "\n";
  h << "model.length = " << m.length << "\n";
  h << "model.channels = " << m.channels << "\n";
  h << "model.blocks = " << m.blocks << "\n";
  h << "model.state_dim = " << m.state_dim << "\n";
  h << "model.embed_dim = " << m.embed_dim << "\n";
  h << "model.mlp_hidden = " << m.mlp_hidden << "\n";
  h << "model.kernel_size = " << m.kernel_size << "\n";
  h << "model.dilation_cycle = " << m.dilation_cycle << "\n";
  h << "ssm.discretization = zoh\n";
  h << "diffusion.T = " << ck.schedule.steps << "\n";
  h << "diffusion.beta_start = " << format_double(ck.schedule.beta_start) << "\n";
  h << "diffusion.beta_end = " << format_double(ck.schedule.beta_end) << "\n";
  h << "diffusion.schedule = linear\n";
  h << "diffusion.sigma = sqrt_beta\n";
  h << "norm.method = " << to_string(ck.norm.method) << "\n";
  h << "norm.fitted_on = " << ck.norm.fitted_on << "\n";
  h << "norm.center = " << join(ck.norm.center) << "\n";
  h << "norm.scale = " << join(ck.norm.scale) << "\n";
  h << "window.mode = " << to_string(ck.mode) << "\n";
  h << "window.history = " << ck.history << "\n";
  h << "run.seed = " << ck.seed << "\n";
  h << "train.step = " << ck.step << "\n";
  h << "adam.step = " << ck.adam.step << "\n";
  h << "adam.moments = " << (ck.adam.m.empty() ? 0 : 1) << "\n";
  h << "param.order = declaration\n";
  const ParamSet& ps = ck.model.params;
  h << "param.count = " << ps.size() << "\n";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    h << "param." << i << " = " << ps.names()[i] << " " << shape_token(ps.values()[i].shape()) << "\n";
  }
  return h.str();
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw DataError("checkpoint header lacks '" + key + "'");
  return it->second;
}

std::size_t header_uint(const std::map<std::string, std::string>& kv, const std::string& key) {
  return parse_uint(key, require(kv, key));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  const ParamSet& ps = ck.model.params;
  const bool moments = !ck.adam.m.empty();
  if (moments && (ck.adam.m.size() != ps.size() || ck.adam.v.size() != ps.size())) {
    throw std::invalid_argument("Adam state does not match the parameter set");
  }
  const std::string header = header_text(ck);
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, header.size());
  out += header;
  std::uint64_t count = ps.scalar_count() * (moments ? 3 : 1);
  put<std::uint64_t>(out, count);
  auto blob = [&out](const std::vector<NdArray>& arrays) {
    for (const auto& a : arrays) out.append(reinterpret_cast<const char*>(a.data()), a.size() * sizeof(double));
  };
  blob(ps.values());
  if (moments) {
    blob(ck.adam.m);
    blob(ck.adam.v);
  }
  put<std::uint64_t>(out, fnv1a64(out));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kCheckpointMagic + 12 + 16 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw DataError("not a checkpoint (bad magic)");
  }
  const std::uint64_t stored = [&] {
    std::size_t p = bytes.size() - 8;
    return get<std::uint64_t>(bytes, p);
  }();
  if (fnv1a64(std::string_view(bytes).substr(0, bytes.size() - 8)) != stored) {
    throw DataError("checkpoint hash mismatch (corrupted file)");
  }
  std::size_t pos = 8;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto hlen = get<std::uint64_t>(bytes, pos);
  if (pos + hlen > bytes.size()) throw DataError("checkpoint truncated");
  const auto kv = parse_key_values(bytes.substr(pos, hlen));
  pos += hlen;

  Checkpoint ck;
  ModelConfig m;
  m.backbone = parse_backbone(require(kv, "model.backbone"));
  m.features = header_uint(kv, "model.features");
  m.length = header_uint(kv, "model.length");
  m.channels = header_uint(kv, "model.channels");
  m.blocks = header_uint(kv, "model.blocks");
  m.state_dim = header_uint(kv, "model.state_dim");
  m.embed_dim = header_uint(kv, "model.embed_dim");
  m.mlp_hidden = header_uint(kv, "model.mlp_hidden");
  m.kernel_size = header_uint(kv, "model.kernel_size");
  m.dilation_cycle = header_uint(kv, "model.dilation_cycle");
  if (require(kv, "ssm.discretization") != "zoh" || require(kv, "diffusion.sigma") != "sqrt_beta") {
    throw DataError("checkpoint uses an unsupported discretization or sigma rule");
  }
  ck.schedule = build_linear_schedule(header_uint(kv, "diffusion.T"),
                                      parse_double("beta_start", require(kv, "diffusion.beta_start")),
                                      parse_double("beta_end", require(kv, "diffusion.beta_end")));
  ck.norm.method = parse_norm_method(require(kv, "norm.method"));
  ck.norm.fitted_on = require(kv, "norm.fitted_on");
  ck.norm.center = split_doubles("norm.center", require(kv, "norm.center"));
  ck.norm.scale = split_doubles("norm.scale", require(kv, "norm.scale"));
  ck.mode = parse_window_mode(require(kv, "window.mode"));
  ck.history = header_uint(kv, "window.history");
  ck.seed = header_uint(kv, "run.seed");
  ck.step = header_uint(kv, "train.step");
  const bool moments = header_uint(kv, "adam.moments") != 0;

  // Shapes and names come from the architecture; the header must agree.
  ck.model = init_model(m, 0);
  ParamSet& ps = ck.model.params;
  if (header_uint(kv, "param.count") != ps.size()) throw DataError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const std::string expect = ps.names()[i] + " " + shape_token(ps.values()[i].shape());
    if (require(kv, "param." + std::to_string(i)) != expect) {
      throw DataError("checkpoint parameter " + std::to_string(i) + " is '" + kv.at("param." + std::to_string(i)) +
                      "', architecture expects '" + expect + "'");
    }
  }
  const auto count = get<std::uint64_t>(bytes, pos);
  if (count != ps.scalar_count() * (moments ? 3 : 1) || pos + count * sizeof(double) + 8 != bytes.size()) {
    throw DataError("checkpoint blob size does not match the header");
  }
  auto read = [&](std::vector<NdArray>& arrays) {
    for (auto& a : arrays) {
      std::memcpy(a.data(), bytes.data() + pos, a.size() * sizeof(double));
      pos += a.size() * sizeof(double);
    }
  };
  read(ps.values());
  ck.adam.step = header_uint(kv, "adam.step");
  if (moments) {
    ck.adam.m = AdamState::for_params(ps.values()).m;
    ck.adam.v = ck.adam.m;
    read(ck.adam.m);
    read(ck.adam.v);
  }
  if (!ps.all_finite()) throw DataError("checkpoint contains non-finite parameters");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ck);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot write checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

std::string checkpoint_hash(const Checkpoint& ck) {
  const std::string bytes = serialize_checkpoint(ck);
  std::uint64_t h;
  std::memcpy(&h, bytes.data() + bytes.size() - 8, 8);
  return hex64(h);
}

}  // namespace diffad
