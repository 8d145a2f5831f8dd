#pragma once

#include <cstdint>
#include <string>

#include "diffad/adam.hpp"
#include "diffad/data.hpp"
#include "diffad/denoiser.hpp"
#include "diffad/diffusion.hpp"

namespace diffad {

/// Everything needed to resume training or run detection.
struct Checkpoint {
  ModelParams model;
  NoiseSchedule schedule;
  NormStats norm;
  WindowMode mode = WindowMode::reconstruction;
  std::size_t history = 0;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;  // completed training steps
  AdamState adam;
};

inline constexpr char kCheckpointMagic[8] = {'D', 'F', 'A', 'D', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: magic, u32 version, u64 header length, header text, u64 double
/// count, little-endian doubles (parameters in header order, then Adam m and
/// v), u64 FNV-1a hash of all preceding bytes.
std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
/// Throws DataError on a bad magic, version or hash.
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
/// Hex content hash as stored in the file trailer.
std::string checkpoint_hash(const Checkpoint& ck);

}  // namespace diffad
