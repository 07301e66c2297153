#pragma once

// ERPW parameter checkpoints.
//
//   "ERPW" | u32 version (=1) | u32 entry count
//   per entry: u32 name length | name bytes (UTF-8) | u32 rank | u32 dims[rank] | f32 values[prod(dims)]
//
// All integers and floats little-endian, no padding.

#include <cstdint>
#include <string>
#include <vector>

#include "erpcl/model/params.hpp"

namespace erpcl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(const std::string& name) const;
  bool has_prefix(const std::string& prefix) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError (with byte offset) on bad magic, version, truncation or trailing bytes.
Checkpoint decode_checkpoint(std::string_view bytes);

Checkpoint read_checkpoint(const std::string& path);
void write_checkpoint(const std::string& path, const Checkpoint& ckpt);

/// Snapshot of every parameter and batch-norm running moment whose name starts
/// with one of `prefixes` (all entries when empty).
Checkpoint make_checkpoint(const ModelParams<float>& params, const std::vector<std::string>& prefixes = {});

/// Copies entries into `params`. Every entry must name an existing tensor with an
/// identical shape, otherwise ShapeError. Returns the number of entries applied.
std::size_t apply_checkpoint(const Checkpoint& ckpt, ModelParams<float>& params);

/// `base` with the encoder branches, kernel counts and (when present) projector
/// and classifier sizes read off the checkpoint's tensor shapes. Geometry
/// (channels, samples, sample rate) is kept from `base`.
ModelConfig infer_config(const Checkpoint& ckpt, ModelConfig base);

}  // namespace erpcl
