#include "erpcl/model/checkpoint.hpp"

#include <algorithm>

#include "erpcl/binio.hpp"
#include "erpcl/error.hpp"

namespace erpcl {
namespace {

constexpr std::string_view kMagic = "ERPW";

bool starts_with_any(const std::string& name, const std::vector<std::string>& prefixes) {
  if (prefixes.empty()) return true;
  return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return name.starts_with(p); });
}

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
  auto it = std::find_if(entries.begin(), entries.end(), [&](const CheckpointEntry& e) { return e.name == name; });
  return it == entries.end() ? nullptr : &*it;
}

bool Checkpoint::has_prefix(const std::string& prefix) const {
  return std::any_of(entries.begin(), entries.end(),
                     [&](const CheckpointEntry& e) { return e.name.starts_with(prefix); });
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  binio::Writer w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    if (shape_numel(e.shape) != e.values.size()) {
      throw ShapeError("checkpoint entry '" + e.name + "' shape " + shape_str(e.shape) + " does not match " +
                       std::to_string(e.values.size()) + " values");
    }
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name);
    w.u32(static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t d : e.shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : e.values) w.f32(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  binio::Reader r(bytes, "ERPW checkpoint");
  if (r.bytes(4) != kMagic) throw FormatError("ERPW checkpoint: bad magic", 0);
  const auto version_at = r.offset();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("ERPW checkpoint: unsupported version " + std::to_string(version), version_at);
  }
  const std::uint32_t count = r.u32();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const std::uint32_t name_len = r.u32();
    e.name = std::string(r.bytes(name_len));
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw FormatError("ERPW checkpoint: entry '" + e.name + "' has implausible rank " + std::to_string(rank), r.offset() - 4);
    for (std::uint32_t d = 0; d < rank; ++d) e.shape.push_back(r.u32());
    const std::size_t n = shape_numel(e.shape);
    if (n * 4 > r.remaining()) {
      throw FormatError("ERPW checkpoint: truncated entry '" + e.name + "', expected " +
                            std::to_string(r.offset() + n * 4) + " bytes but file has " + std::to_string(r.size()),
                        r.offset());
    }
    e.values.resize(n);
    for (auto& v : e.values) v = r.f32();
    ckpt.entries.push_back(std::move(e));
  }
  if (r.remaining() != 0) {
    throw FormatError("ERPW checkpoint: " + std::to_string(r.remaining()) + " unexpected trailing bytes", r.offset());
  }
  return ckpt;
}

Checkpoint read_checkpoint(const std::string& path) { return decode_checkpoint(binio::read_file(path)); }

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  binio::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint make_checkpoint(const ModelParams<float>& params, const std::vector<std::string>& prefixes) {
  Checkpoint ckpt;
  for (const auto& e : params.state_entries()) {
    if (!starts_with_any(e.name, prefixes)) continue;
    ckpt.entries.push_back({e.name, e.tensor.shape(), {e.tensor.data().begin(), e.tensor.data().end()}});
  }
  return ckpt;
}

std::size_t apply_checkpoint(const Checkpoint& ckpt, ModelParams<float>& params) {
  auto targets = params.all_params();
  std::size_t applied = 0;
  for (const auto& e : ckpt.entries) {
    auto it = std::find_if(targets.begin(), targets.end(), [&](const NamedTensor<float>& t) { return t.name == e.name; });
    if (it != targets.end()) {
      if (it->tensor.shape() != e.shape) {
        throw ShapeError("checkpoint entry '" + e.name + "' has shape " + shape_str(e.shape) +
                         " but the configured model expects " + shape_str(it->tensor.shape()));
      }
      std::copy(e.values.begin(), e.values.end(), it->tensor.mutable_data().begin());
      ++applied;
      continue;
    }
    bool matched = false;
    for (std::size_t b = 0; b < params.projector.size() && !matched; ++b) {
      const std::string p = "projector.b" + std::to_string(b) + ".bn.";
      auto& bn = params.projector[b].bn;
      std::vector<float>* dst = nullptr;
      if (e.name == p + "running_mean") dst = &bn.running_mean;
      if (e.name == p + "running_var") dst = &bn.running_var;
      if (!dst) continue;
      if (e.shape != Shape{dst->size()}) {
        throw ShapeError("checkpoint entry '" + e.name + "' has shape " + shape_str(e.shape) +
                         " but the configured model expects [" + std::to_string(dst->size()) + "]");
      }
      *dst = e.values;
      matched = true;
    }
    if (!matched) throw ShapeError("checkpoint entry '" + e.name + "' does not exist in the configured model");
    ++applied;
  }
  return applied;
}

}  // namespace erpcl

namespace erpcl {

ModelConfig infer_config(const Checkpoint& ckpt, ModelConfig base) {
  auto dims = [&](const std::string& name, std::size_t rank) -> const Shape* {
    const auto* e = ckpt.find(name);
    if (!e) return nullptr;
    if (e->shape.size() != rank) throw ShapeError("checkpoint: " + name + " has rank " + std::to_string(e->shape.size()));
    return &e->shape;
  };
  std::vector<std::size_t> lengths;
  std::size_t kernels = 0;
  for (std::size_t b = 0;; ++b) {
    const Shape* s = dims("encoder.b" + std::to_string(b) + ".temporal", 2);
    if (!s) break;
    if (b > 0 && (*s)[0] != kernels) throw ShapeError("checkpoint: branches disagree on kernel count");
    kernels = (*s)[0];
    lengths.push_back((*s)[1]);
  }
  if (lengths.empty()) throw ShapeError("checkpoint: no encoder tensors");
  base.encoder.kernel_lengths = lengths;
  base.encoder.kernels_per_branch = kernels;
  if (const Shape* s = dims("projector.b0.spatial", 2)) base.projector.kernels_per_branch = (*s)[0];
  const Shape* c1 = dims("classifier.conv1.weight", 3);
  const Shape* c2 = dims("classifier.conv2.weight", 3);
  if (c1 && c2) {
    base.classifier.filters = {(*c1)[0], (*c2)[0]};
    base.classifier.kernel_lengths = {(*c1)[2], (*c2)[2]};
  }
  base.validate();
  return base;
}

}  // namespace erpcl
