#include "erpcl/data/erpd.hpp"

#include "erpcl/binio.hpp"
#include "erpcl/error.hpp"

namespace erpcl {
namespace {

constexpr std::string_view kMagic = "ERPD";

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out.push_back('\n');
    out += names[i];
  }
  return out;
}

std::vector<std::string> split_names(std::string_view block) {
  std::vector<std::string> out;
  if (block.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = block.find('\n', start);
    out.emplace_back(block.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

}  // namespace

std::string encode_erpd(const Dataset& dataset) {
  dataset.validate();
  binio::Writer w;
  w.bytes(kMagic);
  w.u32(kErpdVersion);
  w.u32(static_cast<std::uint32_t>(dataset.trials.size()));
  w.u32(dataset.n_channels);
  w.u32(dataset.n_samples);
  w.f32(dataset.sample_rate);
  const std::string names = join_names(dataset.channel_names);
  w.u32(static_cast<std::uint32_t>(names.size()));
  w.bytes(names);
  for (const auto& t : dataset.trials) {
    w.u32(t.subject_id);
    w.u8(t.label);
    w.u32(t.stimulus_code);
    for (float v : t.data) w.f32(v);
  }
  return w.take();
}

Dataset decode_erpd(std::string_view bytes) {
  binio::Reader r(bytes, "ERPD file");
  if (r.bytes(4) != kMagic) throw FormatError("ERPD file: bad magic", 0);
  const auto version_at = r.offset();
  const std::uint32_t version = r.u32();
  if (version != kErpdVersion) throw FormatError("ERPD file: unsupported version " + std::to_string(version), version_at);

  Dataset ds;
  const std::uint32_t n_trials = r.u32();
  ds.n_channels = r.u32();
  ds.n_samples = r.u32();
  ds.sample_rate = r.f32();
  const std::uint32_t name_len = r.u32();
  ds.channel_names = split_names(r.bytes(name_len));
  if (!ds.channel_names.empty() && ds.channel_names.size() != ds.n_channels) {
    throw FormatError("ERPD file: " + std::to_string(ds.channel_names.size()) + " channel names for " +
                          std::to_string(ds.n_channels) + " channels",
                      r.offset() - name_len);
  }

  const std::uint64_t values = static_cast<std::uint64_t>(ds.n_channels) * ds.n_samples;
  const std::uint64_t record = 4 + 1 + 4 + 4 * values;
  const std::uint64_t expected = r.offset() + record * n_trials;
  if (expected != r.size()) {
    const std::uint64_t at = std::min<std::uint64_t>(expected, r.size());
    throw FormatError("ERPD file: header declares " + std::to_string(n_trials) + " trials of " +
                          std::to_string(ds.n_channels) + "x" + std::to_string(ds.n_samples) +
                          ", expected length " + std::to_string(expected) + " bytes but file has " +
                          std::to_string(r.size()),
                      at);
  }

  ds.trials.resize(n_trials);
  for (auto& t : ds.trials) {
    t.subject_id = r.u32();
    const auto label_at = r.offset();
    t.label = r.u8();
    if (t.label > 1) throw FormatError("ERPD file: label " + std::to_string(t.label) + " outside {0, 1}", label_at);
    t.stimulus_code = r.u32();
    t.data.resize(values);
    for (auto& v : t.data) v = r.f32();
  }
  return ds;
}

Dataset load_erpd(const std::string& path) { return decode_erpd(binio::read_file(path)); }

void save_erpd(const Dataset& dataset, const std::string& path) { binio::write_file(path, encode_erpd(dataset)); }

}  // namespace erpcl
