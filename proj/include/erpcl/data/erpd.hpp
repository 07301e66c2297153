#pragma once

// ERPD trial container (little-endian, no padding):
//
//   "ERPD" | u32 version (=1) | u32 n_trials | u32 M | u32 N | f32 fs
//   | u32 name block length | channel names joined by '\n' (UTF-8)
//   per trial: u32 subject_id | u8 label | u32 stimulus_code | f32 data[M*N] (channel-major)

#include <string>
#include <string_view>

#include "erpcl/data/dataset.hpp"

namespace erpcl {

inline constexpr std::uint32_t kErpdVersion = 1;

std::string encode_erpd(const Dataset& dataset);
/// Throws FormatError naming the byte offset on bad magic/version, truncation,
/// a trial count that disagrees with the byte length, or an out-of-range label.
Dataset decode_erpd(std::string_view bytes);

Dataset load_erpd(const std::string& path);
void save_erpd(const Dataset& dataset, const std::string& path);

}  // namespace erpcl
