#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace erpcl {

/// One EEG epoch, channel-major ([channel][time]), in microvolts.
struct Trial {
  std::uint32_t subject_id = 0;
  std::uint8_t label = 0;  // 1 = ERP (target flash), 0 = non-ERP
  // Speller flash code: 1..R for rows, R+1..R+C for columns; 0 when not a speller trial.
  std::uint32_t stimulus_code = 0;
  std::vector<float> data;
};

struct Dataset {
  std::uint32_t n_channels = 8;
  std::uint32_t n_samples = 128;
  float sample_rate = 128.0f;
  std::vector<std::string> channel_names = default_channel_names();
  std::vector<Trial> trials;

  static std::vector<std::string> default_channel_names();

  /// Sorted distinct subject ids.
  std::vector<std::uint32_t> subjects() const;
  /// Trial indices per subject, in file order.
  std::map<std::uint32_t, std::vector<std::size_t>> subject_index() const;
  /// Trials of the given subjects, preserving order. Unknown ids are ignored.
  Dataset subset(const std::vector<std::uint32_t>& subject_ids) const;

  std::size_t count_label(std::uint8_t label) const;

  /// Throws ShapeError / ConfigError if a trial violates the header or label domain.
  void validate() const;
};

}  // namespace erpcl
