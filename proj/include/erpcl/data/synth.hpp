#pragma once

#include <cstdint>
#include <vector>

#include "erpcl/data/dataset.hpp"

namespace erpcl {

struct SpellerLayout {
  std::uint32_t rows = 6;
  std::uint32_t cols = 6;

  std::uint32_t flashes() const { return rows + cols; }
  std::uint32_t commands() const { return rows * cols; }
};

/// Oddball-EEG generator settings.
///
/// Each subject draws a P300 latency, amplitude, spatial pattern (peaking at Pz,
/// PO7, PO8, perturbed per subject) and noise scale. Background activity is AR(1)
/// noise, partly shared across channels. ERP trials add a Gaussian bump times the
/// spatial pattern; non-ERP trials are noise only.
struct SynthParams {
  std::uint32_t n_subjects = 10;
  std::uint32_t trials_per_subject = 120;

  // Speller mode groups trials into selections of rows+cols flashes with one
  // target row and one target column each, which fixes the target ratio at
  // 2/(rows+cols). Otherwise trials are independent with `target_ratio` ERPs.
  bool speller = true;
  SpellerLayout layout{};
  double target_ratio = 1.0 / 6.0;

  std::uint32_t n_channels = 8;
  std::uint32_t n_samples = 128;
  double sample_rate = 128.0;

  double latency_min_ms = 280.0;
  double latency_max_ms = 350.0;
  double amplitude_min_uv = 3.0;
  double amplitude_max_uv = 8.0;
  double amplitude_scale = 1.0;  // 0 gives ERP-free (null) data
  double bump_sigma_ms = 45.0;
  double spatial_jitter = 0.3;  // relative per-subject perturbation of the channel pattern

  double ar_coeff = 0.95;
  double noise_std_uv = 4.0;  // stationary standard deviation of the background
  double noise_scale_min = 0.8;
  double noise_scale_max = 1.25;
  double shared_noise_fraction = 0.9;  // variance share of the component common to all channels

  void validate() const;
};

/// Per-subject latent parameters drawn by the generator (exposed for tests).
struct SubjectProfile {
  std::uint32_t subject_id = 0;
  double latency_ms = 0.0;
  double amplitude_uv = 0.0;
  double noise_scale = 1.0;
  std::vector<double> spatial;  // one weight per channel
};

/// Channel weights of the ERP topography before per-subject perturbation. Peaks at
/// Pz/PO7/PO8 for the default montage; falls back to a flat pattern for other sizes.
std::vector<double> base_topography(std::uint32_t n_channels);

std::vector<SubjectProfile> synth_profiles(const SynthParams& params, std::uint64_t seed);
Dataset synth_generate(const SynthParams& params, std::uint64_t seed);

}  // namespace erpcl
