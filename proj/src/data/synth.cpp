#include "erpcl/data/synth.hpp"

#include <cmath>

#include "erpcl/error.hpp"
#include "erpcl/rng.hpp"

namespace erpcl {
namespace {

constexpr std::uint64_t kProfileStream = 1;
constexpr std::uint64_t kTrialStream = 2;

// AR(1) sequence with stationary standard deviation `sd`, started in equilibrium.
void ar1(Rng& rng, double coeff, double sd, std::vector<double>& out) {
  const double innov = sd * std::sqrt(1.0 - coeff * coeff);
  double x = sd * rng.normal();
  for (auto& v : out) {
    v = x;
    x = coeff * x + innov * rng.normal();
  }
}

void add_noise(Rng& rng, const SynthParams& p, double scale, std::vector<float>& data) {
  const std::size_t n = p.n_samples;
  const double sd = p.noise_std_uv * scale;
  const double shared_sd = sd * std::sqrt(p.shared_noise_fraction);
  const double own_sd = sd * std::sqrt(1.0 - p.shared_noise_fraction);
  std::vector<double> shared(n);
  std::vector<double> own(n);
  ar1(rng, p.ar_coeff, shared_sd, shared);
  for (std::uint32_t c = 0; c < p.n_channels; ++c) {
    ar1(rng, p.ar_coeff, own_sd, own);
    for (std::size_t t = 0; t < n; ++t) data[c * n + t] += static_cast<float>(shared[t] + own[t]);
  }
}

void add_erp(const SynthParams& p, const SubjectProfile& s, std::vector<float>& data) {
  const std::size_t n = p.n_samples;
  const double sigma = p.bump_sigma_ms;
  for (std::size_t t = 0; t < n; ++t) {
    const double ms = 1000.0 * static_cast<double>(t) / p.sample_rate;
    const double z = (ms - s.latency_ms) / sigma;
    const double bump = s.amplitude_uv * std::exp(-0.5 * z * z);
    for (std::uint32_t c = 0; c < p.n_channels; ++c) data[c * n + t] += static_cast<float>(bump * s.spatial[c]);
  }
}

}  // namespace

void SynthParams::validate() const {
  if (n_subjects == 0) throw ConfigError("synth: need at least one subject");
  if (trials_per_subject == 0) throw ConfigError("synth: need at least one trial per subject");
  if (n_channels == 0 || n_samples == 0 || !(sample_rate > 0.0)) throw ConfigError("synth: invalid epoch geometry");
  if (speller) {
    if (layout.rows == 0 || layout.cols == 0) throw ConfigError("synth: speller layout needs rows and columns");
    if (trials_per_subject % layout.flashes() != 0) {
      throw ConfigError("synth: trials per subject (" + std::to_string(trials_per_subject) +
                        ") must be a multiple of rows+cols (" + std::to_string(layout.flashes()) + ")");
    }
  } else if (!(target_ratio > 0.0 && target_ratio < 1.0)) {
    throw ConfigError("synth: target ratio must be in (0, 1)");
  }
  if (latency_min_ms > latency_max_ms || amplitude_min_uv > amplitude_max_uv || noise_scale_min > noise_scale_max) {
    throw ConfigError("synth: min exceeds max in a parameter range");
  }
  if (amplitude_scale < 0.0 || noise_std_uv < 0.0 || bump_sigma_ms <= 0.0 || spatial_jitter < 0.0) {
    throw ConfigError("synth: negative amplitude, noise, jitter or non-positive bump width");
  }
  if (!(ar_coeff > -1.0 && ar_coeff < 1.0)) throw ConfigError("synth: AR(1) coefficient must be in (-1, 1)");
  if (!(shared_noise_fraction >= 0.0 && shared_noise_fraction <= 1.0)) {
    throw ConfigError("synth: shared noise fraction must be in [0, 1]");
  }
}

std::vector<double> base_topography(std::uint32_t n_channels) {
  if (n_channels == 8) return {0.35, 0.6, 1.0, 0.7, 0.7, 0.95, 0.95, 0.6};  // Fz Cz Pz P3 P4 PO7 PO8 Oz
  return std::vector<double>(n_channels, 1.0);
}

std::vector<SubjectProfile> synth_profiles(const SynthParams& params, std::uint64_t seed) {
  params.validate();
  const auto base = base_topography(params.n_channels);
  std::vector<SubjectProfile> out;
  for (std::uint32_t s = 0; s < params.n_subjects; ++s) {
    Rng rng(derive_seed(derive_seed(seed, kProfileStream), s));
    SubjectProfile prof;
    prof.subject_id = s + 1;
    prof.latency_ms = rng.uniform(params.latency_min_ms, params.latency_max_ms);
    prof.amplitude_uv = params.amplitude_scale * rng.uniform(params.amplitude_min_uv, params.amplitude_max_uv);
    prof.noise_scale = rng.uniform(params.noise_scale_min, params.noise_scale_max);
    prof.spatial.resize(params.n_channels);
    for (std::uint32_t c = 0; c < params.n_channels; ++c) {
      prof.spatial[c] = base[c] * (1.0 + params.spatial_jitter * rng.normal());
    }
    out.push_back(std::move(prof));
  }
  return out;
}

Dataset synth_generate(const SynthParams& params, std::uint64_t seed) {
  const auto profiles = synth_profiles(params, seed);
  Dataset ds;
  ds.n_channels = params.n_channels;
  ds.n_samples = params.n_samples;
  ds.sample_rate = static_cast<float>(params.sample_rate);
  if (params.n_channels != 8) {
    ds.channel_names.clear();
    for (std::uint32_t c = 0; c < params.n_channels; ++c) ds.channel_names.push_back("Ch" + std::to_string(c + 1));
  }
  const std::size_t values = static_cast<std::size_t>(params.n_channels) * params.n_samples;
  ds.trials.reserve(static_cast<std::size_t>(params.n_subjects) * params.trials_per_subject);

  for (const auto& prof : profiles) {
    Rng rng(derive_seed(derive_seed(seed, kTrialStream), prof.subject_id));
    std::vector<std::pair<std::uint8_t, std::uint32_t>> plan;  // (label, code)
    if (params.speller) {
      const auto& lay = params.layout;
      const std::uint32_t selections = params.trials_per_subject / lay.flashes();
      for (std::uint32_t sel = 0; sel < selections; ++sel) {
        const std::uint32_t row = static_cast<std::uint32_t>(rng.below(lay.rows));
        const std::uint32_t col = static_cast<std::uint32_t>(rng.below(lay.cols));
        std::vector<std::uint32_t> codes(lay.flashes());
        for (std::uint32_t i = 0; i < codes.size(); ++i) codes[i] = i + 1;
        rng.shuffle(codes);
        for (std::uint32_t code : codes) {
          const bool target = code == row + 1 || code == lay.rows + col + 1;
          plan.emplace_back(static_cast<std::uint8_t>(target), code);
        }
      }
    } else {
      const auto n_targets = static_cast<std::uint32_t>(std::lround(params.target_ratio * params.trials_per_subject));
      for (std::uint32_t i = 0; i < params.trials_per_subject; ++i) plan.emplace_back(i < n_targets ? 1 : 0, 0);
      rng.shuffle(plan);
    }

    for (const auto& [label, code] : plan) {
      Trial t;
      t.subject_id = prof.subject_id;
      t.label = label;
      t.stimulus_code = code;
      t.data.assign(values, 0.0f);
      add_noise(rng, params, prof.noise_scale, t.data);
      if (label) add_erp(params, prof, t.data);
      ds.trials.push_back(std::move(t));
    }
  }
  return ds;
}

}  // namespace erpcl
