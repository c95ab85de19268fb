#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sinegan/common.hpp"
#include "sinegan/rng.hpp"
#include "sinegan/window.hpp"

namespace sinegan {

// Parameters of the analytic multi-tone target model.
struct SignalSpec {
  std::vector<double> frequencies_hz;
  int sample_rate_hz = 16000;
  double snr_db = 99.0;
  double freq_jitter_std = 0.0;   // relative frequency deviation
  double phase_jitter_std = 0.0;  // radians
  int length_samples = 8000;

  int num_components() const { return static_cast<int>(frequencies_hz.size()); }

  void validate() const {
    if (frequencies_hz.empty()) throw ConfigError("signal needs at least one component");
    if (sample_rate_hz <= 0) throw ConfigError("sample rate must be positive");
    if (length_samples <= 0) throw ConfigError("signal length must be positive");
    if (freq_jitter_std < 0 || phase_jitter_std < 0)
      throw ConfigError("jitter std must be nonnegative");
    for (double f : frequencies_hz) {
      if (!(f > 0.0 && f < sample_rate_hz / 2.0))
        throw ConfigError("component frequency must lie strictly between 0 and Nyquist");
    }
  }
};

// Fixed geometry of the synthesis task: half a second at 16 kHz.
constexpr int kOutputSamples = 8000;
constexpr int kGenSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  int length() const { return static_cast<int>(samples.size()); }
};

struct LabeledDataset {
  std::vector<std::pair<Waveform, int>> items;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Equal-amplitude tone mix plus white noise. Amplitude is fixed at 1/C per
// component and the noise sigma is derived from the requested SNR, so the
// waveform stays inside the generator's output range; peak normalization
// kicks in only if the mix exceeds 1.
inline Waveform synthesize(const SignalSpec& spec, Rng& rng) {
  spec.validate();
  const int c = spec.num_components();
  const int len = spec.length_samples;
  const double amp = 1.0 / c;

  std::vector<double> df(c), dp(c);
  for (int i = 0; i < c; ++i) {
    df[i] = rng.normal(0.0, spec.freq_jitter_std);
    dp[i] = rng.normal(0.0, spec.phase_jitter_std);
  }

  // Signal power of the tone mix is C*(amp^2)/2; sigma follows from the SNR.
  const double sigma = std::sqrt(1.0 / (2.0 * c)) * std::pow(10.0, -spec.snr_db / 20.0);

  Waveform w;
  w.sample_rate_hz = spec.sample_rate_hz;
  w.samples.resize(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i) {
    const double n = static_cast<double>(i + 1);  // model indexes samples from 1
    double s = 0.0;
    for (int k = 0; k < c; ++k) {
      const double f = spec.frequencies_hz[k] * (1.0 + df[k]);
      s += amp * std::cos(2.0 * M_PI * f * n / spec.sample_rate_hz + dp[k]);
    }
    w.samples[i] = s + rng.normal(0.0, sigma);
  }

  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::abs(v));
  if (peak > 1.0)
    for (double& v : w.samples) v /= peak;
  return w;
}

inline Waveform apply_window(const Waveform& w, WindowKind kind) {
  const auto win = make_window(kind, w.length());
  Waveform out = w;
  for (int i = 0; i < w.length(); ++i) out.samples[i] *= win[i];
  return out;
}

// Short inputs are filled with low-level noise instead of zeros; long inputs
// are truncated.
inline Waveform pad_or_trim(const Waveform& w, int target_len, Rng& rng) {
  SINEGAN_CHECK(target_len > 0, "target length must be positive");
  Waveform out = w;
  const int n = w.length();
  if (n > target_len) {
    out.samples.resize(static_cast<size_t>(target_len));
  } else if (n < target_len) {
    out.samples.resize(static_cast<size_t>(target_len));
    for (int i = n; i < target_len; ++i) out.samples[i] = rng.normal(0.0, 0.01);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pseudo-species: fixed families of 2-3 component tone mixes that stand in
// for recorded animal calls in the classification experiments.

struct SpeciesRecipe {
  std::string name;
  std::vector<double> frequencies_hz;
};

// Recipe table v1. Frozen: experiment analogs depend on these exact values.
inline const std::vector<SpeciesRecipe>& pseudo_species_table() {
  static const std::vector<SpeciesRecipe> table = {
      {"species_a", {800.0, 2200.0}},
      {"species_b", {1200.0, 3000.0, 4600.0}},
      {"species_c", {1700.0, 3600.0}},
      {"species_d", {2600.0, 5200.0, 6400.0}},
      {"species_e", {1000.0, 4000.0, 7000.0}},
      {"species_f", {1400.0, 2800.0, 5600.0}},
      {"species_g", {2000.0, 4300.0}},
      {"species_h", {600.0, 3300.0, 6100.0}},
  };
  return table;
}

constexpr double kSpeciesFreqJitterStd = 0.01;
constexpr double kSpeciesPhaseJitterStd = 0.3;

// Frequency sets of different classes must not collide within one analysis
// bin (sample_rate / frame_len at the 512-sample analysis frame), otherwise
// the classes are not spectrally separable.
inline void check_class_separation(const std::vector<SpeciesRecipe>& recipes,
                                   double bin_hz) {
  for (size_t a = 0; a < recipes.size(); ++a)
    for (size_t b = a + 1; b < recipes.size(); ++b)
      for (double fa : recipes[a].frequencies_hz)
        for (double fb : recipes[b].frequencies_hz)
          if (std::abs(fa - fb) < bin_hz)
            throw ConfigError("class frequency sets overlap within one bin: " +
                              recipes[a].name + " vs " + recipes[b].name);
}

inline LabeledDataset build_dataset_from_recipes(
    const std::vector<SpeciesRecipe>& recipes, int per_class, double snr_db,
    uint64_t seed, int sample_rate_hz = 16000, int length_samples = 8000) {
  SINEGAN_CHECK(recipes.size() >= 2, "need at least two classes");
  SINEGAN_CHECK(per_class >= 1, "need at least one item per class");
  check_class_separation(recipes, sample_rate_hz / 512.0);

  LabeledDataset ds;
  for (const auto& r : recipes) ds.class_names.push_back(r.name);
  for (size_t k = 0; k < recipes.size(); ++k) {
    SignalSpec spec;
    spec.frequencies_hz = recipes[k].frequencies_hz;
    spec.sample_rate_hz = sample_rate_hz;
    spec.length_samples = length_samples;
    spec.snr_db = snr_db;
    spec.freq_jitter_std = kSpeciesFreqJitterStd;
    spec.phase_jitter_std = kSpeciesPhaseJitterStd;
    for (int i = 0; i < per_class; ++i) {
      // One independent stream per item so generation order never matters.
      Rng item_rng = Rng::derive(seed, k * 1000003ull + static_cast<uint64_t>(i));
      ds.items.emplace_back(synthesize(spec, item_rng), static_cast<int>(k));
    }
  }
  return ds;
}

inline LabeledDataset build_pseudo_species(int num_classes, int per_class,
                                           double snr_db, uint64_t seed) {
  const auto& table = pseudo_species_table();
  SINEGAN_CHECK(num_classes >= 2, "need at least two classes");
  if (num_classes > static_cast<int>(table.size()))
    throw ConfigError("pseudo-species table has only " +
                      std::to_string(table.size()) + " classes");
  std::vector<SpeciesRecipe> recipes(table.begin(), table.begin() + num_classes);
  return build_dataset_from_recipes(recipes, per_class, snr_db, seed);
}

}  // namespace sinegan
