#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "sinegan/dsp.hpp"
#include "sinegan/signal.hpp"
#include "test_util.hpp"

using namespace sinegan;

namespace {

Waveform tone(double freq, int len = 8000, double amp = 1.0) {
  Waveform w;
  w.samples.resize(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i)
    w.samples[static_cast<size_t>(i)] =
        amp * std::cos(2.0 * M_PI * freq * i / 16000.0);
  return w;
}

}  // namespace

TEST(Stft, MatchesNaiveDftOracle) {
  Rng rng(17);
  Waveform w;
  w.samples.resize(2048);
  for (auto& v : w.samples) v = rng.normal(0.0, 0.3);

  StftConfig cfg = StftConfig::analysis();
  Spectrogram s = stft(w, cfg);
  const auto win = make_window(cfg.window, cfg.frame_len);

  double max_rel = 0.0, max_abs_ref = 0.0;
  for (int t = 0; t < s.num_frames; ++t) {
    std::vector<double> frame(static_cast<size_t>(cfg.frame_len));
    for (int n = 0; n < cfg.frame_len; ++n)
      frame[static_cast<size_t>(n)] =
          w.samples[static_cast<size_t>(t * cfg.hop_len + n)] *
          win[static_cast<size_t>(n)];
    const auto ref = testutil::naive_dft_magnitudes(frame, cfg.num_bins);
    for (int k = 0; k < cfg.num_bins; ++k) {
      max_abs_ref = std::max(max_abs_ref, ref[static_cast<size_t>(k)]);
      max_rel = std::max(max_rel, std::abs(s.at(k, t) - ref[static_cast<size_t>(k)]));
    }
  }
  EXPECT_LE(max_rel / max_abs_ref, 1e-9);
}

TEST(Stft, FrameCountAndGeometry) {
  Waveform w = tone(1000.0);
  Spectrogram s = stft(w, StftConfig::analysis());
  EXPECT_EQ(s.num_frames, 59);  // floor((8000-512)/128)+1
  EXPECT_EQ(s.num_bins, 256);

  Spectrogram c = stft(w, StftConfig::classifier());
  EXPECT_EQ(c.num_frames, 122);  // floor((8000-256)/64)+1
  EXPECT_EQ(c.num_bins, 129);
}

TEST(Stft, PureToneDominantBin) {
  Spectrogram s = stft(tone(1000.0), StftConfig::analysis());
  // bin spacing 31.25 Hz -> 1 kHz lands on bin 32
  for (int t = 0; t < s.num_frames; ++t) {
    int best = 0;
    for (int k = 1; k < s.num_bins; ++k)
      if (s.at(k, t) > s.at(best, t)) best = k;
    EXPECT_EQ(best, 32);
  }
}

TEST(Stft, ZeroInputGivesZeroOutput) {
  Waveform w;
  w.samples.assign(8000, 0.0);
  Spectrogram s = stft(w, StftConfig::analysis());
  for (double m : s.magnitudes) EXPECT_EQ(m, 0.0);
}

TEST(Stft, RejectsShortInput) {
  Waveform w;
  w.samples.assign(100, 0.0);
  EXPECT_THROW(stft(w, StftConfig::analysis()), ShapeError);
}

TEST(Stft, ParsevalPerFrameWithRectangularWindow) {
  // time-domain power equals (1/N) * two-sided spectral power; the two-sided
  // spectrum folds out of the one-sided bins
  Rng rng(23);
  Waveform w;
  w.samples.resize(1024);
  for (auto& v : w.samples) v = rng.normal(0.0, 0.5);

  StftConfig cfg{512, 512, WindowKind::rectangular, 257};
  Spectrogram s = stft(w, cfg);
  for (int t = 0; t < s.num_frames; ++t) {
    double time_power = 0.0;
    for (int n = 0; n < 512; ++n) {
      const double v = w.samples[static_cast<size_t>(t * 512 + n)];
      time_power += v * v;
    }
    double spec_power = s.at(0, t) * s.at(0, t) + s.at(256, t) * s.at(256, t);
    for (int k = 1; k < 256; ++k) spec_power += 2.0 * s.at(k, t) * s.at(k, t);
    EXPECT_NEAR(spec_power / 512.0, time_power, 1e-6 * time_power);
  }
}

TEST(Stft, MagnitudeIsLinearInAmplitude) {
  Waveform a = tone(700.0, 4096, 0.3);
  Waveform b = tone(700.0, 4096, 0.9);
  Spectrogram sa = stft(a, StftConfig::analysis());
  Spectrogram sb = stft(b, StftConfig::analysis());
  for (size_t i = 0; i < sa.magnitudes.size(); ++i) {
    EXPECT_NEAR(sb.magnitudes[i], 3.0 * sa.magnitudes[i],
                1e-12 + 1e-10 * sa.magnitudes[i]);
  }
}

TEST(StftOp, BackwardMatchesFiniteDifferences) {
  // scalar probe: sum of all magnitudes
  Rng rng(31);
  Tensor x({2, 700});
  rng.fill_normal(x.values, 0.0, 0.5);
  StftConfig cfg{256, 128, WindowKind::hamming, 129};
  StftOp op(cfg);

  Tensor mag = op.forward(x);
  Tensor ones(mag.shape);
  std::fill(ones.values.begin(), ones.values.end(), 1.0);
  Tensor dx = op.backward(ones);

  auto loss = [&](const Tensor& t) {
    StftOp probe(cfg);
    Tensor m = probe.forward(t);
    double acc = 0.0;
    for (double v : m.values) acc += v;
    return acc;
  };
  const double eps = 1e-6;
  Rng pick(5);
  for (int trial = 0; trial < 40; ++trial) {
    const size_t i = static_cast<size_t>(pick.uniform_int(x.values.size()));
    Tensor xp = x, xm = x;
    xp.values[i] += eps;
    xm.values[i] -= eps;
    const double numeric = (loss(xp) - loss(xm)) / (2 * eps);
    EXPECT_NEAR(dx.values[i], numeric, 1e-5 * std::max(1.0, std::abs(numeric)));
  }
}

TEST(Resize, IdentityAndConstant) {
  Spectrogram s = stft(tone(1000.0), StftConfig::classifier());
  Tensor same = resize_bilinear(s, s.num_bins, s.num_frames);
  for (int k = 0; k < s.num_bins; ++k)
    for (int t = 0; t < s.num_frames; ++t)
      EXPECT_NEAR(same.values[static_cast<size_t>(k) * s.num_frames + t],
                  s.at(k, t), 1e-12);

  Spectrogram flat = s;
  std::fill(flat.magnitudes.begin(), flat.magnitudes.end(), 2.5);
  Tensor out = resize_bilinear(flat, 128, 128);
  ASSERT_EQ(out.shape, (std::vector<int64_t>{128, 128}));
  for (double v : out.values) EXPECT_NEAR(v, 2.5, 1e-12);
}

TEST(Resize, ClassifierShape) {
  Spectrogram s = stft(tone(2000.0), StftConfig::classifier());
  ASSERT_EQ(s.num_bins, 129);
  ASSERT_EQ(s.num_frames, 122);
  Tensor out = resize_bilinear(s, 128, 128);
  EXPECT_EQ(out.shape, (std::vector<int64_t>{128, 128}));
}

TEST(Peaks, DualToneTopTwo) {
  SignalSpec spec;
  spec.frequencies_hz = {1000.0, 1500.0};
  spec.snr_db = 99.0;
  Rng rng(3);
  Waveform w = synthesize(spec, rng);
  auto peaks = dominant_peaks(stft(w, StftConfig::analysis()), 2);
  ASSERT_EQ(peaks.size(), 2u);
  std::vector<double> freqs = {peaks[0].freq_hz, peaks[1].freq_hz};
  std::sort(freqs.begin(), freqs.end());
  EXPECT_NEAR(freqs[0], 1000.0, 31.25);
  EXPECT_NEAR(freqs[1], 1500.0, 31.25);
}

TEST(Peaks, WhiteNoiseIsFlat) {
  Rng rng(59);
  Waveform w;
  w.samples.resize(8000);
  for (auto& v : w.samples) v = rng.normal(0.0, 0.1);
  Spectrogram s = stft(w, StftConfig::analysis());
  auto peaks = dominant_peaks(s, 1);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_LT(peaks[0].power, 3.0 * median_power(s));
}

TEST(Peaks, SingleToneSingleStrongPeak) {
  // a lone tone above a realistic noise floor: exactly one peak clears the
  // 10x-median bar (for a noiseless tone the median collapses and window
  // sidelobes would clear it too)
  SignalSpec spec;
  spec.frequencies_hz = {2000.0};
  spec.snr_db = 30.0;
  Rng rng(17);
  Spectrogram s = stft(synthesize(spec, rng), StftConfig::analysis());
  const double med = median_power(s);
  auto peaks = dominant_peaks(s, 256);
  int strong = 0;
  for (const auto& p : peaks)
    if (p.power >= 10.0 * med) ++strong;
  EXPECT_EQ(strong, 1);
}

TEST(Peaks, ScaleInvariantOrdering) {
  Rng rng(61);
  SignalSpec spec;
  spec.frequencies_hz = {900.0, 2100.0, 3300.0};
  spec.snr_db = 30.0;
  Waveform w = synthesize(spec, rng);
  Spectrogram s = stft(w, StftConfig::analysis());
  Waveform scaled = w;
  for (auto& v : scaled.samples) v *= 0.125;
  Spectrogram s2 = stft(scaled, StftConfig::analysis());

  auto p1 = dominant_peaks(s, 3);
  auto p2 = dominant_peaks(s2, 3);
  ASSERT_EQ(p1.size(), p2.size());
  for (size_t i = 0; i < p1.size(); ++i) EXPECT_EQ(p1[i].freq_hz, p2[i].freq_hz);
}

TEST(Csv, SpectrogramExportShape) {
  Spectrogram s = stft(tone(1000.0), StftConfig::analysis());
  const std::string path = "spectrogram_test.csv";
  spectrogram_to_csv(s, path);
  std::ifstream f(path);
  std::string line;
  ASSERT_TRUE(std::getline(f, line));
  EXPECT_EQ(line.substr(0, 9), "bin_hz,f0");
  int rows = 0;
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 256);
  std::remove(path.c_str());
}
