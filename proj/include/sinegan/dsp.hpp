#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "sinegan/common.hpp"
#include "sinegan/signal.hpp"
#include "sinegan/tensor.hpp"
#include "sinegan/window.hpp"

namespace sinegan {

using MatrixRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct StftConfig {
  int frame_len = 512;
  int hop_len = 128;
  WindowKind window = WindowKind::blackman_harris_4term;
  int num_bins = 256;

  void validate() const {
    if (frame_len <= 0 || hop_len <= 0 || num_bins <= 0)
      throw ConfigError("stft config fields must be positive");
    if (hop_len > frame_len) throw ConfigError("hop must not exceed frame");
    if (num_bins > frame_len / 2 + 1)
      throw ConfigError("num_bins must be <= frame_len/2 + 1");
  }

  int num_frames(int len) const { return (len - frame_len) / hop_len + 1; }

  // 32 ms frames, 8 ms hop at 16 kHz; 256 bins drop the Nyquist bin.
  static StftConfig analysis() { return {512, 128, WindowKind::blackman_harris_4term, 256}; }
  // 16 ms frames with 75% overlap, used in front of the classifier.
  static StftConfig classifier() { return {256, 64, WindowKind::hamming, 129}; }
};

struct Spectrogram {
  // [num_bins x num_frames], frequency-major, bin 0 = DC, linear magnitude.
  std::vector<double> magnitudes;
  int num_bins = 0;
  int num_frames = 0;
  StftConfig config;
  int sample_rate_hz = 16000;

  double at(int bin, int frame) const {
    return magnitudes[static_cast<size_t>(bin) * num_frames + frame];
  }
  double bin_hz(int bin) const {
    return static_cast<double>(bin) * sample_rate_hz / config.frame_len;
  }
};

namespace dspdet {

// Cosine/sine bases for the windowed DFT, cached per (frame_len, num_bins).
struct DftPlan {
  MatrixRM cos_basis;  // [frame_len x num_bins]
  MatrixRM sin_basis;  // [frame_len x num_bins]
};

inline std::shared_ptr<const DftPlan> dft_plan(int frame_len, int num_bins) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const DftPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(frame_len, num_bins);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<DftPlan>();
  plan->cos_basis.resize(frame_len, num_bins);
  plan->sin_basis.resize(frame_len, num_bins);
  for (int n = 0; n < frame_len; ++n)
    for (int k = 0; k < num_bins; ++k) {
      const double t = 2.0 * M_PI * static_cast<double>(n) * k / frame_len;
      plan->cos_basis(n, k) = std::cos(t);
      plan->sin_basis(n, k) = std::sin(t);
    }
  cache[key] = plan;
  return plan;
}

// Windowed frame matrix [num_frames x frame_len].
inline MatrixRM frame_signal(const std::vector<double>& x, const StftConfig& cfg,
                             const std::vector<double>& win) {
  const int frames = cfg.num_frames(static_cast<int>(x.size()));
  MatrixRM f(frames, cfg.frame_len);
  for (int t = 0; t < frames; ++t) {
    const int off = t * cfg.hop_len;
    for (int n = 0; n < cfg.frame_len; ++n) f(t, n) = x[off + n] * win[n];
  }
  return f;
}

}  // namespace dspdet

inline Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  if (w.length() < cfg.frame_len)
    throw ShapeError("waveform shorter than one analysis frame");

  const auto win = make_window(cfg.window, cfg.frame_len);
  const auto plan = dspdet::dft_plan(cfg.frame_len, cfg.num_bins);
  const MatrixRM frames = dspdet::frame_signal(w.samples, cfg, win);
  const MatrixRM re = frames * plan->cos_basis;   // [frames x bins]
  const MatrixRM im = -(frames * plan->sin_basis);

  Spectrogram s;
  s.config = cfg;
  s.sample_rate_hz = w.sample_rate_hz;
  s.num_bins = cfg.num_bins;
  s.num_frames = static_cast<int>(frames.rows());
  s.magnitudes.resize(static_cast<size_t>(s.num_bins) * s.num_frames);
  for (int k = 0; k < s.num_bins; ++k)
    for (int t = 0; t < s.num_frames; ++t)
      s.magnitudes[static_cast<size_t>(k) * s.num_frames + t] =
          std::sqrt(re(t, k) * re(t, k) + im(t, k) * im(t, k));
  return s;
}

// Bilinear resize of the magnitude grid to an exact output shape.
inline Tensor resize_bilinear(const Spectrogram& s, int out_h, int out_w) {
  SINEGAN_CHECK(out_h >= 1 && out_w >= 1, "output shape must be positive");
  const int in_h = s.num_bins, in_w = s.num_frames;
  Tensor out({out_h, out_w});
  const double sy = out_h > 1 ? static_cast<double>(in_h - 1) / (out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(in_w - 1) / (out_w - 1) : 0.0;
  for (int i = 0; i < out_h; ++i) {
    const double fy = i * sy;
    const int y0 = std::min(static_cast<int>(fy), in_h - 1);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - y0;
    for (int j = 0; j < out_w; ++j) {
      const double fx = j * sx;
      const int x0 = std::min(static_cast<int>(fx), in_w - 1);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - x0;
      const double v00 = s.at(y0, x0), v01 = s.at(y0, x1);
      const double v10 = s.at(y1, x0), v11 = s.at(y1, x1);
      out.values[static_cast<size_t>(i) * out_w + j] =
          (1 - wy) * ((1 - wx) * v00 + wx * v01) +
          wy * ((1 - wx) * v10 + wx * v11);
    }
  }
  return out;
}

// Mean power per frequency bin over all frames.
inline std::vector<double> time_averaged_power(const Spectrogram& s) {
  std::vector<double> p(static_cast<size_t>(s.num_bins), 0.0);
  for (int k = 0; k < s.num_bins; ++k) {
    double acc = 0.0;
    for (int t = 0; t < s.num_frames; ++t) acc += s.at(k, t) * s.at(k, t);
    p[k] = acc / s.num_frames;
  }
  return p;
}

inline double median_power(const Spectrogram& s) {
  auto p = time_averaged_power(s);
  std::sort(p.begin(), p.end());
  const size_t n = p.size();
  return n % 2 ? p[n / 2] : 0.5 * (p[n / 2 - 1] + p[n / 2]);
}

struct SpectralPeak {
  double freq_hz = 0.0;
  double power = 0.0;
};

// Local maxima of the time-averaged power spectrum, strongest first. Returns
// fewer than k peaks when fewer local maxima exist.
inline std::vector<SpectralPeak> dominant_peaks(const Spectrogram& s, int k) {
  SINEGAN_CHECK(k >= 1, "k must be >= 1");
  const auto p = time_averaged_power(s);
  std::vector<SpectralPeak> peaks;
  const int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i) {
    const bool left_ok = (i == 0) || p[i] > p[i - 1];
    const bool right_ok = (i == n - 1) || p[i] >= p[i + 1];
    if (left_ok && right_ok && p[i] > 0.0)
      peaks.push_back({s.bin_hz(i), p[i]});
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const SpectralPeak& a, const SpectralPeak& b) {
                     return a.power > b.power;
                   });
  if (static_cast<int>(peaks.size()) > k) peaks.resize(static_cast<size_t>(k));
  return peaks;
}

// CSV export: header "bin_hz,f0,f1,..." then one row per frequency bin.
inline void spectrogram_to_csv(const Spectrogram& s, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open for write: " + path);
  f << "bin_hz";
  for (int t = 0; t < s.num_frames; ++t) f << ",f" << t;
  f << "\n";
  f.precision(17);
  for (int k = 0; k < s.num_bins; ++k) {
    f << s.bin_hz(k);
    for (int t = 0; t < s.num_frames; ++t) f << "," << s.at(k, t);
    f << "\n";
  }
  if (!f) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Batched, differentiable STFT magnitude used inside adversarial training.
// Forward keeps the complex parts so the backward pass can push spectrogram
// gradients down to the waveform samples.

class StftOp {
 public:
  explicit StftOp(const StftConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    win_ = make_window(cfg_.window, cfg_.frame_len);
    plan_ = dspdet::dft_plan(cfg_.frame_len, cfg_.num_bins);
  }

  const StftConfig& config() const { return cfg_; }

  // x: [batch, len] -> magnitudes [batch, num_bins, num_frames]
  Tensor forward(const Tensor& x) {
    SINEGAN_CHECK(x.rank() == 2, "StftOp expects [batch, len]");
    batch_ = x.dim(0);
    len_ = static_cast<int>(x.dim(1));
    if (len_ < cfg_.frame_len) throw ShapeError("waveform shorter than one frame");
    frames_per_item_ = cfg_.num_frames(len_);
    const int rows = static_cast<int>(batch_) * frames_per_item_;

    MatrixRM framed(rows, cfg_.frame_len);
    for (int64_t b = 0; b < batch_; ++b) {
      const double* xp = x.values.data() + b * len_;
      for (int t = 0; t < frames_per_item_; ++t) {
        const int off = t * cfg_.hop_len;
        double* row = framed.row(b * frames_per_item_ + t).data();
        for (int n = 0; n < cfg_.frame_len; ++n) row[n] = xp[off + n] * win_[n];
      }
    }
    re_ = framed * plan_->cos_basis;
    im_ = -(framed * plan_->sin_basis);

    Tensor out({batch_, cfg_.num_bins, frames_per_item_});
    mag_ = MatrixRM(rows, cfg_.num_bins);
    for (int r = 0; r < rows; ++r)
      for (int k = 0; k < cfg_.num_bins; ++k) {
        const double m = std::sqrt(re_(r, k) * re_(r, k) + im_(r, k) * im_(r, k));
        mag_(r, k) = m;
        const int64_t b = r / frames_per_item_;
        const int t = r % frames_per_item_;
        out.values[(b * cfg_.num_bins + k) * frames_per_item_ + t] = m;
      }
    has_state_ = true;
    return out;
  }

  // d_mag: [batch, num_bins, num_frames] -> d_x [batch, len]
  Tensor backward(const Tensor& d_mag) const {
    if (!has_state_) throw StateError("StftOp backward without forward");
    SINEGAN_CHECK(d_mag.rank() == 3 && d_mag.dim(0) == batch_ &&
                      d_mag.dim(1) == cfg_.num_bins &&
                      d_mag.dim(2) == frames_per_item_,
                  "gradient shape mismatch in StftOp");
    const int rows = static_cast<int>(batch_) * frames_per_item_;
    MatrixRM g_re(rows, cfg_.num_bins), g_im(rows, cfg_.num_bins);
    for (int r = 0; r < rows; ++r) {
      const int64_t b = r / frames_per_item_;
      const int t = r % frames_per_item_;
      for (int k = 0; k < cfg_.num_bins; ++k) {
        const double m = std::max(mag_(r, k), 1e-30);
        const double g =
            d_mag.values[(b * cfg_.num_bins + k) * frames_per_item_ + t];
        g_re(r, k) = g * re_(r, k) / m;
        g_im(r, k) = g * im_(r, k) / m;
      }
    }
    // d_framed[n] = win[n] * (cos·g_re - sin·g_im)
    MatrixRM d_framed = g_re * plan_->cos_basis.transpose();
    d_framed.noalias() -= g_im * plan_->sin_basis.transpose();

    Tensor dx({batch_, len_});
    for (int64_t b = 0; b < batch_; ++b) {
      double* xp = dx.values.data() + b * len_;
      for (int t = 0; t < frames_per_item_; ++t) {
        const int off = t * cfg_.hop_len;
        const double* row = d_framed.row(b * frames_per_item_ + t).data();
        for (int n = 0; n < cfg_.frame_len; ++n) xp[off + n] += row[n] * win_[n];
      }
    }
    return dx;
  }

 private:
  StftConfig cfg_;
  std::vector<double> win_;
  std::shared_ptr<const dspdet::DftPlan> plan_;
  MatrixRM re_, im_, mag_;
  int64_t batch_ = 0;
  int len_ = 0;
  int frames_per_item_ = 0;
  bool has_state_ = false;
};

}  // namespace sinegan
