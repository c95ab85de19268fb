#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sinegan/checkpoint.hpp"
#include "sinegan/nn.hpp"
#include "sinegan/optim.hpp"
#include "sinegan/rng.hpp"
#include "sinegan/signal.hpp"

namespace sinegan {

constexpr int kLatentDim = 128;
constexpr int kGenHidden = 512;

struct LatentVector {
  std::vector<double> values;

  LatentVector() : values(kLatentDim, 0.0) {}
  explicit LatentVector(std::vector<double> v) : values(std::move(v)) {
    SINEGAN_CHECK(static_cast<int>(values.size()) == kLatentDim,
                  "latent dimension is fixed at ", kLatentDim);
  }
};

// Latent vector -> three fully-connected layers modeling frequency content
// (cosine activation on the last of them) -> tied linear layer mapping the
// 512 cosine nodes onto 8000 samples -> tanh. Rows i and i+256 of the output
// weight are constrained equal: the two halves of the cosine layer act as
// mirrored halves of a real signal's spectrum, which share real weights.
struct GeneratorParams {
  Network net;

  FullyConnected& tied_layer() {
    return static_cast<FullyConnected&>(net.layer(8));
  }
  Tensor& tied_weight() { return tied_layer().weight(); }
  Tensor& output_bias() { return tied_layer().bias(); }
};

inline Network make_generator_net() {
  Network net;
  net.add<FullyConnected>(kLatentDim, kGenHidden);
  net.add<BatchNorm>(kGenHidden, /*trainable_scale=*/false);
  net.add<Activation>(ActKind::relu);
  net.add<FullyConnected>(kGenHidden, kGenHidden);
  net.add<BatchNorm>(kGenHidden, /*trainable_scale=*/false);
  net.add<Activation>(ActKind::relu);
  net.add<FullyConnected>(kGenHidden, kGenHidden);
  net.add<Activation>(ActKind::cosine);
  net.add<FullyConnected>(kGenHidden, kOutputSamples, /*tie_half=*/true);
  net.add<Activation>(ActKind::tanh);
  return net;
}

// Projects the realization weight onto the tied subspace by averaging each
// mirrored row pair. Both rows receive the same stored value, so equality is
// exact, and the projection is idempotent.
inline void enforce_tying(GeneratorParams& g) {
  Tensor& w = g.tied_weight();
  const int64_t rows = w.shape[0], cols = w.shape[1];
  const int64_t half = rows / 2;
  for (int64_t i = 0; i < half; ++i) {
    double* a = w.values.data() + i * cols;
    double* b = w.values.data() + (i + half) * cols;
    for (int64_t j = 0; j < cols; ++j) {
      const double m = 0.5 * (a[j] + b[j]);
      a[j] = m;
      b[j] = m;
    }
  }
}

inline double tying_max_gap(GeneratorParams& g) {
  Tensor& w = g.tied_weight();
  const int64_t rows = w.shape[0], cols = w.shape[1];
  const int64_t half = rows / 2;
  double worst = 0.0;
  for (int64_t i = 0; i < half; ++i)
    for (int64_t j = 0; j < cols; ++j)
      worst = std::max(worst, std::abs(w.values[i * cols + j] -
                                       w.values[(i + half) * cols + j]));
  return worst;
}

inline GeneratorParams init_generator(Rng& rng) {
  GeneratorParams g;
  g.net = make_generator_net();
  g.net.init_normal(rng, kParamInitStd);
  // Draw 256 free rows and mirror them.
  Tensor& w = g.tied_weight();
  const int64_t cols = w.shape[1], half = w.shape[0] / 2;
  for (int64_t i = 0; i < half; ++i)
    for (int64_t j = 0; j < cols; ++j)
      w.values[(i + half) * cols + j] = w.values[i * cols + j];
  return g;
}

inline Waveform generate(GeneratorParams& g, const LatentVector& z) {
  SINEGAN_CHECK(static_cast<int>(z.values.size()) == kLatentDim,
                "latent dimension mismatch");
  const Mode saved = g.net.mode();
  g.net.set_mode(Mode::eval);
  Tensor in({1, kLatentDim}, z.values);
  Tensor out = g.net.forward(in);
  g.net.set_mode(saved);
  Waveform w;
  w.sample_rate_hz = kGenSampleRate;
  w.samples = std::move(out.values);
  return w;
}

// Reference reconstruction of one frame from half-spectrum cosine weights:
//   s[n] = (1/K) * (w_dc + w_nyquist + 2 * sum_k fw[k-1] * cos(2*pi*n*k/K))
// for k = 1..K/2-1 and 0 <= n < K. This is the brute-force math that the
// tied output layer is expected to reproduce.
inline std::vector<double> half_spectrum_waveform(
    const std::vector<double>& freq_weights, double dc_weight,
    double nyquist_weight, int frame_len) {
  SINEGAN_CHECK(frame_len >= 4 && frame_len % 2 == 0,
                "frame length must be even and >= 4");
  SINEGAN_CHECK(static_cast<int>(freq_weights.size()) == frame_len / 2 - 1,
                "need K/2-1 frequency weights");
  std::vector<double> s(static_cast<size_t>(frame_len), 0.0);
  for (int n = 0; n < frame_len; ++n) {
    double acc = dc_weight + nyquist_weight;
    for (int k = 1; k <= frame_len / 2 - 1; ++k)
      acc += 2.0 * freq_weights[static_cast<size_t>(k - 1)] *
             std::cos(2.0 * M_PI * n * k / frame_len);
    s[static_cast<size_t>(n)] = acc / frame_len;
  }
  return s;
}

inline void register_tying_hook(Optimizer& opt, GeneratorParams& g) {
  opt.add_hook([&g] { enforce_tying(g); });
}

inline void save_generator(GeneratorParams& g, const std::string& path) {
  save_checkpoint(g.net, path);
}

// Tying is an invariant of the format: a checkpoint whose mirrored rows
// disagree beyond 32-bit rounding is rejected; smaller drift is re-projected.
inline GeneratorParams load_generator(const std::string& path) {
  GeneratorParams g;
  g.net = load_checkpoint(path);
  SINEGAN_CHECK(g.net.num_layers() == 10, "not a generator checkpoint");
  const double gap = tying_max_gap(g);
  if (gap > 1e-5)
    throw FormatError("generator checkpoint violates weight tying (gap " +
                      std::to_string(gap) + ")");
  enforce_tying(g);
  return g;
}

}  // namespace sinegan
