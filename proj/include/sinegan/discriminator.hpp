#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sinegan/checkpoint.hpp"
#include "sinegan/dsp.hpp"
#include "sinegan/nn.hpp"
#include "sinegan/optim.hpp"
#include "sinegan/rng.hpp"
#include "sinegan/signal.hpp"

namespace sinegan {

enum class DiscInput : uint8_t { spectrogram_256x60 = 0, waveform_8000 = 1 };

struct DiscriminatorParams {
  Network net;
  DiscInput input_kind = DiscInput::spectrogram_256x60;
  std::optional<double> clip_bound;
};

// Spectrogram path in front of the CNN critic: STFT magnitude, log(1 + m)
// compression, then zero-padding of the time axis to an even frame count
// (59 -> 60 at the default geometry) so repeated 2x pooling stays integral.
class SpecFrontEnd {
 public:
  SpecFrontEnd() : op_(StftConfig::analysis()) {}

  // x: [batch, 8000] -> [batch, 1, 256, 60]
  Tensor forward(const Tensor& x) {
    mag_ = op_.forward(x);
    const int64_t b = mag_.dim(0), bins = mag_.dim(1), frames = mag_.dim(2);
    padded_frames_ = frames + (frames % 2);
    Tensor out({b, 1, bins, padded_frames_});
    for (int64_t i = 0; i < b; ++i)
      for (int64_t k = 0; k < bins; ++k) {
        const double* src = mag_.values.data() + (i * bins + k) * frames;
        double* dst = out.values.data() + (i * bins + k) * padded_frames_;
        for (int64_t t = 0; t < frames; ++t) dst[t] = std::log1p(src[t]);
      }
    return out;
  }

  Tensor backward(const Tensor& d_out) const {
    const int64_t b = mag_.dim(0), bins = mag_.dim(1), frames = mag_.dim(2);
    SINEGAN_CHECK(d_out.rank() == 4 && d_out.dim(0) == b && d_out.dim(1) == 1 &&
                      d_out.dim(2) == bins && d_out.dim(3) == padded_frames_,
                  "front-end gradient shape mismatch");
    Tensor d_mag({b, bins, frames});
    for (int64_t i = 0; i < b; ++i)
      for (int64_t k = 0; k < bins; ++k) {
        const double* src = d_out.values.data() + (i * bins + k) * padded_frames_;
        const double* m = mag_.values.data() + (i * bins + k) * frames;
        double* dst = d_mag.values.data() + (i * bins + k) * frames;
        for (int64_t t = 0; t < frames; ++t) dst[t] = src[t] / (1.0 + m[t]);
      }
    return op_.backward(d_mag);
  }

  const StftConfig& config() const { return op_.config(); }

 private:
  StftOp op_;
  Tensor mag_;
  int64_t padded_frames_ = 0;
};

// Four 3x3 conv blocks (BN, relu, 2x2 max-pool) with channels 8/16/32/64,
// then one fully-connected layer to a single raw score.
inline Network make_cnn_critic_net() {
  Network net;
  const int channels[5] = {1, 8, 16, 32, 64};
  for (int i = 0; i < 4; ++i) {
    net.add<Conv2d>(channels[i], channels[i + 1]);
    net.add<BatchNorm>(channels[i + 1], /*trainable_scale=*/false);
    net.add<Activation>(ActKind::relu);
    net.add<MaxPool>();
  }
  // 256x60 -> 128x30 -> 64x15 -> 32x8 -> 16x4 spatial, 64 channels.
  net.add<FullyConnected>(64 * 16 * 4, 1);
  return net;
}

inline Network make_mlp_critic_net() {
  Network net;
  net.add<FullyConnected>(kOutputSamples, 1024);
  net.add<Activation>(ActKind::relu);
  net.add<FullyConnected>(1024, 256);
  net.add<Activation>(ActKind::relu);
  net.add<FullyConnected>(256, 64);
  net.add<Activation>(ActKind::relu);
  net.add<FullyConnected>(64, 1);
  return net;
}

inline DiscriminatorParams make_discriminator(DiscInput kind, Rng& rng,
                                              std::optional<double> clip = {}) {
  DiscriminatorParams d;
  d.input_kind = kind;
  d.net = kind == DiscInput::spectrogram_256x60 ? make_cnn_critic_net()
                                                : make_mlp_critic_net();
  d.net.init_normal(rng, kParamInitStd);
  d.clip_bound = clip;
  return d;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Raw critic score for one waveform; sigmoid only on request (the classic
// objective reads probabilities, the others read raw scores).
inline double discriminate(DiscriminatorParams& d, const Waveform& w,
                           bool apply_sigmoid = false) {
  SINEGAN_CHECK(w.length() == kOutputSamples, "discriminator expects length ",
                kOutputSamples);
  const Mode saved = d.net.mode();
  d.net.set_mode(Mode::eval);
  Tensor x({1, kOutputSamples}, w.samples);
  Tensor in;
  if (d.input_kind == DiscInput::spectrogram_256x60) {
    SpecFrontEnd fe;
    in = fe.forward(x);
  } else {
    in = x;
  }
  const double score = d.net.forward(in).values[0];
  d.net.set_mode(saved);
  return apply_sigmoid ? sigmoid(score) : score;
}

inline void clip_weights(DiscriminatorParams& d) {
  if (!d.clip_bound) throw StateError("clip_weights requires a clip bound");
  const double c = *d.clip_bound;
  for (Tensor* p : d.net.params())
    for (double& v : p->values) v = std::min(c, std::max(-c, v));
}

inline void register_clip_hook(Optimizer& opt, DiscriminatorParams& d) {
  opt.add_hook([&d] { clip_weights(d); });
}

// x_hat = eps * x_real + (1 - eps) * x_fake, one eps per leading-dim pair.
inline Tensor interpolate_pair(const Tensor& x_real, const Tensor& x_fake,
                               Rng& rng) {
  SINEGAN_CHECK(same_shape(x_real, x_fake), "interpolation shape mismatch");
  Tensor out(x_real.shape);
  const int64_t batch = x_real.dim(0);
  const int64_t stride = x_real.numel() / batch;
  for (int64_t b = 0; b < batch; ++b) {
    const double eps = rng.uniform();
    const double* r = x_real.values.data() + b * stride;
    const double* f = x_fake.values.data() + b * stride;
    double* o = out.values.data() + b * stride;
    for (int64_t i = 0; i < stride; ++i) o[i] = eps * r[i] + (1.0 - eps) * f[i];
  }
  return out;
}

inline void save_discriminator(DiscriminatorParams& d, const std::string& path) {
  std::vector<double> meta = {static_cast<double>(d.input_kind),
                              d.clip_bound ? 1.0 : 0.0,
                              d.clip_bound.value_or(0.0)};
  save_checkpoint(d.net, path, meta);
}

inline DiscriminatorParams load_discriminator(const std::string& path) {
  std::vector<double> meta;
  DiscriminatorParams d;
  d.net = load_checkpoint(path, &meta);
  if (meta.size() != 3) throw FormatError("not a discriminator checkpoint");
  d.input_kind = static_cast<DiscInput>(static_cast<int>(meta[0]));
  if (meta[1] != 0.0) d.clip_bound = meta[2];
  return d;
}

}  // namespace sinegan
