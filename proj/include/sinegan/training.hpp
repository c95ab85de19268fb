#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "sinegan/discriminator.hpp"
#include "sinegan/generator.hpp"
#include "sinegan/objectives.hpp"
#include "sinegan/optim.hpp"

namespace sinegan {

struct TrainConfig {
  ObjectiveConfig objective;
  double learning_rate = 1.0e-6;
  int batch_size = 32;
  int d_steps_per_g_step = 1;
  int max_epochs = 10000;
  double g_loss_tolerance = 1.0e-6;
  uint64_t seed = 0;
  OptKind optimizer = OptKind::sgd;

  void validate() const {
    objective.validate();
    if (learning_rate < 0) throw ConfigError("learning_rate must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (d_steps_per_g_step < 1) throw ConfigError("d_steps_per_g_step must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (g_loss_tolerance <= 0) throw ConfigError("g_loss_tolerance must be > 0");
  }
};

enum class StopReason { converged, max_epochs, diverged };

inline const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::diverged: return "diverged";
  }
  return "?";
}

struct EpochStats {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double reg_term = 0.0;
  double penalty_term = 0.0;
  double wall_ms = 0.0;
};

struct TrainReport {
  int epochs_run = 0;
  std::vector<EpochStats> history;  // history.size() == epochs_run
  StopReason reason = StopReason::max_epochs;
  double wall_seconds = 0.0;
  // Bookkeeping for the final epoch: the latents of its last generator batch
  // and the generator loss re-evaluated with the end-of-epoch parameters.
  std::vector<LatentVector> final_latents;
  double final_g_loss = 0.0;
};

inline std::vector<LatentVector> sample_latents(int batch, Rng& rng) {
  SINEGAN_CHECK(batch >= 1, "batch must be >= 1");
  std::vector<LatentVector> out;
  out.reserve(static_cast<size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    LatentVector z;
    rng.fill_normal(z.values, 0.0, 0.01);
    out.push_back(std::move(z));
  }
  return out;
}

namespace traindet {

inline Tensor latents_to_tensor(const std::vector<LatentVector>& zs) {
  Tensor t({static_cast<int64_t>(zs.size()), kLatentDim});
  for (size_t b = 0; b < zs.size(); ++b)
    std::copy(zs[b].values.begin(), zs[b].values.end(),
              t.values.begin() + static_cast<int64_t>(b) * kLatentDim);
  return t;
}

// Critic input pipeline: spectrogram front end for the CNN, identity for the
// time-domain MLP.
struct CriticPipeline {
  DiscriminatorParams& d;
  SpecFrontEnd fe;

  explicit CriticPipeline(DiscriminatorParams& disc) : d(disc) {}

  bool spectral() const { return d.input_kind == DiscInput::spectrogram_256x60; }

  Tensor to_input(const Tensor& waves) {
    return spectral() ? fe.forward(waves) : waves;
  }
  Tensor input_backward(const Tensor& d_input) {
    return spectral() ? fe.backward(d_input) : d_input;
  }
};

inline std::vector<double> scores_from(const Tensor& y) {
  return y.values;
}

inline double d_loss_from_raw(const ObjectiveConfig& cfg,
                              std::vector<double> raw_real,
                              std::vector<double> raw_fake,
                              const std::vector<double>* norms) {
  if (cfg.kind == ObjKind::gan) {
    for (auto& s : raw_real) s = sigmoid(s);
    for (auto& s : raw_fake) s = sigmoid(s);
  }
  return d_loss(cfg, raw_real, raw_fake, norms);
}

inline double g_loss_from_raw(const ObjectiveConfig& cfg,
                              std::vector<double> raw_fake,
                              const Tensor& tied_weight) {
  if (cfg.kind == ObjKind::gan)
    for (auto& s : raw_fake) s = sigmoid(s);
  return g_loss(cfg, raw_fake, tied_weight);
}

// Parameter gradient of the Lipschitz penalty. The input gradient g of the
// critic is exact (one backward pass); its sensitivity to the parameters is
// taken as a central difference of grad_theta(D) along the unit direction
// g/|g|, which costs two more forward/backward passes on the interpolant
// batch.
inline double apply_penalty(const ObjectiveConfig& cfg, Network& critic,
                            const Tensor& x_hat, std::vector<double>& grad_norms) {
  const int64_t batch = x_hat.dim(0);
  const int64_t stride = x_hat.numel() / batch;

  Tensor ones({batch, 1});
  std::fill(ones.values.begin(), ones.values.end(), 1.0);
  critic.forward(x_hat);
  Tensor gx = critic.backward(ones);
  critic.zero_grads();

  grad_norms.assign(static_cast<size_t>(batch), 0.0);
  std::vector<double> weight(static_cast<size_t>(batch), 0.0);
  const double coeff = cfg.kind == ObjKind::wgan_gp ? cfg.lambda_gp : cfg.lambda_lp;
  Tensor dir(gx.shape);
  double x_rms = 0.0;
  for (double v : x_hat.values) x_rms += v * v;
  x_rms = std::sqrt(x_rms / static_cast<double>(x_hat.numel()));
  const double h = 1e-4 * std::max(1.0, x_rms);

  for (int64_t b = 0; b < batch; ++b) {
    double norm = 0.0;
    const double* g = gx.values.data() + b * stride;
    for (int64_t i = 0; i < stride; ++i) norm += g[i] * g[i];
    norm = std::sqrt(norm);
    grad_norms[static_cast<size_t>(b)] = norm;
    const double slack = cfg.kind == ObjKind::wgan_lp
                             ? std::max(0.0, norm - 1.0)
                             : norm - 1.0;
    // d/d|g| of coeff * slack^2, averaged over the batch
    weight[static_cast<size_t>(b)] =
        (cfg.kind == ObjKind::wgan_lp && norm <= 1.0)
            ? 0.0
            : coeff * 2.0 * slack / static_cast<double>(batch);
    double* dv = dir.values.data() + b * stride;
    const double inv = norm > 1e-12 ? 1.0 / norm : 0.0;
    for (int64_t i = 0; i < stride; ++i) dv[i] = g[i] * inv;
  }

  Tensor shifted(x_hat.shape);
  Tensor upstream({batch, 1});
  for (int sign : {+1, -1}) {
    for (size_t i = 0; i < shifted.values.size(); ++i)
      shifted.values[i] = x_hat.values[i] + sign * h * dir.values[i];
    for (int64_t b = 0; b < batch; ++b)
      upstream.values[static_cast<size_t>(b)] =
          sign * weight[static_cast<size_t>(b)] / (2.0 * h);
    critic.forward(shifted);
    critic.backward(upstream);
  }
  return lipschitz_penalty(cfg.kind, grad_norms);
}

}  // namespace traindet

// Alternating adversarial loop. Per minibatch: d_steps_per_g_step critic
// updates on real+fresh-fake scores (weight clipping applied by hook when
// configured), then one generator update through the critic and its input
// pipeline (tying projection applied by hook). Stops when the epoch-mean
// generator loss moves less than the tolerance, the epoch budget runs out,
// or a loss goes non-finite (parameters then roll back to the last finite
// epoch).
inline TrainReport train(
    GeneratorParams& gen, DiscriminatorParams& disc,
    const std::vector<Waveform>& data, const TrainConfig& cfg,
    const std::function<void(int, const EpochStats&, GeneratorParams&,
                             DiscriminatorParams&)>& epoch_callback = {}) {
  cfg.validate();
  SINEGAN_CHECK(!data.empty(), "training data must be non-empty");
  for (const auto& w : data)
    SINEGAN_CHECK(w.length() == kOutputSamples, "training waveforms must have length ",
                  kOutputSamples);
  if (cfg.objective.kind == ObjKind::wgan && !disc.clip_bound)
    throw ConfigError("wgan requires a discriminator clip bound");

  const auto t_start = std::chrono::steady_clock::now();
  const int n = static_cast<int>(data.size());

  traindet::CriticPipeline pipeline(disc);

  // Real critic inputs never change; compute them once.
  Tensor real_inputs;
  {
    Tensor waves({n, kOutputSamples});
    for (int i = 0; i < n; ++i)
      std::copy(data[static_cast<size_t>(i)].samples.begin(),
                data[static_cast<size_t>(i)].samples.end(),
                waves.values.begin() + static_cast<int64_t>(i) * kOutputSamples);
    traindet::CriticPipeline prep(disc);
    real_inputs = prep.to_input(waves);
  }
  const int64_t input_stride = real_inputs.numel() / n;

  Optimizer g_opt(cfg.optimizer, cfg.learning_rate);
  Optimizer d_opt(cfg.optimizer, cfg.learning_rate);
  register_tying_hook(g_opt, gen);
  if (disc.clip_bound) register_clip_hook(d_opt, disc);

  gen.net.set_mode(Mode::train);
  disc.net.set_mode(Mode::train);
  gen.net.ensure_grads();
  disc.net.ensure_grads();
  gen.net.zero_grads();
  disc.net.zero_grads();

  Rng shuffle_rng = Rng::derive(cfg.seed, 0x5351);
  Rng eps_rng = Rng::derive(cfg.seed, 0x00e4);
  // Latents are tied to the batch position, so every epoch replays the same
  // latent schedule against the evolving parameters. Epoch-mean generator
  // losses then compare like for like, and a zero learning rate reproduces
  // its loss exactly, which is what the termination rule expects.
  auto batch_latents = [&cfg](int batch_index, int sub) {
    Rng rng = Rng::derive(cfg.seed,
                          0x7a17 + 1000003ull * static_cast<uint64_t>(batch_index) +
                              static_cast<uint64_t>(sub));
    return rng;
  };

  Network gen_backup = gen.net;
  Network disc_backup = disc.net;

  TrainReport report;
  std::vector<LatentVector> last_batch_latents;
  std::vector<LatentVector> backup_latents;

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t_epoch = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);

    double sum_d = 0.0, sum_g = 0.0, sum_reg = 0.0, sum_pen = 0.0;
    int batches = 0;
    bool finite = true;

    for (int start = 0; start < n && finite; start += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, n - start);

      std::vector<int64_t> in_shape = real_inputs.shape;
      in_shape[0] = bsz;
      Tensor real_batch(in_shape);
      for (int b = 0; b < bsz; ++b)
        std::copy(real_inputs.values.begin() + order[start + b] * input_stride,
                  real_inputs.values.begin() + (order[start + b] + 1) * input_stride,
                  real_batch.values.begin() + static_cast<int64_t>(b) * input_stride);

      const int batch_index = start / cfg.batch_size;
      double batch_d = 0.0, batch_pen = 0.0;
      for (int ds = 0; ds < cfg.d_steps_per_g_step; ++ds) {
        Rng z_rng = batch_latents(batch_index, 1 + ds);
        auto zs = sample_latents(bsz, z_rng);
        Tensor fake_waves = gen.net.forward(traindet::latents_to_tensor(zs));
        Tensor fake_batch = pipeline.to_input(fake_waves);

        // One concatenated pass keeps a single retained state in the critic.
        std::vector<int64_t> joint_shape = real_batch.shape;
        joint_shape[0] = 2 * bsz;
        Tensor joint(joint_shape);
        std::copy(real_batch.values.begin(), real_batch.values.end(),
                  joint.values.begin());
        std::copy(fake_batch.values.begin(), fake_batch.values.end(),
                  joint.values.begin() + real_batch.numel());
        // Penalty gradients first: that pass clears the critic's gradient
        // buffers before accumulating, so the base pass must come after.
        std::vector<double> grad_norms;
        double pen_value = 0.0;
        if (cfg.objective.needs_penalty()) {
          Tensor fake_for_pen = fake_batch;
          Tensor x_hat = interpolate_pair(real_batch, fake_for_pen, eps_rng);
          pen_value = traindet::apply_penalty(cfg.objective, disc.net, x_hat,
                                              grad_norms);
        }

        Tensor scores = disc.net.forward(joint);
        std::vector<double> raw_real(scores.values.begin(),
                                     scores.values.begin() + bsz);
        std::vector<double> raw_fake(scores.values.begin() + bsz,
                                     scores.values.end());

        ScoreGrads sg = d_loss_score_grads(cfg.objective, raw_real, raw_fake);
        Tensor upstream({2 * bsz, 1});
        for (int b = 0; b < bsz; ++b) {
          upstream.values[static_cast<size_t>(b)] = sg.real[static_cast<size_t>(b)];
          upstream.values[static_cast<size_t>(bsz + b)] = sg.fake[static_cast<size_t>(b)];
        }
        disc.net.backward(upstream);
        d_opt.step(disc.net);

        batch_d += traindet::d_loss_from_raw(
                       cfg.objective, std::move(raw_real), std::move(raw_fake),
                       cfg.objective.needs_penalty() ? &grad_norms : nullptr) /
                   cfg.d_steps_per_g_step;
        batch_pen += pen_value / cfg.d_steps_per_g_step;
      }

      // Generator update through the critic and the input pipeline.
      Rng g_rng = batch_latents(batch_index, 0);
      auto zs = sample_latents(bsz, g_rng);
      Tensor fake_waves = gen.net.forward(traindet::latents_to_tensor(zs));
      Tensor fake_batch = pipeline.to_input(fake_waves);
      Tensor scores = disc.net.forward(fake_batch);
      auto g_grads = g_loss_score_grads(cfg.objective, scores.values);
      Tensor upstream({bsz, 1}, std::move(g_grads));
      Tensor d_input = disc.net.backward(upstream);
      Tensor d_waves = pipeline.input_backward(d_input);
      gen.net.backward(d_waves);
      disc.net.zero_grads();  // only the generator is updated here

      Tensor& tied = gen.tied_weight();
      if (cfg.objective.lambda_reg > 0) {
        tied.ensure_grad();
        for (size_t i = 0; i < tied.values.size(); ++i) {
          const double v = tied.values[i];
          tied.grad[i] += cfg.objective.lambda_reg *
                          (v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0));
        }
      }
      const double batch_g =
          traindet::g_loss_from_raw(cfg.objective, scores.values, tied);
      const double batch_reg = reg_term(cfg.objective, tied);
      g_opt.step(gen.net);

      last_batch_latents = std::move(zs);
      sum_d += batch_d;
      sum_g += batch_g;
      sum_reg += batch_reg;
      sum_pen += batch_pen;
      ++batches;
      if (!is_finite(batch_d) || !is_finite(batch_g)) finite = false;
    }

    EpochStats stats;
    stats.d_loss = sum_d / batches;
    stats.g_loss = sum_g / batches;
    stats.reg_term = sum_reg / batches;
    stats.penalty_term = sum_pen / batches;
    stats.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t_epoch)
                        .count();

    if (!finite || !is_finite(stats.d_loss) || !is_finite(stats.g_loss)) {
      gen.net = gen_backup;
      disc.net = disc_backup;
      last_batch_latents = backup_latents;
      report.reason = StopReason::diverged;
      break;
    }

    report.history.push_back(stats);
    report.epochs_run = epoch;
    gen_backup = gen.net;
    disc_backup = disc.net;
    backup_latents = last_batch_latents;

    if (epoch_callback) epoch_callback(epoch, stats, gen, disc);

    if (epoch >= 2) {
      const double prev = report.history[static_cast<size_t>(epoch) - 2].g_loss;
      if (std::abs(stats.g_loss - prev) < cfg.g_loss_tolerance) {
        report.reason = StopReason::converged;
        break;
      }
    }
    if (epoch == cfg.max_epochs) report.reason = StopReason::max_epochs;
  }

  // Re-evaluate the generator loss at the end-of-run parameters on the last
  // batch's latents, without touching running statistics, so the reported
  // number can be reproduced from the returned state.
  if (!last_batch_latents.empty()) {
    report.final_latents = last_batch_latents;
    gen.net.set_update_running(false);
    disc.net.set_update_running(false);
    Tensor fake_waves =
        gen.net.forward(traindet::latents_to_tensor(last_batch_latents));
    traindet::CriticPipeline eval_pipe(disc);
    Tensor scores = disc.net.forward(eval_pipe.to_input(fake_waves));
    report.final_g_loss = traindet::g_loss_from_raw(
        cfg.objective, scores.values, gen.tied_weight());
    gen.net.set_update_running(true);
    disc.net.set_update_running(true);
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace sinegan
