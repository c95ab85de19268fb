#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sinegan/dsp.hpp"
#include "sinegan/nn.hpp"
#include "sinegan/optim.hpp"
#include "sinegan/rng.hpp"
#include "sinegan/signal.hpp"

namespace sinegan {

constexpr int kClassifierInputSize = 128;

struct ClassifierParams {
  Network net;
  int num_classes = 0;
};

// Same conv stack as the critic (4 blocks, channels 8/16/32/64) on a resized
// 128x128 log-spectrogram, then FC 128 + relu and FC to class logits.
inline ClassifierParams make_classifier(int num_classes, Rng& rng) {
  SINEGAN_CHECK(num_classes >= 2, "classifier needs at least two classes");
  ClassifierParams c;
  c.num_classes = num_classes;
  Network& net = c.net;
  const int channels[5] = {1, 8, 16, 32, 64};
  for (int i = 0; i < 4; ++i) {
    net.add<Conv2d>(channels[i], channels[i + 1]);
    net.add<BatchNorm>(channels[i + 1]);
    net.add<Activation>(ActKind::relu);
    net.add<MaxPool>();
  }
  net.add<FullyConnected>(64 * 8 * 8, 128);
  net.add<Activation>(ActKind::relu);
  net.add<FullyConnected>(128, num_classes);

  // He-style fan-in scaling; the classifier trains supervised, where the tiny
  // adversarial init would be needlessly slow.
  for (size_t li = 0; li < net.num_layers(); ++li) {
    Layer& l = net.layer(li);
    if (l.kind() == LayerKind::fully_connected) {
      auto& fc = static_cast<FullyConnected&>(l);
      const double std = std::sqrt(2.0 / static_cast<double>(fc.weight().shape[0]));
      rng.fill_normal(fc.weight().values, 0.0, std);
      std::fill(fc.bias().values.begin(), fc.bias().values.end(), 0.0);
    } else if (l.kind() == LayerKind::conv2d) {
      auto& cv = static_cast<Conv2d&>(l);
      const double fan_in = static_cast<double>(cv.weight().shape[1]) * 9.0;
      rng.fill_normal(cv.weight().values, 0.0, std::sqrt(2.0 / fan_in));
      std::fill(cv.bias().values.begin(), cv.bias().values.end(), 0.0);
    } else if (l.kind() == LayerKind::batch_norm) {
      auto& bn = static_cast<BatchNorm&>(l);
      std::fill(bn.gamma().values.begin(), bn.gamma().values.end(), 1.0);
      std::fill(bn.beta().values.begin(), bn.beta().values.end(), 0.0);
    }
  }
  return c;
}

// Waveform -> [1, 128, 128] log-spectrogram classifier input.
inline Tensor classifier_input(const Waveform& w) {
  Spectrogram s = stft(w, StftConfig::classifier());
  for (double& m : s.magnitudes) m = std::log1p(m);
  Tensor resized = resize_bilinear(s, kClassifierInputSize, kClassifierInputSize);
  return Tensor({1, kClassifierInputSize, kClassifierInputSize},
                std::move(resized.values));
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> p(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

inline std::vector<double> classify(ClassifierParams& c, const Waveform& w) {
  SINEGAN_CHECK(w.length() == kOutputSamples, "classifier expects length ",
                kOutputSamples);
  const Mode saved = c.net.mode();
  c.net.set_mode(Mode::eval);
  Tensor in = classifier_input(w);
  Tensor batched({1, 1, kClassifierInputSize, kClassifierInputSize},
                 std::move(in.values));
  Tensor logits = c.net.forward(batched);
  c.net.set_mode(saved);
  return softmax(logits.values);
}

// ---------------------------------------------------------------------------

struct PreparedItem {
  Tensor input;  // [1, 128, 128]
  int label = 0;
};

inline std::vector<PreparedItem> prepare_items(const LabeledDataset& data) {
  std::vector<PreparedItem> out;
  out.reserve(data.items.size());
  for (const auto& [w, label] : data.items)
    out.push_back({classifier_input(w), label});
  return out;
}

struct ClassifierTrainConfig {
  double learning_rate = 1.0e-4;
  int batch_size = 32;
  int max_epochs = 60;
  int plateau_epochs = 20;  // stop after this many epochs without improvement
  double val_fraction = 0.1;
  uint64_t seed = 0;
};

struct ClassifierTrainResult {
  ClassifierParams params;
  std::vector<double> val_accuracy_curve;
  int epochs_to_convergence = 0;  // epoch of the best validation accuracy
};

namespace clsdet {

inline Tensor gather_batch(const std::vector<PreparedItem>& items,
                           const std::vector<int>& idx, int start, int bsz) {
  Tensor batch({bsz, 1, kClassifierInputSize, kClassifierInputSize});
  const int64_t stride =
      static_cast<int64_t>(kClassifierInputSize) * kClassifierInputSize;
  for (int b = 0; b < bsz; ++b)
    std::copy(items[static_cast<size_t>(idx[static_cast<size_t>(start + b)])]
                  .input.values.begin(),
              items[static_cast<size_t>(idx[static_cast<size_t>(start + b)])]
                  .input.values.end(),
              batch.values.begin() + b * stride);
  return batch;
}

inline std::vector<int> predict_batchwise(ClassifierParams& c,
                                          const std::vector<PreparedItem>& items,
                                          const std::vector<int>& idx,
                                          int batch_size) {
  const Mode saved = c.net.mode();
  c.net.set_mode(Mode::eval);
  std::vector<int> pred(idx.size());
  for (int start = 0; start < static_cast<int>(idx.size()); start += batch_size) {
    const int bsz = std::min(batch_size, static_cast<int>(idx.size()) - start);
    Tensor logits = c.net.forward(gather_batch(items, idx, start, bsz));
    for (int b = 0; b < bsz; ++b) {
      const double* row = logits.values.data() +
                          static_cast<int64_t>(b) * c.num_classes;
      pred[static_cast<size_t>(start + b)] = static_cast<int>(
          std::max_element(row, row + c.num_classes) - row);
    }
  }
  c.net.set_mode(saved);
  return pred;
}

}  // namespace clsdet

// Cross-entropy training with a held-out validation slice; stops once
// validation accuracy has not improved for plateau_epochs and returns the
// best-scoring parameters.
inline ClassifierTrainResult train_classifier_prepared(
    const std::vector<PreparedItem>& items, int num_classes,
    const ClassifierTrainConfig& cfg) {
  SINEGAN_CHECK(num_classes >= 2, "need at least two classes");
  SINEGAN_CHECK(items.size() >= 2, "need at least two items");
  {
    std::vector<bool> seen(static_cast<size_t>(num_classes), false);
    int distinct = 0;
    for (const auto& it : items)
      if (!seen[static_cast<size_t>(it.label)]) {
        seen[static_cast<size_t>(it.label)] = true;
        ++distinct;
      }
    if (distinct < 2) throw ConfigError("training data covers fewer than two classes");
  }

  Rng rng = Rng::derive(cfg.seed, 0xc1a5);
  std::vector<int> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const int n_val = std::max(
      1, static_cast<int>(std::lround(cfg.val_fraction * items.size())));
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> train_idx(order.begin() + n_val, order.end());
  SINEGAN_CHECK(!train_idx.empty(), "no items left for training");

  ClassifierTrainResult result;
  result.params = make_classifier(num_classes, rng);
  ClassifierParams& c = result.params;
  c.net.set_mode(Mode::train);
  c.net.ensure_grads();
  c.net.zero_grads();
  Optimizer opt(OptKind::rmsprop, cfg.learning_rate);

  Network best_net = c.net;
  double best_acc = -1.0;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(train_idx);
    c.net.set_mode(Mode::train);
    for (int start = 0; start < static_cast<int>(train_idx.size());
         start += cfg.batch_size) {
      const int bsz =
          std::min(cfg.batch_size, static_cast<int>(train_idx.size()) - start);
      Tensor batch = clsdet::gather_batch(items, train_idx, start, bsz);
      Tensor logits = c.net.forward(batch);
      Tensor dlogits({bsz, num_classes});
      for (int b = 0; b < bsz; ++b) {
        const double* row = logits.values.data() +
                            static_cast<int64_t>(b) * num_classes;
        auto p = softmax(std::vector<double>(row, row + num_classes));
        const int label =
            items[static_cast<size_t>(train_idx[static_cast<size_t>(start + b)])]
                .label;
        for (int k = 0; k < num_classes; ++k)
          dlogits.values[static_cast<size_t>(b * num_classes + k)] =
              (p[static_cast<size_t>(k)] - (k == label ? 1.0 : 0.0)) / bsz;
      }
      c.net.backward(dlogits);
      opt.step(c.net);
    }

    auto pred = clsdet::predict_batchwise(c, items, val_idx, cfg.batch_size);
    int correct = 0;
    for (size_t i = 0; i < val_idx.size(); ++i)
      if (pred[i] == items[static_cast<size_t>(val_idx[i])].label) ++correct;
    const double acc = static_cast<double>(correct) / val_idx.size();
    result.val_accuracy_curve.push_back(acc);

    if (acc > best_acc) {
      best_acc = acc;
      best_epoch = epoch;
      best_net = c.net;
    }
    if (epoch - best_epoch >= cfg.plateau_epochs) break;
  }

  c.net = best_net;
  result.epochs_to_convergence = best_epoch;
  return result;
}

inline ClassifierTrainResult train_classifier(const LabeledDataset& data,
                                              const ClassifierTrainConfig& cfg) {
  SINEGAN_CHECK(data.num_classes() >= 2, "need at least two classes");
  return train_classifier_prepared(prepare_items(data), data.num_classes(), cfg);
}

}  // namespace sinegan
