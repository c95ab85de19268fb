#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sinegan/classifier.hpp"
#include "sinegan/generator.hpp"
#include "sinegan/signal.hpp"

namespace sinegan {

// ---------------------------------------------------------------------------
// Inception score

inline double inception_score_from_posteriors(
    const std::vector<std::vector<double>>& posteriors) {
  SINEGAN_CHECK(!posteriors.empty(), "need at least one posterior");
  const size_t k = posteriors.front().size();
  std::vector<double> marginal(k, 0.0);
  for (const auto& p : posteriors) {
    SINEGAN_CHECK(p.size() == k, "posterior widths differ");
    for (size_t i = 0; i < k; ++i) marginal[i] += p[i];
  }
  for (double& m : marginal) m /= static_cast<double>(posteriors.size());

  double mean_kl = 0.0;
  for (const auto& p : posteriors) {
    double kl = 0.0;
    for (size_t i = 0; i < k; ++i) {
      if (p[i] <= 0.0) continue;
      kl += p[i] * (std::log(std::max(p[i], 1e-12)) -
                    std::log(std::max(marginal[i], 1e-12)));
    }
    mean_kl += kl;
  }
  mean_kl /= static_cast<double>(posteriors.size());
  return std::exp(mean_kl);
}

inline double inception_score(ClassifierParams& c,
                              const std::vector<Waveform>& samples) {
  SINEGAN_CHECK(!samples.empty(), "need at least one sample");
  std::vector<std::vector<double>> posteriors;
  posteriors.reserve(samples.size());
  for (const auto& w : samples) posteriors.push_back(classify(c, w));
  return inception_score_from_posteriors(posteriors);
}

// ---------------------------------------------------------------------------
// Experiment harness: real-only, synthetic-only and augmented training over
// a 5-fold partition of the real pool. Every item of the pool lands in
// exactly one test fold; training items are drawn from the remaining folds.

struct EvalReport {
  std::vector<double> per_class_accuracy;
  double class_average = 0.0;
  std::vector<std::vector<int64_t>> confusion;  // [true][predicted]
  double mean_epochs_to_convergence = 0.0;
  std::vector<std::vector<double>> fold_curves;
};

struct ExperimentConfig {
  int num_classes = 5;
  int train_per_class = 150;
  int folds = 5;
  uint64_t seed = 0;
  ClassifierTrainConfig classifier;
  // Data-poor protocol: this class keeps its full pool as test data in every
  // fold (its training items still come from the same pool). -1 disables.
  int asymmetric_class = -1;
};

namespace evaldet {

struct FoldPlan {
  // per fold: indices into the prepared pool
  std::vector<std::vector<int>> test_idx;
  std::vector<std::vector<int>> real_train_idx;
};

inline FoldPlan make_folds(const std::vector<PreparedItem>& pool,
                           const ExperimentConfig& cfg) {
  FoldPlan plan;
  plan.test_idx.resize(static_cast<size_t>(cfg.folds));
  plan.real_train_idx.resize(static_cast<size_t>(cfg.folds));

  std::vector<std::vector<int>> by_class(static_cast<size_t>(cfg.num_classes));
  for (size_t i = 0; i < pool.size(); ++i)
    by_class[static_cast<size_t>(pool[i].label)].push_back(static_cast<int>(i));

  for (int k = 0; k < cfg.num_classes; ++k) {
    auto& idx = by_class[static_cast<size_t>(k)];
    SINEGAN_CHECK(static_cast<int>(idx.size()) >= cfg.folds,
                  "class ", k, " has fewer items than folds");
    Rng rng = Rng::derive(cfg.seed, 0xf01d + static_cast<uint64_t>(k));
    rng.shuffle(idx);
    const int base = static_cast<int>(idx.size()) / cfg.folds;
    const int extra = static_cast<int>(idx.size()) % cfg.folds;
    int pos = 0;
    std::vector<std::vector<int>> groups(static_cast<size_t>(cfg.folds));
    for (int f = 0; f < cfg.folds; ++f) {
      const int take = base + (f < extra ? 1 : 0);
      groups[static_cast<size_t>(f)] =
          std::vector<int>(idx.begin() + pos, idx.begin() + pos + take);
      pos += take;
    }
    for (int f = 0; f < cfg.folds; ++f) {
      if (k == cfg.asymmetric_class) {
        // whole pool of this class is test data, every fold
        plan.test_idx[static_cast<size_t>(f)].insert(
            plan.test_idx[static_cast<size_t>(f)].end(), idx.begin(), idx.end());
      } else {
        plan.test_idx[static_cast<size_t>(f)].insert(
            plan.test_idx[static_cast<size_t>(f)].end(),
            groups[static_cast<size_t>(f)].begin(),
            groups[static_cast<size_t>(f)].end());
      }
      std::vector<int> rest;
      for (int g = 0; g < cfg.folds; ++g)
        if (g != f)
          rest.insert(rest.end(), groups[static_cast<size_t>(g)].begin(),
                      groups[static_cast<size_t>(g)].end());
      SINEGAN_CHECK(static_cast<int>(rest.size()) >= cfg.train_per_class,
                    "class ", k, " pool too small for ", cfg.train_per_class,
                    " training items per fold");
      Rng pick = Rng::derive(cfg.seed, 0x91c7 + static_cast<uint64_t>(k * 131 + f));
      pick.shuffle(rest);
      plan.real_train_idx[static_cast<size_t>(f)].insert(
          plan.real_train_idx[static_cast<size_t>(f)].end(), rest.begin(),
          rest.begin() + cfg.train_per_class);
    }
  }
  return plan;
}

}  // namespace evaldet

inline EvalReport run_folds(const std::vector<PreparedItem>& pool,
                            const std::vector<PreparedItem>& extra_train,
                            const ExperimentConfig& cfg, bool use_real_train) {
  const auto plan = evaldet::make_folds(pool, cfg);
  EvalReport report;
  report.confusion.assign(
      static_cast<size_t>(cfg.num_classes),
      std::vector<int64_t>(static_cast<size_t>(cfg.num_classes), 0));

  double epochs_acc = 0.0;
  for (int f = 0; f < cfg.folds; ++f) {
    std::vector<PreparedItem> train_items;
    if (use_real_train)
      for (int i : plan.real_train_idx[static_cast<size_t>(f)])
        train_items.push_back(pool[static_cast<size_t>(i)]);
    for (const auto& it : extra_train) train_items.push_back(it);
    SINEGAN_CHECK(!train_items.empty(), "fold has no training items");

    ClassifierTrainConfig ccfg = cfg.classifier;
    ccfg.seed = cfg.seed * 1000003ull + static_cast<uint64_t>(f);
    auto trained = train_classifier_prepared(train_items, cfg.num_classes, ccfg);
    epochs_acc += trained.epochs_to_convergence;
    report.fold_curves.push_back(trained.val_accuracy_curve);

    const auto& test = plan.test_idx[static_cast<size_t>(f)];
    auto pred = clsdet::predict_batchwise(trained.params, pool, test,
                                          cfg.classifier.batch_size);
    for (size_t i = 0; i < test.size(); ++i) {
      const int truth = pool[static_cast<size_t>(test[i])].label;
      ++report.confusion[static_cast<size_t>(truth)][static_cast<size_t>(pred[i])];
    }
  }

  report.per_class_accuracy.resize(static_cast<size_t>(cfg.num_classes));
  for (int k = 0; k < cfg.num_classes; ++k) {
    int64_t row_total = 0;
    for (int64_t v : report.confusion[static_cast<size_t>(k)]) row_total += v;
    report.per_class_accuracy[static_cast<size_t>(k)] =
        row_total > 0 ? static_cast<double>(
                            report.confusion[static_cast<size_t>(k)]
                                            [static_cast<size_t>(k)]) /
                            static_cast<double>(row_total)
                      : 0.0;
  }
  report.class_average =
      std::accumulate(report.per_class_accuracy.begin(),
                      report.per_class_accuracy.end(), 0.0) /
      cfg.num_classes;
  report.mean_epochs_to_convergence = epochs_acc / cfg.folds;
  return report;
}

// Synthetic samples from a trained per-class generator.
inline std::vector<Waveform> generate_samples(GeneratorParams& gen, int count,
                                              uint64_t seed) {
  std::vector<Waveform> out;
  out.reserve(static_cast<size_t>(count));
  Rng rng = Rng::derive(seed, 0x5a3e);
  for (int i = 0; i < count; ++i) {
    LatentVector z;
    rng.fill_normal(z.values, 0.0, 0.01);
    out.push_back(generate(gen, z));
  }
  return out;
}

inline std::vector<PreparedItem> prepare_synthetic(
    std::vector<GeneratorParams>& generators, int per_class, uint64_t seed) {
  std::vector<PreparedItem> out;
  for (size_t k = 0; k < generators.size(); ++k) {
    auto waves = generate_samples(generators[k], per_class,
                                  seed + 7919ull * (k + 1));
    for (auto& w : waves)
      out.push_back({classifier_input(w), static_cast<int>(k)});
  }
  return out;
}

// Experiment 1: train on real items only.
inline EvalReport run_exp1(const std::vector<PreparedItem>& pool,
                           const ExperimentConfig& cfg) {
  return run_folds(pool, {}, cfg, /*use_real_train=*/true);
}

// Experiment 2: train on synthetic items only, test on the real folds.
inline EvalReport run_exp2(const std::vector<PreparedItem>& pool,
                           const std::vector<PreparedItem>& synthetic,
                           const ExperimentConfig& cfg) {
  SINEGAN_CHECK(!synthetic.empty(), "experiment 2 needs synthetic data");
  return run_folds(pool, synthetic, cfg, /*use_real_train=*/false);
}

// Experiment 3: train on real + synthetic items.
inline EvalReport run_exp3(const std::vector<PreparedItem>& pool,
                           const std::vector<PreparedItem>& synthetic,
                           const ExperimentConfig& cfg) {
  SINEGAN_CHECK(!synthetic.empty(), "experiment 3 needs synthetic data");
  return run_folds(pool, synthetic, cfg, /*use_real_train=*/true);
}

}  // namespace sinegan
