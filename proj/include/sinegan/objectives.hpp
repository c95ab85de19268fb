#pragma once

#include <atomic>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sinegan/common.hpp"
#include "sinegan/tensor.hpp"

namespace sinegan {

enum class ObjKind { gan, lsgan, wgan, wgan_gp, wgan_lp };

inline const char* objective_name(ObjKind k) {
  switch (k) {
    case ObjKind::gan: return "gan";
    case ObjKind::lsgan: return "lsgan";
    case ObjKind::wgan: return "wgan";
    case ObjKind::wgan_gp: return "wgan_gp";
    case ObjKind::wgan_lp: return "wgan_lp";
  }
  return "?";
}
inline ObjKind objective_from_name(const std::string& s) {
  if (s == "gan") return ObjKind::gan;
  if (s == "lsgan") return ObjKind::lsgan;
  if (s == "wgan") return ObjKind::wgan;
  if (s == "wgan_gp") return ObjKind::wgan_gp;
  if (s == "wgan_lp") return ObjKind::wgan_lp;
  throw ConfigError("unknown objective: " + s);
}

struct ObjectiveConfig {
  ObjKind kind = ObjKind::wgan;
  double lambda_reg = 0.0;  // L1 coefficient on the realization weights
  double lambda_gp = 0.0;
  double lambda_lp = 0.0;

  void validate() const {
    if (lambda_reg < 0 || lambda_gp < 0 || lambda_lp < 0)
      throw ConfigError("objective coefficients must be nonnegative");
  }
  bool needs_penalty() const {
    return kind == ObjKind::wgan_gp || kind == ObjKind::wgan_lp;
  }
  bool wasserstein_family() const {
    return kind == ObjKind::wgan || needs_penalty();
  }
};

struct BatchLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double reg_term = 0.0;
  double penalty_term = 0.0;
};

// Count of log arguments that had to be clamped at 1e-12; a nonzero count
// flags a saturated classic-objective discriminator.
inline std::atomic<uint64_t>& log_clamp_count() {
  static std::atomic<uint64_t> count{0};
  return count;
}

namespace objdet {

inline double clamped_log(double x) {
  if (x < 1e-12) {
    ++log_clamp_count();
    x = 1e-12;
  }
  return std::log(x);
}

inline double mean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

}  // namespace objdet

// Lipschitz penalty from per-sample input-gradient norms. Two-sided for the
// gradient-penalty variant, one-sided for the Lipschitz-penalty variant.
inline double lipschitz_penalty(ObjKind kind, std::span<const double> grad_norms) {
  double acc = 0.0;
  for (double n : grad_norms) {
    const double d = kind == ObjKind::wgan_lp ? std::max(0.0, n - 1.0) : n - 1.0;
    acc += d * d;
  }
  return grad_norms.empty() ? 0.0 : acc / static_cast<double>(grad_norms.size());
}

// The quantity the discriminator minimizes. For the classic objective the
// scores must already be sigmoid probabilities; the other objectives read
// raw scores.
inline double d_loss(const ObjectiveConfig& cfg, std::span<const double> scores_real,
                     std::span<const double> scores_fake,
                     const std::vector<double>* penalty_grad_norms = nullptr) {
  SINEGAN_CHECK(scores_real.size() == scores_fake.size(),
                "score arrays must have equal length");
  switch (cfg.kind) {
    case ObjKind::gan: {
      double acc = 0.0;
      for (double s : scores_real) acc -= objdet::clamped_log(s);
      for (double s : scores_fake) acc -= objdet::clamped_log(1.0 - s);
      return acc / static_cast<double>(scores_real.size());
    }
    case ObjKind::lsgan: {
      double acc = 0.0;
      for (double s : scores_real) acc += (s - 1.0) * (s - 1.0);
      for (double s : scores_fake) acc += s * s;
      return acc / static_cast<double>(scores_real.size());
    }
    case ObjKind::wgan:
      return objdet::mean(scores_fake) - objdet::mean(scores_real);
    case ObjKind::wgan_gp:
    case ObjKind::wgan_lp: {
      if (!penalty_grad_norms)
        throw StateError("penalty objective needs interpolant gradient norms");
      const double base = objdet::mean(scores_fake) - objdet::mean(scores_real);
      const double coeff =
          cfg.kind == ObjKind::wgan_gp ? cfg.lambda_gp : cfg.lambda_lp;
      return base + coeff * lipschitz_penalty(cfg.kind, *penalty_grad_norms);
    }
  }
  throw StateError("unreachable");
}

inline double l1_norm(const Tensor& w) {
  double acc = 0.0;
  for (double v : w.values) acc += std::abs(v);
  return acc;
}

inline double reg_term(const ObjectiveConfig& cfg, const Tensor& realization_weight) {
  return cfg.lambda_reg * l1_norm(realization_weight);
}

// The quantity the generator minimizes, always including the L1 sparsity
// term on the realization weights. The classic objective uses the
// non-saturating form.
inline double g_loss(const ObjectiveConfig& cfg, std::span<const double> scores_fake,
                     const Tensor& realization_weight) {
  double base = 0.0;
  switch (cfg.kind) {
    case ObjKind::gan: {
      for (double s : scores_fake) base -= objdet::clamped_log(s);
      base /= static_cast<double>(scores_fake.size());
      break;
    }
    case ObjKind::lsgan: {
      for (double s : scores_fake) base += (s - 1.0) * (s - 1.0);
      base /= static_cast<double>(scores_fake.size());
      break;
    }
    case ObjKind::wgan:
    case ObjKind::wgan_gp:
    case ObjKind::wgan_lp:
      base = -objdet::mean(scores_fake);
      break;
  }
  return base + reg_term(cfg, realization_weight);
}

// sign(w) with sign(0) = 0.
inline Tensor l1_subgradient(const Tensor& w) {
  Tensor g(w.shape);
  for (size_t i = 0; i < w.values.size(); ++i)
    g.values[i] = w.values[i] > 0 ? 1.0 : (w.values[i] < 0 ? -1.0 : 0.0);
  return g;
}

// ---------------------------------------------------------------------------
// Gradients with respect to the raw critic outputs (pre-sigmoid for the
// classic objective), used by the trainer.

struct ScoreGrads {
  std::vector<double> real;
  std::vector<double> fake;
};

inline ScoreGrads d_loss_score_grads(const ObjectiveConfig& cfg,
                                     std::span<const double> raw_real,
                                     std::span<const double> raw_fake) {
  const double n = static_cast<double>(raw_real.size());
  ScoreGrads g;
  g.real.resize(raw_real.size());
  g.fake.resize(raw_fake.size());
  switch (cfg.kind) {
    case ObjKind::gan:
      // loss = -mean log s(t_r) - mean log(1 - s(t_f)), t = raw score
      for (size_t i = 0; i < raw_real.size(); ++i)
        g.real[i] = -(1.0 - 1.0 / (1.0 + std::exp(-raw_real[i]))) / n;
      for (size_t i = 0; i < raw_fake.size(); ++i)
        g.fake[i] = (1.0 / (1.0 + std::exp(-raw_fake[i]))) / n;
      break;
    case ObjKind::lsgan:
      for (size_t i = 0; i < raw_real.size(); ++i)
        g.real[i] = 2.0 * (raw_real[i] - 1.0) / n;
      for (size_t i = 0; i < raw_fake.size(); ++i)
        g.fake[i] = 2.0 * raw_fake[i] / n;
      break;
    case ObjKind::wgan:
    case ObjKind::wgan_gp:
    case ObjKind::wgan_lp:
      for (size_t i = 0; i < raw_real.size(); ++i) g.real[i] = -1.0 / n;
      for (size_t i = 0; i < raw_fake.size(); ++i) g.fake[i] = 1.0 / n;
      break;
  }
  return g;
}

inline std::vector<double> g_loss_score_grads(const ObjectiveConfig& cfg,
                                              std::span<const double> raw_fake) {
  const double n = static_cast<double>(raw_fake.size());
  std::vector<double> g(raw_fake.size());
  switch (cfg.kind) {
    case ObjKind::gan:
      // non-saturating: loss = -mean log s(t_f)
      for (size_t i = 0; i < raw_fake.size(); ++i)
        g[i] = -(1.0 - 1.0 / (1.0 + std::exp(-raw_fake[i]))) / n;
      break;
    case ObjKind::lsgan:
      for (size_t i = 0; i < raw_fake.size(); ++i)
        g[i] = 2.0 * (raw_fake[i] - 1.0) / n;
      break;
    case ObjKind::wgan:
    case ObjKind::wgan_gp:
    case ObjKind::wgan_lp:
      for (size_t i = 0; i < raw_fake.size(); ++i) g[i] = -1.0 / n;
      break;
  }
  return g;
}

}  // namespace sinegan
