#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "sinegan/common.hpp"
#include "sinegan/nn.hpp"

namespace sinegan {

enum class OptKind { sgd, rmsprop };

inline const char* optimizer_name(OptKind k) {
  return k == OptKind::sgd ? "sgd" : "rmsprop";
}
inline OptKind optimizer_from_name(const std::string& s) {
  if (s == "sgd") return OptKind::sgd;
  if (s == "rmsprop") return OptKind::rmsprop;
  throw ConfigError("unknown optimizer: " + s);
}

// Per-network optimizer. After every update the gradients are cleared and
// the registered constraint hooks run (weight tying, clipping), so the
// constraints hold at every point an observer can see.
class Optimizer {
 public:
  Optimizer(OptKind kind, double learning_rate)
      : kind_(kind), lr_(learning_rate) {
    SINEGAN_CHECK(learning_rate >= 0, "learning rate must be nonnegative");
  }

  static constexpr double kRmsDecay = 0.9;
  static constexpr double kRmsEps = 1e-8;

  void add_hook(std::function<void()> hook) { hooks_.push_back(std::move(hook)); }

  void step(Network& net) {
    auto params = net.params();
    if (kind_ == OptKind::rmsprop && accum_.size() != params.size()) {
      accum_.clear();
      for (Tensor* p : params)
        accum_.emplace_back(p->values.size(), 0.0);
    }
    for (size_t pi = 0; pi < params.size(); ++pi) {
      Tensor* p = params[pi];
      if (!p->has_grad()) throw StateError("optimizer step with missing gradients");
      if (kind_ == OptKind::sgd) {
        for (size_t i = 0; i < p->values.size(); ++i)
          p->values[i] -= lr_ * p->grad[i];
      } else {
        auto& acc = accum_[pi];
        for (size_t i = 0; i < p->values.size(); ++i) {
          const double g = p->grad[i];
          acc[i] = kRmsDecay * acc[i] + (1.0 - kRmsDecay) * g * g;
          p->values[i] -= lr_ * g / (std::sqrt(acc[i]) + kRmsEps);
        }
      }
    }
    net.zero_grads();
    for (auto& h : hooks_) h();
  }

  OptKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }

 private:
  OptKind kind_;
  double lr_;
  std::vector<std::vector<double>> accum_;
  std::vector<std::function<void()>> hooks_;
};

}  // namespace sinegan
