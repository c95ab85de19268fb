#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "sinegan/common.hpp"
#include "sinegan/dsp.hpp"
#include "sinegan/rng.hpp"
#include "sinegan/tensor.hpp"

namespace sinegan {

enum class Mode { train, eval };

// Adversarial networks initialize every trainable parameter this way.
constexpr double kParamInitStd = 0.01;
enum class LayerKind : uint8_t {
  fully_connected = 0,
  conv2d = 1,
  batch_norm = 2,
  max_pool = 3,
  activation = 4,
};
enum class ActKind : uint32_t { relu = 0, tanh = 1, cosine = 2, identity = 3 };

using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerKind kind() const = 0;
  // Kind-specific construction constants, serialized with checkpoints.
  virtual std::vector<uint32_t> hyper() const = 0;
  virtual Tensor forward(Tensor x, Mode mode, bool update_running) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  virtual std::vector<Tensor*> params() { return {}; }
  virtual std::vector<Tensor*> state() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
};

namespace nndet {

inline void as_matrix_dims(const Tensor& x, int64_t& rows, int64_t& cols) {
  SINEGAN_CHECK(x.rank() >= 1, "tensor must be non-empty");
  rows = x.dim(0);
  cols = x.numel() / rows;
}

}  // namespace nndet

// ---------------------------------------------------------------------------

class FullyConnected : public Layer {
 public:
  // When tie_half is set, weight rows i and i + in/2 are constrained equal;
  // the projection itself is applied by an optimizer hook.
  FullyConnected(int64_t in, int64_t out, bool tie_half = false)
      : in_(in), out_(out), tie_half_(tie_half), w_({in, out}), b_({out}) {
    SINEGAN_CHECK(!tie_half || in % 2 == 0, "tied layer needs even input width");
  }

  LayerKind kind() const override { return LayerKind::fully_connected; }
  std::vector<uint32_t> hyper() const override {
    return {static_cast<uint32_t>(in_), static_cast<uint32_t>(out_),
            tie_half_ ? 1u : 0u};
  }

  Tensor forward(Tensor x, Mode, bool) override {
    int64_t rows, cols;
    nndet::as_matrix_dims(x, rows, cols);
    SINEGAN_CHECK(cols == in_, "fully_connected input width mismatch: got ",
                  cols, ", want ", in_);
    Tensor y({rows, out_});
    ConstMapRM xm(x.values.data(), rows, in_);
    ConstMapRM wm(w_.values.data(), in_, out_);
    MapRM ym(y.values.data(), rows, out_);
    ym.noalias() = xm * wm;
    ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b_.values.data(), out_);
    x_ = std::move(x);
    has_state_ = true;
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    if (!has_state_) throw StateError("backward without retained forward state");
    int64_t rows = x_.dim(0);
    SINEGAN_CHECK(dy.dim(0) == rows && dy.numel() / rows == out_,
                  "fully_connected gradient shape mismatch");
    w_.ensure_grad();
    b_.ensure_grad();
    ConstMapRM xm(x_.values.data(), rows, in_);
    ConstMapRM dym(dy.values.data(), rows, out_);
    MapRM dwm(w_.grad.data(), in_, out_);
    dwm.noalias() += xm.transpose() * dym;
    // fixed-order accumulation: vectorized column sums round differently
    // depending on buffer alignment, which breaks bit-reproducibility
    for (int64_t r = 0; r < rows; ++r) {
      const double* row = dy.values.data() + r * out_;
      for (int64_t j = 0; j < out_; ++j) b_.grad[static_cast<size_t>(j)] += row[j];
    }

    Tensor dx(x_.shape);
    ConstMapRM wm(w_.values.data(), in_, out_);
    MapRM dxm(dx.values.data(), rows, in_);
    dxm.noalias() = dym * wm.transpose();
    return dx;
  }

  std::vector<Tensor*> params() override { return {&w_, &b_}; }
  std::unique_ptr<Layer> clone() const override {
    auto c = std::make_unique<FullyConnected>(in_, out_, tie_half_);
    c->w_ = w_;
    c->b_ = b_;
    return c;
  }

  Tensor& weight() { return w_; }
  Tensor& bias() { return b_; }
  bool tied() const { return tie_half_; }
  int64_t in_width() const { return in_; }

 private:
  int64_t in_, out_;
  bool tie_half_;
  Tensor w_, b_;
  Tensor x_;
  bool has_state_ = false;
};

// ---------------------------------------------------------------------------

// 3x3 convolution, stride 1, zero "same" padding, NCHW layout. The weight
// tensor [out, in, 3, 3] maps directly onto the GEMM's [out x in*9] left
// factor, and the per-item column matrix is [in*9 x h*w] so every tap row is
// a contiguous shifted copy of an input plane; the products then land in
// NCHW order with no permutation.
class Conv2d : public Layer {
 public:
  Conv2d(int64_t in_ch, int64_t out_ch)
      : in_ch_(in_ch), out_ch_(out_ch), w_({out_ch, in_ch, 3, 3}), b_({out_ch}) {}

  LayerKind kind() const override { return LayerKind::conv2d; }
  std::vector<uint32_t> hyper() const override {
    return {static_cast<uint32_t>(in_ch_), static_cast<uint32_t>(out_ch_)};
  }

  Tensor forward(Tensor x, Mode, bool) override {
    SINEGAN_CHECK(x.rank() == 4 && x.dim(1) == in_ch_,
                  "conv2d expects [batch, ", in_ch_, ", h, w]");
    const int64_t b = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t hw = h * w;
    Tensor out({b, out_ch_, h, w});
    ConstMapRM wmat(w_.values.data(), out_ch_, in_ch_ * 9);
    MatrixRM cols(in_ch_ * 9, hw);
    for (int64_t bi = 0; bi < b; ++bi) {
      fill_cols(x, bi, h, w, cols);
      MapRM out_i(out.values.data() + bi * out_ch_ * hw, out_ch_, hw);
      out_i.noalias() = wmat * cols;
      for (int64_t f = 0; f < out_ch_; ++f)
        out_i.row(f).array() += b_.values[static_cast<size_t>(f)];
    }
    x_ = std::move(x);
    has_state_ = true;
    return out;
  }

  Tensor backward(const Tensor& dy) override {
    if (!has_state_) throw StateError("backward without retained forward state");
    const int64_t b = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
    SINEGAN_CHECK(dy.rank() == 4 && dy.dim(0) == b && dy.dim(1) == out_ch_ &&
                      dy.dim(2) == h && dy.dim(3) == w,
                  "conv2d gradient shape mismatch");
    const int64_t hw = h * w;
    w_.ensure_grad();
    b_.ensure_grad();

    Tensor dx(x_.shape);
    ConstMapRM wmat(w_.values.data(), out_ch_, in_ch_ * 9);
    MapRM dwmat(w_.grad.data(), out_ch_, in_ch_ * 9);
    MatrixRM cols(in_ch_ * 9, hw);
    MatrixRM dcols(in_ch_ * 9, hw);
    for (int64_t bi = 0; bi < b; ++bi) {
      ConstMapRM dy_i(dy.values.data() + bi * out_ch_ * hw, out_ch_, hw);
      fill_cols(x_, bi, h, w, cols);  // recomputed; cheaper than retaining
      dwmat.noalias() += dy_i * cols.transpose();
      for (int64_t f = 0; f < out_ch_; ++f) {
        const double* row = dy.values.data() + (bi * out_ch_ + f) * hw;
        double acc = 0.0;
        for (int64_t p = 0; p < hw; ++p) acc += row[p];
        b_.grad[static_cast<size_t>(f)] += acc;
      }
      dcols.noalias() = wmat.transpose() * dy_i;
      scatter_cols(dcols, bi, h, w, dx);
    }
    return dx;
  }

  std::vector<Tensor*> params() override { return {&w_, &b_}; }
  std::unique_ptr<Layer> clone() const override {
    auto c = std::make_unique<Conv2d>(in_ch_, out_ch_);
    c->w_ = w_;
    c->b_ = b_;
    return c;
  }

  Tensor& weight() { return w_; }
  Tensor& bias() { return b_; }

 private:
  // Tap row (c, dy, dx) of cols is the input plane shifted by (-dy, -dx)
  // with zero fill at the borders.
  void fill_cols(const Tensor& x, int64_t bi, int64_t h, int64_t w,
                 MatrixRM& cols) const {
    for (int64_t c = 0; c < in_ch_; ++c) {
      const double* plane = x.values.data() + (bi * in_ch_ + c) * h * w;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          double* row = cols.row(c * 9 + (dy + 1) * 3 + (dx + 1)).data();
          for (int64_t i = 0; i < h; ++i) {
            const int64_t si = i + dy;
            double* dst = row + i * w;
            if (si < 0 || si >= h) {
              std::fill(dst, dst + w, 0.0);
              continue;
            }
            const double* src = plane + si * w;
            if (dx == 0) {
              std::copy(src, src + w, dst);
            } else if (dx < 0) {
              dst[0] = 0.0;
              std::copy(src, src + w - 1, dst + 1);
            } else {
              std::copy(src + 1, src + w, dst);
              dst[w - 1] = 0.0;
            }
          }
        }
    }
  }

  void scatter_cols(const MatrixRM& dcols, int64_t bi, int64_t h, int64_t w,
                    Tensor& dx) const {
    for (int64_t c = 0; c < in_ch_; ++c) {
      double* plane = dx.values.data() + (bi * in_ch_ + c) * h * w;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx2 = -1; dx2 <= 1; ++dx2) {
          const double* row = dcols.row(c * 9 + (dy + 1) * 3 + (dx2 + 1)).data();
          for (int64_t i = 0; i < h; ++i) {
            const int64_t si = i + dy;
            if (si < 0 || si >= h) continue;
            double* dst = plane + si * w;
            const double* src = row + i * w;
            if (dx2 == 0) {
              for (int64_t j = 0; j < w; ++j) dst[j] += src[j];
            } else if (dx2 < 0) {
              for (int64_t j = 1; j < w; ++j) dst[j - 1] += src[j];
            } else {
              for (int64_t j = 0; j < w - 1; ++j) dst[j + 1] += src[j];
            }
          }
        }
    }
  }

  int64_t in_ch_, out_ch_;
  Tensor w_, b_;
  Tensor x_;
  bool has_state_ = false;
};

// ---------------------------------------------------------------------------

// Per-feature normalization: over the batch axis for [b, f] inputs, over
// batch and spatial axes for [b, c, h, w] inputs. Train mode normalizes by
// batch statistics and refreshes running stats; eval mode uses running stats.
// The scale parameter is optional: in front of a relu it is redundant, and
// the adversarial networks run without it so weight clipping cannot crush
// the activation scale.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(int64_t features, bool trainable_scale = true)
      : features_(features),
        trainable_scale_(trainable_scale),
        gamma_({features}),
        beta_({features}),
        run_mean_({features}),
        run_var_({features}) {
    std::fill(gamma_.values.begin(), gamma_.values.end(), 1.0);
    std::fill(run_var_.values.begin(), run_var_.values.end(), 1.0);
  }

  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.9;

  LayerKind kind() const override { return LayerKind::batch_norm; }
  std::vector<uint32_t> hyper() const override {
    return {static_cast<uint32_t>(features_), trainable_scale_ ? 1u : 0u};
  }

  Tensor forward(Tensor x, Mode mode, bool update_running) override {
    group_geometry(x);
    train_mode_ = (mode == Mode::train);
    const int64_t n_per_feature = count_per_feature_;

    mean_.assign(static_cast<size_t>(features_), 0.0);
    invstd_.assign(static_cast<size_t>(features_), 0.0);
    if (train_mode_) {
      for (int64_t f = 0; f < features_; ++f) {
        double sum = 0.0;
        for (int64_t b = 0; b < batch_; ++b)
          sum_run(x.values.data() + (b * features_ + f) * spatial_, spatial_, sum);
        const double m = sum / n_per_feature;
        double acc = 0.0;
        for (int64_t b = 0; b < batch_; ++b)
          sumsq_dev_run(x.values.data() + (b * features_ + f) * spatial_,
                        spatial_, m, acc);
        const double var = acc / n_per_feature;
        mean_[f] = m;
        invstd_[f] = 1.0 / std::sqrt(var + kEps);
        if (update_running) {
          run_mean_.values[f] = kMomentum * run_mean_.values[f] + (1 - kMomentum) * m;
          run_var_.values[f] = kMomentum * run_var_.values[f] + (1 - kMomentum) * var;
        }
      }
    } else {
      for (int64_t f = 0; f < features_; ++f) {
        mean_[f] = run_mean_.values[f];
        invstd_[f] = 1.0 / std::sqrt(run_var_.values[f] + kEps);
      }
    }

    if (xhat_.values.size() != x.values.size()) xhat_ = Tensor(x.shape);
    xhat_.shape = x.shape;
    for (int64_t f = 0; f < features_; ++f) {
      const double g = gamma_.values[f], b = beta_.values[f];
      const double m = mean_[f], is = invstd_[f];
      transform_inplace(x, f, m, is, g, b);
    }
    has_state_ = true;
    return x;
  }

  Tensor backward(const Tensor& dy) override {
    if (!has_state_) throw StateError("backward without retained forward state");
    SINEGAN_CHECK(same_shape(dy, xhat_), "batch_norm gradient shape mismatch");
    if (trainable_scale_) gamma_.ensure_grad();
    beta_.ensure_grad();
    Tensor dx(dy.shape);
    const double inv_n = 1.0 / count_per_feature_;
    for (int64_t f = 0; f < features_; ++f) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      visit2(dy, xhat_, f, [&](double g, double xh) {
        sum_dy += g;
        sum_dy_xhat += g * xh;
      });
      if (trainable_scale_) gamma_.grad[f] += sum_dy_xhat;
      beta_.grad[f] += sum_dy;
      const double scale = gamma_.values[f] * invstd_[f];
      if (train_mode_) {
        const double mdy = sum_dy * inv_n, mdyx = sum_dy_xhat * inv_n;
        visit3(dy, xhat_, dx, f, [&](double g, double xh, double& out) {
          out = scale * (g - mdy - xh * mdyx);
        });
      } else {
        visit3(dy, xhat_, dx, f, [&](double g, double, double& out) {
          out = scale * g;
        });
      }
    }
    return dx;
  }

  std::vector<Tensor*> params() override {
    if (trainable_scale_) return {&gamma_, &beta_};
    return {&beta_};
  }
  std::vector<Tensor*> state() override { return {&run_mean_, &run_var_}; }
  std::unique_ptr<Layer> clone() const override {
    auto c = std::make_unique<BatchNorm>(features_, trainable_scale_);
    c->gamma_ = gamma_;
    c->beta_ = beta_;
    c->run_mean_ = run_mean_;
    c->run_var_ = run_var_;
    return c;
  }

  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }

 private:
  void group_geometry(const Tensor& x) {
    if (x.rank() == 2) {
      SINEGAN_CHECK(x.dim(1) == features_, "batch_norm feature mismatch");
      spatial_ = 1;
    } else if (x.rank() == 4) {
      SINEGAN_CHECK(x.dim(1) == features_, "batch_norm channel mismatch");
      spatial_ = x.dim(2) * x.dim(3);
    } else {
      throw ShapeError("batch_norm expects rank-2 or rank-4 input");
    }
    batch_ = x.dim(0);
    count_per_feature_ = batch_ * spatial_;
  }

  template <typename F>
  void visit(const Tensor& t, int64_t f, F&& fn) const {
    for (int64_t b = 0; b < batch_; ++b) {
      const double* p = t.values.data() + (b * features_ + f) * spatial_;
      for (int64_t s = 0; s < spatial_; ++s) fn(p[s]);
    }
  }

  // four-lane reduction with a fixed combine order, so results do not depend
  // on buffer alignment
  static void sum_run(const double* p, int64_t n, double& out) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    int64_t s = 0;
    for (; s + 4 <= n; s += 4) {
      a0 += p[s];
      a1 += p[s + 1];
      a2 += p[s + 2];
      a3 += p[s + 3];
    }
    for (; s < n; ++s) a0 += p[s];
    out += ((a0 + a1) + (a2 + a3));
  }
  static void sumsq_dev_run(const double* p, int64_t n, double m, double& out) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    int64_t s = 0;
    for (; s + 4 <= n; s += 4) {
      const double d0 = p[s] - m, d1 = p[s + 1] - m;
      const double d2 = p[s + 2] - m, d3 = p[s + 3] - m;
      a0 += d0 * d0;
      a1 += d1 * d1;
      a2 += d2 * d2;
      a3 += d3 * d3;
    }
    for (; s < n; ++s) {
      const double d = p[s] - m;
      a0 += d * d;
    }
    out += ((a0 + a1) + (a2 + a3));
  }
  template <typename F>
  void visit2(const Tensor& a, const Tensor& b2, int64_t f, F&& fn) const {
    for (int64_t b = 0; b < batch_; ++b) {
      const double* pa = a.values.data() + (b * features_ + f) * spatial_;
      const double* pb = b2.values.data() + (b * features_ + f) * spatial_;
      for (int64_t s = 0; s < spatial_; ++s) fn(pa[s], pb[s]);
    }
  }
  template <typename F>
  void visit3(const Tensor& a, const Tensor& b2, Tensor& c, int64_t f, F&& fn) const {
    for (int64_t b = 0; b < batch_; ++b) {
      const double* pa = a.values.data() + (b * features_ + f) * spatial_;
      const double* pb = b2.values.data() + (b * features_ + f) * spatial_;
      double* pc = c.values.data() + (b * features_ + f) * spatial_;
      for (int64_t s = 0; s < spatial_; ++s) fn(pa[s], pb[s], pc[s]);
    }
  }
  void transform_inplace(Tensor& x, int64_t f, double m, double is, double g,
                         double b) {
    for (int64_t bi = 0; bi < batch_; ++bi) {
      const int64_t off = (bi * features_ + f) * spatial_;
      double* px = x.values.data() + off;
      double* ph = xhat_.values.data() + off;
      for (int64_t s = 0; s < spatial_; ++s) {
        const double h = (px[s] - m) * is;
        ph[s] = h;
        px[s] = g * h + b;
      }
    }
  }

  int64_t features_;
  bool trainable_scale_;
  Tensor gamma_, beta_;
  Tensor run_mean_, run_var_;
  Tensor xhat_;
  std::vector<double> mean_, invstd_;
  int64_t batch_ = 0, spatial_ = 1, count_per_feature_ = 0;
  bool train_mode_ = true;
  bool has_state_ = false;
};

// ---------------------------------------------------------------------------

// 2x2 max pooling with stride 2; odd trailing rows/columns form their own
// (clipped) cell, so output dims are ceil(h/2) x ceil(w/2). Ties resolve to
// the first maximum in row-major order.
class MaxPool : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::max_pool; }
  std::vector<uint32_t> hyper() const override { return {}; }

  Tensor forward(Tensor x, Mode, bool) override {
    SINEGAN_CHECK(x.rank() == 4, "max_pool expects [b, c, h, w]");
    in_shape_ = x.shape;
    const int64_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int64_t ho = (h + 1) / 2, wo = (w + 1) / 2;
    Tensor y({b, c, ho, wo});
    argmax_.assign(y.values.size(), 0);
    for (int64_t n = 0; n < b * c; ++n) {
      const double* plane = x.values.data() + n * h * w;
      double* out = y.values.data() + n * ho * wo;
      int64_t* arg = argmax_.data() + n * ho * wo;
      for (int64_t i = 0; i < ho; ++i)
        for (int64_t j = 0; j < wo; ++j) {
          double best = -std::numeric_limits<double>::infinity();
          int64_t best_idx = -1;
          for (int64_t di = 0; di < 2; ++di)
            for (int64_t dj = 0; dj < 2; ++dj) {
              const int64_t si = 2 * i + di, sj = 2 * j + dj;
              if (si >= h || sj >= w) continue;
              const double v = plane[si * w + sj];
              if (v > best) {
                best = v;
                best_idx = si * w + sj;
              }
            }
          out[i * wo + j] = best;
          arg[i * wo + j] = n * h * w + best_idx;
        }
    }
    has_state_ = true;
    return y;
  }

  Tensor backward(const Tensor& dy) override {
    if (!has_state_) throw StateError("backward without retained forward state");
    SINEGAN_CHECK(dy.values.size() == argmax_.size(), "max_pool gradient shape mismatch");
    Tensor dx(in_shape_);
    for (size_t i = 0; i < argmax_.size(); ++i)
      dx.values[static_cast<size_t>(argmax_[i])] += dy.values[i];
    return dx;
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool>(); }

 private:
  std::vector<int64_t> in_shape_;
  std::vector<int64_t> argmax_;
  bool has_state_ = false;
};

// ---------------------------------------------------------------------------

class Activation : public Layer {
 public:
  explicit Activation(ActKind act) : act_(act) {}

  LayerKind kind() const override { return LayerKind::activation; }
  std::vector<uint32_t> hyper() const override {
    return {static_cast<uint32_t>(act_)};
  }

  Tensor forward(Tensor x, Mode, bool) override {
    // in-place transform; retain only what the derivative needs
    // (the result for relu/tanh, the pre-activation for cosine)
    switch (act_) {
      case ActKind::relu:
        for (auto& v : x.values) v = v > 0.0 ? v : 0.0;
        keep_copy(x);
        break;
      case ActKind::tanh:
        for (auto& v : x.values) v = std::tanh(v);
        keep_copy(x);
        break;
      case ActKind::cosine:
        keep_copy(x);
        for (auto& v : x.values) v = std::cos(v);
        break;
      case ActKind::identity:
        retained_.shape = x.shape;
        break;
    }
    has_state_ = true;
    return x;
  }

  Tensor backward(const Tensor& dy) override {
    if (!has_state_) throw StateError("backward without retained forward state");
    SINEGAN_CHECK(dy.shape == retained_.shape, "activation gradient shape mismatch");
    Tensor dx(dy.shape);
    switch (act_) {
      case ActKind::relu:
        for (size_t i = 0; i < dy.values.size(); ++i)
          dx.values[i] = retained_.values[i] > 0 ? dy.values[i] : 0.0;
        break;
      case ActKind::tanh:
        for (size_t i = 0; i < dy.values.size(); ++i) {
          const double t = retained_.values[i];
          dx.values[i] = dy.values[i] * (1.0 - t * t);
        }
        break;
      case ActKind::cosine:
        for (size_t i = 0; i < dy.values.size(); ++i)
          dx.values[i] = -dy.values[i] * std::sin(retained_.values[i]);
        break;
      case ActKind::identity:
        dx.values = dy.values;
        break;
    }
    return dx;
  }

  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<Activation>(act_);
  }

  ActKind act() const { return act_; }

 private:
  void keep_copy(const Tensor& t) {
    retained_.shape = t.shape;
    retained_.values.resize(t.values.size());
    std::copy(t.values.begin(), t.values.end(), retained_.values.begin());
  }

  ActKind act_;
  Tensor retained_;
  bool has_state_ = false;
};

// ---------------------------------------------------------------------------

class Network {
 public:
  Network() = default;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;
  Network(const Network& other) { *this = other; }
  Network& operator=(const Network& other) {
    if (this == &other) return *this;
    layers_.clear();
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
    mode_ = other.mode_;
    update_running_ = other.update_running_;
    has_forward_ = false;
    return *this;
  }

  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }
  void add_layer(std::unique_ptr<Layer> l) { layers_.push_back(std::move(l)); }

  size_t num_layers() const { return layers_.size(); }
  Layer& layer(size_t i) { return *layers_.at(i); }
  const Layer& layer(size_t i) const { return *layers_.at(i); }

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }
  void set_update_running(bool b) { update_running_ = b; }
  bool update_running() const { return update_running_; }

  Tensor forward(const Tensor& x) {
    Tensor cur = x;
    for (auto& l : layers_) cur = l->forward(std::move(cur), mode_, update_running_);
    has_forward_ = true;
    return cur;
  }

  Tensor backward(const Tensor& dy) {
    if (!has_forward_) throw StateError("backward without retained forward state");
    Tensor cur = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      cur = (*it)->backward(cur);
    return cur;
  }

  std::vector<Tensor*> params() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
      for (Tensor* t : l->params()) out.push_back(t);
    return out;
  }
  std::vector<Tensor*> state() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
      for (Tensor* t : l->state()) out.push_back(t);
    return out;
  }

  int64_t num_params() {
    int64_t n = 0;
    for (Tensor* t : params()) n += t->numel();
    return n;
  }

  void ensure_grads() {
    for (Tensor* t : params()) t->ensure_grad();
  }
  void zero_grads() {
    for (Tensor* t : params()) t->zero_grad();
  }

  // Connection weights and biases drawn from N(0, std^2); batch-norm scale
  // and shift keep identity init (gamma 1, beta 0), without which the
  // normalization stages throttle gradient flow to nothing.
  void init_normal(Rng& rng, double std) {
    for (auto& l : layers_) {
      if (l->kind() == LayerKind::batch_norm) {
        auto& bn = static_cast<BatchNorm&>(*l);
        std::fill(bn.gamma().values.begin(), bn.gamma().values.end(), 1.0);
        std::fill(bn.beta().values.begin(), bn.beta().values.end(), 0.0);
      } else {
        for (Tensor* t : l->params()) rng.fill_normal(t->values, 0.0, std);
      }
    }
  }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  Mode mode_ = Mode::train;
  bool update_running_ = true;
  bool has_forward_ = false;
};

inline std::unique_ptr<Layer> make_layer(LayerKind kind,
                                         const std::vector<uint32_t>& hyper) {
  switch (kind) {
    case LayerKind::fully_connected:
      SINEGAN_CHECK(hyper.size() == 3, "bad fully_connected hyper");
      return std::make_unique<FullyConnected>(hyper[0], hyper[1], hyper[2] != 0);
    case LayerKind::conv2d:
      SINEGAN_CHECK(hyper.size() == 2, "bad conv2d hyper");
      return std::make_unique<Conv2d>(hyper[0], hyper[1]);
    case LayerKind::batch_norm:
      SINEGAN_CHECK(hyper.size() == 2, "bad batch_norm hyper");
      return std::make_unique<BatchNorm>(hyper[0], hyper[1] != 0);
    case LayerKind::max_pool:
      return std::make_unique<MaxPool>();
    case LayerKind::activation:
      SINEGAN_CHECK(hyper.size() == 1 && hyper[0] <= 3, "bad activation hyper");
      return std::make_unique<Activation>(static_cast<ActKind>(hyper[0]));
  }
  throw FormatError("unknown layer kind");
}

// ---------------------------------------------------------------------------
// Gradient checking: analytic backward against central finite differences.

struct LossFn {
  virtual ~LossFn() = default;
  virtual double value(const Tensor& y) const = 0;
  virtual Tensor grad(const Tensor& y) const = 0;
};

// 0.5 * sum((y - target)^2); quadratic, so central differences are exact up
// to rounding.
struct QuadraticLoss : LossFn {
  explicit QuadraticLoss(Tensor target) : target_(std::move(target)) {}
  double value(const Tensor& y) const override {
    double acc = 0.0;
    for (size_t i = 0; i < y.values.size(); ++i) {
      const double d = y.values[i] - target_.values[i];
      acc += 0.5 * d * d;
    }
    return acc;
  }
  Tensor grad(const Tensor& y) const override {
    Tensor g(y.shape);
    for (size_t i = 0; i < y.values.size(); ++i)
      g.values[i] = y.values[i] - target_.values[i];
    return g;
  }
  Tensor target_;
};

// sum(c_i * tanh(y_i)): a generic curved scalar probe.
struct TanhDotLoss : LossFn {
  explicit TanhDotLoss(std::vector<double> c) : c_(std::move(c)) {}
  double value(const Tensor& y) const override {
    double acc = 0.0;
    for (size_t i = 0; i < y.values.size(); ++i)
      acc += c_[i % c_.size()] * std::tanh(y.values[i]);
    return acc;
  }
  Tensor grad(const Tensor& y) const override {
    Tensor g(y.shape);
    for (size_t i = 0; i < y.values.size(); ++i) {
      const double t = std::tanh(y.values[i]);
      g.values[i] = c_[i % c_.size()] * (1.0 - t * t);
    }
    return g;
  }
  std::vector<double> c_;
};

struct GradCheckOptions {
  // Cap on the number of finite-difference coordinates per parameter tensor;
  // 0 means check every coordinate. Large networks are spot-checked.
  int64_t max_coords_per_tensor = 0;
  uint64_t sample_seed = 7;
  // Gradients whose analytic and numeric values both sit below this floor
  // compare as zero. Central differences cannot resolve anything below the
  // rounding noise of the loss (~eps_machine * |loss| / step), and some
  // parameters have exactly-zero gradients by construction (a bias feeding
  // straight into batch normalization), where the finite difference returns
  // pure float dust.
  double zero_floor = 1e-8;
};

namespace nndet {

inline double rel_err(double a, double n, double zero_floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), zero_floor});
}

}  // namespace nndet

inline double grad_check(Network& net, const Tensor& input, const LossFn& loss,
                         double eps, const GradCheckOptions& opt = {}) {
  SINEGAN_CHECK(eps > 0, "eps must be positive");
  auto params = net.params();
  if (params.empty()) return 0.0;

  const bool saved_update = net.update_running();
  net.set_update_running(false);

  net.ensure_grads();
  net.zero_grads();
  Tensor y = net.forward(input);
  const double base = loss.value(y);
  if (!is_finite(base)) throw StateError("non-finite loss in grad_check");
  net.backward(loss.grad(y));

  double worst = 0.0;
  Rng rng(opt.sample_seed);
  for (Tensor* p : params) {
    const int64_t n = p->numel();
    std::vector<int64_t> coords;
    if (opt.max_coords_per_tensor <= 0 || n <= opt.max_coords_per_tensor) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      for (int64_t i = 0; i < opt.max_coords_per_tensor; ++i)
        coords.push_back(static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n))));
    }
    for (int64_t c : coords) {
      const double saved = p->values[static_cast<size_t>(c)];
      p->values[static_cast<size_t>(c)] = saved + eps;
      const double up = loss.value(net.forward(input));
      p->values[static_cast<size_t>(c)] = saved - eps;
      const double dn = loss.value(net.forward(input));
      p->values[static_cast<size_t>(c)] = saved;
      if (!is_finite(up) || !is_finite(dn))
        throw StateError("non-finite loss in grad_check");
      const double numeric = (up - dn) / (2.0 * eps);
      worst = std::max(worst, nndet::rel_err(p->grad[static_cast<size_t>(c)], numeric, opt.zero_floor));
    }
  }
  // Restore retained state to match the unperturbed parameters.
  net.forward(input);
  net.set_update_running(saved_update);
  return worst;
}

// Same check for the gradient with respect to the network input.
inline double grad_check_input(Network& net, const Tensor& input,
                               const LossFn& loss, double eps,
                               const GradCheckOptions& opt = {}) {
  SINEGAN_CHECK(eps > 0, "eps must be positive");
  const bool saved_update = net.update_running();
  net.set_update_running(false);
  net.ensure_grads();
  net.zero_grads();
  Tensor y = net.forward(input);
  if (!is_finite(loss.value(y))) throw StateError("non-finite loss in grad_check");
  Tensor dx = net.backward(loss.grad(y));

  Tensor probe = input;
  const int64_t n = probe.numel();
  std::vector<int64_t> coords;
  Rng rng(opt.sample_seed);
  if (opt.max_coords_per_tensor <= 0 || n <= opt.max_coords_per_tensor) {
    coords.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
  } else {
    for (int64_t i = 0; i < opt.max_coords_per_tensor; ++i)
      coords.push_back(static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n))));
  }
  double worst = 0.0;
  for (int64_t c : coords) {
    const double saved = probe.values[static_cast<size_t>(c)];
    probe.values[static_cast<size_t>(c)] = saved + eps;
    const double up = loss.value(net.forward(probe));
    probe.values[static_cast<size_t>(c)] = saved - eps;
    const double dn = loss.value(net.forward(probe));
    probe.values[static_cast<size_t>(c)] = saved;
    const double numeric = (up - dn) / (2.0 * eps);
    worst = std::max(worst, nndet::rel_err(dx.values[static_cast<size_t>(c)], numeric, opt.zero_floor));
  }
  net.forward(input);
  net.set_update_running(saved_update);
  return worst;
}

}  // namespace sinegan
