#pragma once

// Minimal CPU layer library: just what the mask network and the re-ID
// network need. Layers follow the forward/backward convention: forward
// caches whatever backward requires, backward returns the input gradient
// and accumulates parameter gradients. GEMMs go through Eigen; the
// per-sample loops are OpenMP-parallel with static schedules so results
// do not depend on scheduling.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <omp.h>
#include <stdexcept>
#include <string>
#include <vector>

#include "spanreid/rng.hpp"
#include "spanreid/tensor.hpp"

namespace spanreid::nn {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapM = Eigen::Map<const MatRM<T>>;

template <typename T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;

  void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
};

template <typename T>
void he_normal_init(Tensor<T>& t, int fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / fan_in);
  for (size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal(0.0, stddev));
}

// ---------------------------------------------------------------------------
// im2col / col2im

template <typename T>
void im2col(const T* x, int ch, int h, int w, int k, int stride, int pad,
            int out_h, int out_w, T* col) {
  for (int c = 0; c < ch; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col + ((static_cast<size_t>(c) * k + ky) * k + kx) *
                           (static_cast<size_t>(out_h) * out_w);
        for (int oy = 0; oy < out_h; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) {
            for (int ox = 0; ox < out_w; ++ox) *dst++ = T(0);
            continue;
          }
          const T* src = x + (static_cast<size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < out_w; ++ox) {
            int ix = ox * stride + kx - pad;
            *dst++ = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int ch, int h, int w, int k, int stride, int pad,
            int out_h, int out_w, T* x) {
  std::fill(x, x + static_cast<size_t>(ch) * h * w, T(0));
  for (int c = 0; c < ch; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + ((static_cast<size_t>(c) * k + ky) * k + kx) *
                                 (static_cast<size_t>(out_h) * out_w);
        for (int oy = 0; oy < out_h; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) {
            src += out_w;
            continue;
          }
          T* dst = x + (static_cast<size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < out_w; ++ox) {
            int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) dst[ix] += *src;
            ++src;
          }
        }
      }
    }
  }
}

namespace detail {

// Ordered reduction of per-thread gradient partials; keeps accumulation
// independent of which thread finished first.
template <typename T>
void reduce_partials(std::vector<AlignedVector<T>>& partials, Tensor<T>& grad) {
  for (const auto& part : partials) {
    if (part.empty()) continue;
    for (size_t i = 0; i < grad.size(); ++i) grad[i] += part[i];
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
class Conv2d {
 public:
  Conv2d(int in_ch, int out_ch, int ksize, int stride, int pad, bool bias = true)
      : in_ch_(in_ch), out_ch_(out_ch), k_(ksize), stride_(stride), pad_(pad),
        has_bias_(bias) {
    weight_.value = Tensor<T>(out_ch, in_ch * ksize * ksize, 1, 1);
    weight_.grad = Tensor<T>(out_ch, in_ch * ksize * ksize, 1, 1);
    if (has_bias_) {
      bias_.value = Tensor<T>(1, out_ch, 1, 1);
      bias_.grad = Tensor<T>(1, out_ch, 1, 1);
    }
  }

  void init(Rng& rng) { he_normal_init(weight_.value, in_ch_ * k_ * k_, rng); }

  Tensor<T> forward(const Tensor<T>& x, bool /*train*/ = true) {
    if (x.c() != in_ch_) throw std::invalid_argument("Conv2d: channel mismatch");
    x_ = x;
    const int oh = (x.h() + 2 * pad_ - k_) / stride_ + 1;
    const int ow = (x.w() + 2 * pad_ - k_) / stride_ + 1;
    Tensor<T> y(x.n(), out_ch_, oh, ow);
    const int ck2 = in_ch_ * k_ * k_;
    CMapM<T> wm(weight_.value.data(), out_ch_, ck2);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < x.n(); ++s) {
      AlignedVector<T> col(static_cast<size_t>(ck2) * oh * ow);
      im2col(x.sample(s), in_ch_, x.h(), x.w(), k_, stride_, pad_, oh, ow, col.data());
      CMapM<T> cm(col.data(), ck2, oh * ow);
      MapM<T> ym(y.sample(s), out_ch_, oh * ow);
      ym.noalias() = wm * cm;
      if (has_bias_) {
        for (int c = 0; c < out_ch_; ++c) ym.row(c).array() += bias_.value[c];
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int oh = gy.h(), ow = gy.w();
    const int ck2 = in_ch_ * k_ * k_;
    Tensor<T> gx(x_.n(), in_ch_, x_.h(), x_.w());
    CMapM<T> wm(weight_.value.data(), out_ch_, ck2);
    const int nthreads = omp_get_max_threads();
    std::vector<AlignedVector<T>> wpart(nthreads), bpart(nthreads);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < x_.n(); ++s) {
      const int tid = omp_get_thread_num();
      if (wpart[tid].empty()) {
        wpart[tid].assign(weight_.value.size(), T(0));
        if (has_bias_) bpart[tid].assign(out_ch_, T(0));
      }
      AlignedVector<T> col(static_cast<size_t>(ck2) * oh * ow);
      im2col(x_.sample(s), in_ch_, x_.h(), x_.w(), k_, stride_, pad_, oh, ow, col.data());
      CMapM<T> cm(col.data(), ck2, oh * ow);
      CMapM<T> gym(gy.sample(s), out_ch_, oh * ow);
      MapM<T> wgm(wpart[tid].data(), out_ch_, ck2);
      wgm.noalias() += gym * cm.transpose();
      if (has_bias_) {
        for (int c = 0; c < out_ch_; ++c) bpart[tid][c] += gym.row(c).sum();
      }
      AlignedVector<T> gcol(static_cast<size_t>(ck2) * oh * ow);
      MapM<T> gcm(gcol.data(), ck2, oh * ow);
      gcm.noalias() = wm.transpose() * gym;
      col2im(gcol.data(), in_ch_, x_.h(), x_.w(), k_, stride_, pad_, oh, ow, gx.sample(s));
    }
    detail::reduce_partials(wpart, weight_.grad);
    if (has_bias_) detail::reduce_partials(bpart, bias_.grad);
    return gx;
  }

  void collect_params(std::vector<Param<T>*>& out) {
    out.push_back(&weight_);
    if (has_bias_) out.push_back(&bias_);
  }
  void collect_state(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
    out.push_back({prefix + ".weight", &weight_.value});
    if (has_bias_) out.push_back({prefix + ".bias", &bias_.value});
  }

 private:
  int in_ch_, out_ch_, k_, stride_, pad_;
  bool has_bias_;
  Param<T> weight_, bias_;
  Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// ConvTranspose2d (decoder upsampling)

template <typename T>
class ConvTranspose2d {
 public:
  ConvTranspose2d(int in_ch, int out_ch, int ksize, int stride)
      : in_ch_(in_ch), out_ch_(out_ch), k_(ksize), stride_(stride) {
    weight_.value = Tensor<T>(in_ch, out_ch * ksize * ksize, 1, 1);
    weight_.grad = Tensor<T>(in_ch, out_ch * ksize * ksize, 1, 1);
    bias_.value = Tensor<T>(1, out_ch, 1, 1);
    bias_.grad = Tensor<T>(1, out_ch, 1, 1);
  }

  void init(Rng& rng) { he_normal_init(weight_.value, in_ch_, rng); }

  Tensor<T> forward(const Tensor<T>& x, bool /*train*/ = true) {
    if (x.c() != in_ch_) throw std::invalid_argument("ConvTranspose2d: channel mismatch");
    x_ = x;
    const int oh = (x.h() - 1) * stride_ + k_;
    const int ow = (x.w() - 1) * stride_ + k_;
    Tensor<T> y(x.n(), out_ch_, oh, ow);
    const int ck2 = out_ch_ * k_ * k_;
    CMapM<T> wm(weight_.value.data(), in_ch_, ck2);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < x.n(); ++s) {
      CMapM<T> xm(x.sample(s), in_ch_, x.h() * x.w());
      AlignedVector<T> col(static_cast<size_t>(ck2) * x.h() * x.w());
      MapM<T> cm(col.data(), ck2, x.h() * x.w());
      cm.noalias() = wm.transpose() * xm;
      // col2im over the *output* image: input positions play the role of
      // conv output positions.
      col2im(col.data(), out_ch_, oh, ow, k_, stride_, 0, x.h(), x.w(), y.sample(s));
      MapM<T> ym(y.sample(s), out_ch_, oh * ow);
      for (int c = 0; c < out_ch_; ++c) ym.row(c).array() += bias_.value[c];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int ih = x_.h(), iw = x_.w();
    const int ck2 = out_ch_ * k_ * k_;
    Tensor<T> gx(x_.n(), in_ch_, ih, iw);
    CMapM<T> wm(weight_.value.data(), in_ch_, ck2);
    const int nthreads = omp_get_max_threads();
    std::vector<AlignedVector<T>> wpart(nthreads), bpart(nthreads);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < x_.n(); ++s) {
      const int tid = omp_get_thread_num();
      if (wpart[tid].empty()) {
        wpart[tid].assign(weight_.value.size(), T(0));
        bpart[tid].assign(out_ch_, T(0));
      }
      AlignedVector<T> gcol(static_cast<size_t>(ck2) * ih * iw);
      im2col(gy.sample(s), out_ch_, gy.h(), gy.w(), k_, stride_, 0, ih, iw, gcol.data());
      CMapM<T> gcm(gcol.data(), ck2, ih * iw);
      CMapM<T> xm(x_.sample(s), in_ch_, ih * iw);
      MapM<T> gxm(gx.sample(s), in_ch_, ih * iw);
      gxm.noalias() = wm * gcm;
      MapM<T> wgm(wpart[tid].data(), in_ch_, ck2);
      wgm.noalias() += xm * gcm.transpose();
      CMapM<T> gym(gy.sample(s), out_ch_, gy.h() * gy.w());
      for (int c = 0; c < out_ch_; ++c) bpart[tid][c] += gym.row(c).sum();
    }
    detail::reduce_partials(wpart, weight_.grad);
    detail::reduce_partials(bpart, bias_.grad);
    return gx;
  }

  void collect_params(std::vector<Param<T>*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  void collect_state(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
    out.push_back({prefix + ".weight", &weight_.value});
    out.push_back({prefix + ".bias", &bias_.value});
  }

 private:
  int in_ch_, out_ch_, k_, stride_;
  Param<T> weight_, bias_;
  Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// BatchNorm (2d maps; use h=w=1 tensors for the 1d case)

template <typename T>
class BatchNorm2d {
 public:
  explicit BatchNorm2d(int ch, double momentum = 0.1, double eps = 1e-5)
      : ch_(ch), momentum_(momentum), eps_(eps) {
    gamma_.value = Tensor<T>(1, ch, 1, 1);
    gamma_.grad = Tensor<T>(1, ch, 1, 1);
    beta_.value = Tensor<T>(1, ch, 1, 1);
    beta_.grad = Tensor<T>(1, ch, 1, 1);
    gamma_.value.fill(T(1));
    running_mean_ = Tensor<T>(1, ch, 1, 1);
    running_var_ = Tensor<T>(1, ch, 1, 1);
    running_var_.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    if (x.c() != ch_) throw std::invalid_argument("BatchNorm2d: channel mismatch");
    const int plane = x.h() * x.w();
    const size_t nhw = static_cast<size_t>(x.n()) * plane;
    train_mode_ = train;
    Tensor<T> y(x.n(), x.c(), x.h(), x.w());
    if (train) {
      xhat_ = Tensor<T>(x.n(), x.c(), x.h(), x.w());
      invstd_.assign(ch_, 0.0);
      for (int c = 0; c < ch_; ++c) {
        double sum = 0.0, sq = 0.0;
        for (int s = 0; s < x.n(); ++s) {
          const T* p = x.sample(s) + static_cast<size_t>(c) * plane;
          for (int i = 0; i < plane; ++i) {
            sum += p[i];
            sq += double(p[i]) * p[i];
          }
        }
        const double mean = sum / double(nhw);
        const double var = std::max(0.0, sq / double(nhw) - mean * mean);
        const double invstd = 1.0 / std::sqrt(var + eps_);
        invstd_[c] = invstd;
        const double g = gamma_.value[c], b = beta_.value[c];
        for (int s = 0; s < x.n(); ++s) {
          const T* p = x.sample(s) + static_cast<size_t>(c) * plane;
          T* xh = xhat_.sample(s) + static_cast<size_t>(c) * plane;
          T* py = y.sample(s) + static_cast<size_t>(c) * plane;
          for (int i = 0; i < plane; ++i) {
            const double v = (double(p[i]) - mean) * invstd;
            xh[i] = static_cast<T>(v);
            py[i] = static_cast<T>(g * v + b);
          }
        }
        const double unbias = nhw > 1 ? double(nhw) / double(nhw - 1) : 1.0;
        running_mean_[c] = static_cast<T>((1.0 - momentum_) * running_mean_[c] + momentum_ * mean);
        running_var_[c] = static_cast<T>((1.0 - momentum_) * running_var_[c] + momentum_ * var * unbias);
      }
    } else {
      for (int c = 0; c < ch_; ++c) {
        const double invstd = 1.0 / std::sqrt(double(running_var_[c]) + eps_);
        const double mean = running_mean_[c];
        const double g = gamma_.value[c], b = beta_.value[c];
        for (int s = 0; s < x.n(); ++s) {
          const T* p = x.sample(s) + static_cast<size_t>(c) * plane;
          T* py = y.sample(s) + static_cast<size_t>(c) * plane;
          for (int i = 0; i < plane; ++i) {
            py[i] = static_cast<T>(g * (double(p[i]) - mean) * invstd + b);
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    if (!train_mode_) throw std::logic_error("BatchNorm2d: backward in eval mode");
    const int plane = gy.h() * gy.w();
    const size_t nhw = static_cast<size_t>(gy.n()) * plane;
    Tensor<T> gx(gy.n(), gy.c(), gy.h(), gy.w());
    for (int c = 0; c < ch_; ++c) {
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (int s = 0; s < gy.n(); ++s) {
        const T* pg = gy.sample(s) + static_cast<size_t>(c) * plane;
        const T* xh = xhat_.sample(s) + static_cast<size_t>(c) * plane;
        for (int i = 0; i < plane; ++i) {
          sum_gy += pg[i];
          sum_gy_xhat += double(pg[i]) * xh[i];
        }
      }
      gamma_.grad[c] += static_cast<T>(sum_gy_xhat);
      beta_.grad[c] += static_cast<T>(sum_gy);
      const double scale = double(gamma_.value[c]) * invstd_[c] / double(nhw);
      for (int s = 0; s < gy.n(); ++s) {
        const T* pg = gy.sample(s) + static_cast<size_t>(c) * plane;
        const T* xh = xhat_.sample(s) + static_cast<size_t>(c) * plane;
        T* px = gx.sample(s) + static_cast<size_t>(c) * plane;
        for (int i = 0; i < plane; ++i) {
          px[i] = static_cast<T>(scale * (double(nhw) * pg[i] - sum_gy - double(xh[i]) * sum_gy_xhat));
        }
      }
    }
    return gx;
  }

  void collect_params(std::vector<Param<T>*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void collect_state(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma_.value});
    out.push_back({prefix + ".beta", &beta_.value});
    out.push_back({prefix + ".running_mean", &running_mean_});
    out.push_back({prefix + ".running_var", &running_var_});
  }

 private:
  int ch_;
  double momentum_, eps_;
  Param<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<double> invstd_;
  bool train_mode_ = false;
};

// ---------------------------------------------------------------------------
// Activations

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool /*train*/ = true) {
    mask_.assign(x.size(), 0);
    Tensor<T> y(x.n(), x.c(), x.h(), x.w());
    for (size_t i = 0; i < x.size(); ++i) {
      if (x[i] > T(0)) {
        y[i] = x[i];
        mask_[i] = 1;
      }
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.n(), gy.c(), gy.h(), gy.w());
    for (size_t i = 0; i < gy.size(); ++i) gx[i] = mask_[i] ? gy[i] : T(0);
    return gx;
  }

 private:
  std::vector<uint8_t> mask_;
};

template <typename T>
class Sigmoid {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool /*train*/ = true) {
    y_ = Tensor<T>(x.n(), x.c(), x.h(), x.w());
    for (size_t i = 0; i < x.size(); ++i) y_[i] = T(1) / (T(1) + std::exp(-x[i]));
    return y_;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.n(), gy.c(), gy.h(), gy.w());
    for (size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * y_[i] * (T(1) - y_[i]);
    return gx;
  }

 private:
  Tensor<T> y_;
};

// ---------------------------------------------------------------------------
// Linear (flattens each sample)

template <typename T>
class Linear {
 public:
  Linear(int in_dim, int out_dim, bool bias = true)
      : in_(in_dim), out_(out_dim), has_bias_(bias) {
    weight_.value = Tensor<T>(out_dim, in_dim, 1, 1);
    weight_.grad = Tensor<T>(out_dim, in_dim, 1, 1);
    if (has_bias_) {
      bias_.value = Tensor<T>(1, out_dim, 1, 1);
      bias_.grad = Tensor<T>(1, out_dim, 1, 1);
    }
  }

  void init(Rng& rng) { he_normal_init(weight_.value, in_, rng); }

  Tensor<T> forward(const Tensor<T>& x, bool /*train*/ = true) {
    if (static_cast<int>(x.sample_size()) != in_)
      throw std::invalid_argument("Linear: dimension mismatch");
    x_ = x;
    Tensor<T> y(x.n(), out_, 1, 1);
    CMapM<T> xm(x.data(), x.n(), in_);
    CMapM<T> wm(weight_.value.data(), out_, in_);
    MapM<T> ym(y.data(), x.n(), out_);
    ym.noalias() = xm * wm.transpose();
    if (has_bias_) {
      for (int s = 0; s < x.n(); ++s) {
        for (int c = 0; c < out_; ++c) ym(s, c) += bias_.value[c];
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(x_.n(), x_.c(), x_.h(), x_.w());
    CMapM<T> gym(gy.data(), gy.n(), out_);
    CMapM<T> xm(x_.data(), x_.n(), in_);
    CMapM<T> wm(weight_.value.data(), out_, in_);
    MapM<T> wgm(weight_.grad.data(), out_, in_);
    wgm.noalias() += gym.transpose() * xm;
    if (has_bias_) {
      for (int c = 0; c < out_; ++c) bias_.grad[c] += gym.col(c).sum();
    }
    MapM<T> gxm(gx.data(), x_.n(), in_);
    gxm.noalias() = gym * wm;
    return gx;
  }

  void collect_params(std::vector<Param<T>*>& out) {
    out.push_back(&weight_);
    if (has_bias_) out.push_back(&bias_);
  }
  void collect_state(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
    out.push_back({prefix + ".weight", &weight_.value});
    if (has_bias_) out.push_back({prefix + ".bias", &bias_.value});
  }

 private:
  int in_, out_;
  bool has_bias_;
  Param<T> weight_, bias_;
  Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// Global average pooling: (N,C,H,W) -> (N,C,1,1)

template <typename T>
class GlobalAvgPool {
 public:
  Tensor<T> forward(const Tensor<T>& x, bool /*train*/ = true) {
    h_ = x.h();
    w_ = x.w();
    Tensor<T> y(x.n(), x.c(), 1, 1);
    const int plane = h_ * w_;
    for (int s = 0; s < x.n(); ++s) {
      for (int c = 0; c < x.c(); ++c) {
        const T* p = x.sample(s) + static_cast<size_t>(c) * plane;
        double acc = 0.0;
        for (int i = 0; i < plane; ++i) acc += p[i];
        y.at(s, c, 0, 0) = static_cast<T>(acc / plane);
      }
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.n(), gy.c(), h_, w_);
    const int plane = h_ * w_;
    for (int s = 0; s < gy.n(); ++s) {
      for (int c = 0; c < gy.c(); ++c) {
        const T g = gy.at(s, c, 0, 0) / static_cast<T>(plane);
        T* p = gx.sample(s) + static_cast<size_t>(c) * plane;
        for (int i = 0; i < plane; ++i) p[i] = g;
      }
    }
    return gx;
  }

 private:
  int h_ = 0, w_ = 0;
};

// Mean-pool by an integer factor per axis. Used to bring attention masks
// down to feature-map resolution.
template <typename T>
Tensor<T> avg_downsample(const Tensor<T>& x, int fy, int fx) {
  if (fy <= 0 || fx <= 0 || x.h() % fy != 0 || x.w() % fx != 0)
    throw std::invalid_argument("avg_downsample: non-integer downsample ratio");
  const int oh = x.h() / fy, ow = x.w() / fx;
  Tensor<T> y(x.n(), x.c(), oh, ow);
  for (int s = 0; s < x.n(); ++s) {
    for (int c = 0; c < x.c(); ++c) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (int dy = 0; dy < fy; ++dy) {
            for (int dx = 0; dx < fx; ++dx) {
              acc += x.at(s, c, oy * fy + dy, ox * fx + dx);
            }
          }
          y.at(s, c, oy, ox) = static_cast<T>(acc / (fy * fx));
        }
      }
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// Composite blocks

template <typename T>
class ConvBnRelu {
 public:
  ConvBnRelu(int in_ch, int out_ch, int ksize, int stride, int pad)
      : conv_(in_ch, out_ch, ksize, stride, pad, /*bias=*/false), bn_(out_ch) {}

  void init(Rng& rng) { conv_.init(rng); }
  Tensor<T> forward(const Tensor<T>& x, bool train) {
    return relu_.forward(bn_.forward(conv_.forward(x, train), train), train);
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    return conv_.backward(bn_.backward(relu_.backward(gy)));
  }
  void collect_params(std::vector<Param<T>*>& out) {
    conv_.collect_params(out);
    bn_.collect_params(out);
  }
  void collect_state(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
    conv_.collect_state(prefix + ".conv", out);
    bn_.collect_state(prefix + ".bn", out);
  }

 private:
  Conv2d<T> conv_;
  BatchNorm2d<T> bn_;
  ReLU<T> relu_;
};

template <typename T>
class ResidualBlock {
 public:
  explicit ResidualBlock(int ch)
      : conv1_(ch, ch, 3, 1, 1, false), bn1_(ch), conv2_(ch, ch, 3, 1, 1, false), bn2_(ch) {}

  void init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    Tensor<T> h = relu1_.forward(bn1_.forward(conv1_.forward(x, train), train), train);
    Tensor<T> h2 = bn2_.forward(conv2_.forward(h, train), train);
    for (size_t i = 0; i < h2.size(); ++i) h2[i] += x[i];
    return relu2_.forward(h2, train);
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = relu2_.backward(gy);
    Tensor<T> gpath = conv1_.backward(bn1_.backward(relu1_.backward(
        conv2_.backward(bn2_.backward(g)))));
    for (size_t i = 0; i < gpath.size(); ++i) gpath[i] += g[i];
    return gpath;
  }

  void collect_params(std::vector<Param<T>*>& out) {
    conv1_.collect_params(out);
    bn1_.collect_params(out);
    conv2_.collect_params(out);
    bn2_.collect_params(out);
  }
  void collect_state(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
    conv1_.collect_state(prefix + ".conv1", out);
    bn1_.collect_state(prefix + ".bn1", out);
    conv2_.collect_state(prefix + ".conv2", out);
    bn2_.collect_state(prefix + ".bn2", out);
  }

 private:
  Conv2d<T> conv1_;
  BatchNorm2d<T> bn1_;
  ReLU<T> relu1_;
  Conv2d<T> conv2_;
  BatchNorm2d<T> bn2_;
  ReLU<T> relu2_;
};

// Four-stage residual encoder; downsamples by 8 (strides 2,2,2,1).
template <typename T>
class ResEncoder {
 public:
  ResEncoder(int in_ch, const std::vector<int>& widths) {
    if (widths.size() != 4) throw std::invalid_argument("ResEncoder: need 4 stage widths");
    static constexpr int kStrides[4] = {2, 2, 2, 1};
    int ch = in_ch;
    for (int i = 0; i < 4; ++i) {
      stages_.emplace_back(ch, widths[i], 3, kStrides[i], 1);
      blocks_.emplace_back(widths[i]);
      ch = widths[i];
    }
    out_ch_ = ch;
  }

  static constexpr int downsample_factor() { return 8; }
  int out_channels() const { return out_ch_; }

  void init(Rng& rng) {
    for (auto& s : stages_) s.init(rng);
    for (auto& b : blocks_) b.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    Tensor<T> h = x;
    for (size_t i = 0; i < stages_.size(); ++i) {
      h = stages_[i].forward(h, train);
      h = blocks_[i].forward(h, train);
    }
    return h;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = gy;
    for (int i = static_cast<int>(stages_.size()) - 1; i >= 0; --i) {
      g = blocks_[i].backward(g);
      g = stages_[i].backward(g);
    }
    return g;
  }

  void collect_params(std::vector<Param<T>*>& out) {
    for (size_t i = 0; i < stages_.size(); ++i) {
      stages_[i].collect_params(out);
      blocks_[i].collect_params(out);
    }
  }
  void collect_state(const std::string& prefix, std::vector<NamedTensor<T>>& out) {
    for (size_t i = 0; i < stages_.size(); ++i) {
      stages_[i].collect_state(prefix + ".stage" + std::to_string(i), out);
      blocks_[i].collect_state(prefix + ".block" + std::to_string(i), out);
    }
  }

 private:
  std::vector<ConvBnRelu<T>> stages_;
  std::vector<ResidualBlock<T>> blocks_;
  int out_ch_;
};

// ---------------------------------------------------------------------------
// Adam

template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Param<T>*> params, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      slots_.push_back({std::vector<double>(p->value.size(), 0.0),
                        std::vector<double>(p->value.size(), 0.0)});
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, t_);
    const double bc2 = 1.0 - std::pow(b2_, t_);
    for (size_t k = 0; k < params_.size(); ++k) {
      Param<T>* p = params_[k];
      auto& m = slots_[k].m;
      auto& v = slots_[k].v;
      for (size_t i = 0; i < p->value.size(); ++i) {
        const double g = p->grad[i];
        m[i] = b1_ * m[i] + (1.0 - b1_) * g;
        v[i] = b2_ * v[i] + (1.0 - b2_) * g * g;
        p->value[i] -= static_cast<T>(lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_));
      }
    }
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  std::vector<Param<T>*> params_;
  std::vector<Slot> slots_;
  double lr_, b1_, b2_, eps_;
  int64_t t_ = 0;
};

// Scales all gradients so their global L2 norm is at most max_norm.
template <typename T>
double clip_grad_norm(const std::vector<Param<T>*>& params, double max_norm) {
  double sq = 0.0;
  for (auto* p : params) {
    for (size_t i = 0; i < p->grad.size(); ++i) sq += double(p->grad[i]) * p->grad[i];
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto* p : params) {
      for (size_t i = 0; i < p->grad.size(); ++i) p->grad[i] *= scale;
    }
  }
  return norm;
}

}  // namespace spanreid::nn
