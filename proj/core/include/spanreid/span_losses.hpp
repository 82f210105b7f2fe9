#pragma once

// The three mask supervision losses. Each takes a batch of soft masks
// (N, K, H, W), the binary foreground masks (N, 1, H, W) and per-sample
// labels, and returns the batch mean. When `grad` is non-null the
// gradient w.r.t. the masks, scaled by `grad_scale`, is accumulated into
// it (caller zeroes). Sums are accumulated in double regardless of T.

#include <vector>

#include "spanreid/errors.hpp"
#include "spanreid/semantic_label.hpp"
#include "spanreid/tables.hpp"
#include "spanreid/tensor.hpp"

namespace spanreid::span {

struct LossWeights {
  double recon = 1.0;
  double area = 0.5;
  double div = 1.0;
};

template <typename T>
struct LossBreakdown {
  T recon = T(0);
  T area = T(0);
  T div = T(0);
  T total = T(0);
};

namespace detail {

template <typename T>
void check_mask_shapes(const Tensor<T>& masks, const Tensor<T>& fg,
                       const std::vector<SemanticLabel>& labels) {
  if (masks.n() != fg.n() || masks.h() != fg.h() || masks.w() != fg.w() || fg.c() != 1)
    throw std::invalid_argument("span losses: mask/foreground shape mismatch");
  if (static_cast<int>(labels.size()) != masks.n())
    throw std::invalid_argument("span losses: label count mismatch");
  for (const auto& l : labels) {
    if (l.views() != masks.c())
      throw std::invalid_argument("span losses: label arity does not match mask count");
  }
}

template <typename T>
double foreground_area(const Tensor<T>& fg, int s) {
  const T* v = fg.sample(s);
  double a = 0.0;
  for (size_t i = 0; i < fg.sample_size(); ++i) a += v[i];
  return a;
}

}  // namespace detail

// Mean squared error between the foreground mask and the label-gated sum
// of view masks.
template <typename T>
T loss_recon(const Tensor<T>& masks, const Tensor<T>& fg,
             const std::vector<SemanticLabel>& labels, Tensor<T>* grad = nullptr,
             double grad_scale = 1.0) {
  detail::check_mask_shapes(masks, fg, labels);
  const int plane = masks.h() * masks.w();
  const int k = masks.c();
  double total = 0.0;
  for (int s = 0; s < masks.n(); ++s) {
    const T* v = fg.sample(s);
    const T* m = masks.sample(s);
    double acc = 0.0;
    for (int p = 0; p < plane; ++p) {
      double recon = 0.0;
      for (int i = 0; i < k; ++i) {
        if (labels[s].visible(i)) recon += m[static_cast<size_t>(i) * plane + p];
      }
      const double r = recon - double(v[p]);
      acc += r * r;
      if (grad) {
        const double g = grad_scale * 2.0 * r / (double(plane) * masks.n());
        T* gm = grad->sample(s);
        for (int i = 0; i < k; ++i) {
          if (labels[s].visible(i)) gm[static_cast<size_t>(i) * plane + p] += static_cast<T>(g);
        }
      }
    }
    total += acc / plane;
  }
  return static_cast<T>(total / masks.n());
}

// Hinge penalty on each mask's area ratio over the foreground exceeding
// its per-viewpoint cap.
template <typename T>
T loss_area(const Tensor<T>& masks, const Tensor<T>& fg,
            const std::vector<SemanticLabel>& labels, const AreaRatioTable& table,
            Tensor<T>* grad = nullptr, double grad_scale = 1.0) {
  detail::check_mask_shapes(masks, fg, labels);
  const int plane = masks.h() * masks.w();
  const int k = masks.c();
  double total = 0.0;
  for (int s = 0; s < masks.n(); ++s) {
    const double v_area = detail::foreground_area(fg, s);
    if (v_area <= 0.0)
      throw std::invalid_argument("loss_area: all-background foreground mask");
    const std::vector<double> caps = table.caps(labels[s]);
    const T* m = masks.sample(s);
    for (int i = 0; i < k; ++i) {
      double mass = 0.0;
      for (int p = 0; p < plane; ++p) mass += m[static_cast<size_t>(i) * plane + p];
      const double excess = mass / v_area - caps[i];
      if (excess > 0.0) {
        total += excess;
        if (grad) {
          const T g = static_cast<T>(grad_scale / (v_area * masks.n()));
          T* gm = grad->sample(s) + static_cast<size_t>(i) * plane;
          for (int p = 0; p < plane; ++p) gm[p] += g;
        }
      }
    }
  }
  return static_cast<T>(total / masks.n());
}

// Hinge penalty on pairwise mask overlap beyond a per-pair margin.
// Overlap is the summed elementwise product normalized by the foreground
// area, which keeps margins resolution-independent.
template <typename T>
T loss_div(const Tensor<T>& masks, const Tensor<T>& fg, const MarginTable& margins,
           Tensor<T>* grad = nullptr, double grad_scale = 1.0) {
  if (masks.n() != fg.n() || masks.h() != fg.h() || masks.w() != fg.w() || fg.c() != 1)
    throw std::invalid_argument("span losses: mask/foreground shape mismatch");
  if (margins.views() != masks.c())
    throw std::invalid_argument("loss_div: margin table arity mismatch");
  const int plane = masks.h() * masks.w();
  const int k = masks.c();
  double total = 0.0;
  for (int s = 0; s < masks.n(); ++s) {
    const double v_area = detail::foreground_area(fg, s);
    if (v_area <= 0.0)
      throw std::invalid_argument("loss_div: all-background foreground mask");
    const T* m = masks.sample(s);
    for (int i = 0; i < k; ++i) {
      const T* mi = m + static_cast<size_t>(i) * plane;
      for (int j = i + 1; j < k; ++j) {
        const T* mj = m + static_cast<size_t>(j) * plane;
        double dot = 0.0;
        for (int p = 0; p < plane; ++p) dot += double(mi[p]) * mj[p];
        const double excess = dot / v_area - margins.margin(i, j);
        if (excess > 0.0) {
          total += excess;
          if (grad) {
            const double g = grad_scale / (v_area * masks.n());
            T* gi = grad->sample(s) + static_cast<size_t>(i) * plane;
            T* gj = grad->sample(s) + static_cast<size_t>(j) * plane;
            for (int p = 0; p < plane; ++p) {
              gi[p] += static_cast<T>(g * mj[p]);
              gj[p] += static_cast<T>(g * mi[p]);
            }
          }
        }
      }
    }
  }
  return static_cast<T>(total / masks.n());
}

// Weighted sum of the three losses (stage-1 objective).
template <typename T>
LossBreakdown<T> span_total_loss(const Tensor<T>& masks, const Tensor<T>& fg,
                                 const std::vector<SemanticLabel>& labels,
                                 const AreaRatioTable& table, const MarginTable& margins,
                                 const LossWeights& w, Tensor<T>* grad = nullptr) {
  if (w.recon < 0.0 || w.area < 0.0 || w.div < 0.0)
    throw ConfigError("span loss coefficients must be non-negative");
  LossBreakdown<T> out;
  out.recon = loss_recon(masks, fg, labels, grad, w.recon);
  out.area = loss_area(masks, fg, labels, table, grad, w.area);
  out.div = loss_div(masks, fg, margins, grad, w.div);
  out.total = static_cast<T>(w.recon * out.recon + w.area * out.area + w.div * out.div);
  return out;
}

}  // namespace spanreid::span
