#pragma once

// Co-occurrence part-attentive distance: per-image area ratios over the
// soft view masks, pairwise attentive weights (normalized products of
// area ratios), and the weighted sum of per-part euclidean feature
// distances. Part order is fixed: global, front, rear, side.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "spanreid/tensor.hpp"

namespace spanreid::cpdm {

constexpr int kParts = 4;  // global + 3 views

struct AreaRatios {
  // [global, front, rear, side]; global is 1 by definition, the view
  // entries are the mask areas normalized by their sum.
  std::array<double, kParts> v{1.0, 0.0, 0.0, 0.0};

  double operator[](int i) const { return v[i]; }
  // Fallback for degenerate (all-zero-mask) inputs; retrieval tooling
  // uses it with a logged warning.
  static AreaRatios uniform_fallback() {
    return AreaRatios{{1.0, 1.0 / 3, 1.0 / 3, 1.0 / 3}};
  }
};

// From raw mask masses (L1 norms). Throws std::invalid_argument when all
// three are zero.
AreaRatios area_ratios_from_mass(double front, double rear, double side);

// From a (1, 3, H, W) soft mask tensor.
AreaRatios area_ratios(const Tensor<float>& masks);

struct AttentiveWeights {
  std::array<double, kParts> v{};
  double operator[](int i) const { return v[i]; }
};

// w_i = AR_a[i] * AR_b[i] / sum_j AR_a[j] * AR_b[j]. The denominator is
// at least 1 (global entries are 1), so this never divides by zero.
AttentiveWeights attentive_weights(const AreaRatios& a, const AreaRatios& b);

// Weighted sum of per-part euclidean distances. Features are laid out as
// kParts contiguous blocks of `dim` values.
template <typename T>
double part_distance(const T* fa, const T* fb, int dim, const AttentiveWeights& w) {
  double total = 0.0;
  for (int i = 0; i < kParts; ++i) {
    if (w[i] == 0.0) continue;
    const T* a = fa + static_cast<size_t>(i) * dim;
    const T* b = fb + static_cast<size_t>(i) * dim;
    double ssq = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double diff = double(a[d]) - double(b[d]);
      ssq += diff * diff;
    }
    if (ssq > 0.0) total += w[i] * std::sqrt(ssq);
  }
  return total;
}

// Accumulates coeff * d(distance)/d(fa) into ga and the mirror term into
// gb. Zero-norm parts contribute nothing (subgradient 0 at the kink).
template <typename T>
void part_distance_grad(const T* fa, const T* fb, int dim, const AttentiveWeights& w,
                        double coeff, T* ga, T* gb) {
  for (int i = 0; i < kParts; ++i) {
    if (w[i] == 0.0) continue;
    const T* a = fa + static_cast<size_t>(i) * dim;
    const T* b = fb + static_cast<size_t>(i) * dim;
    double ssq = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double diff = double(a[d]) - double(b[d]);
      ssq += diff * diff;
    }
    if (ssq <= 0.0) continue;
    const double scale = coeff * w[i] / std::sqrt(ssq);
    T* gia = ga + static_cast<size_t>(i) * dim;
    T* gib = gb + static_cast<size_t>(i) * dim;
    for (int d = 0; d < dim; ++d) {
      const T g = static_cast<T>(scale * (double(a[d]) - double(b[d])));
      gia[d] += g;
      gib[d] -= g;
    }
  }
}

// Plain euclidean distance on the concatenated feature (the "Cat"
// ablation variant and the global-only baseline).
template <typename T>
double euclidean_distance(const T* fa, const T* fb, int len) {
  double ssq = 0.0;
  for (int d = 0; d < len; ++d) {
    const double diff = double(fa[d]) - double(fb[d]);
    ssq += diff * diff;
  }
  return ssq > 0.0 ? std::sqrt(ssq) : 0.0;
}

template <typename T>
void euclidean_distance_grad(const T* fa, const T* fb, int len, double coeff, T* ga, T* gb) {
  double ssq = 0.0;
  for (int d = 0; d < len; ++d) {
    const double diff = double(fa[d]) - double(fb[d]);
    ssq += diff * diff;
  }
  if (ssq <= 0.0) return;
  const double scale = coeff / std::sqrt(ssq);
  for (int d = 0; d < len; ++d) {
    const T g = static_cast<T>(scale * (double(fa[d]) - double(fb[d])));
    ga[d] += g;
    gb[d] -= g;
  }
}

// One image's retrieval payload: the four part features plus its area
// ratios.
struct FeatureEntry {
  std::vector<float> f;  // kParts * dim
  AreaRatios ar;
};

double cpdm_distance(const FeatureEntry& a, const FeatureEntry& b, int dim);

// Dense |Q| x |G| CPDM distance matrix.
Eigen::MatrixXd pairwise_distance_matrix(const std::vector<FeatureEntry>& queries,
                                         const std::vector<FeatureEntry>& gallery, int dim);

// Same layout but with the plain euclidean metric, for the non-CPDM
// ablation variants.
Eigen::MatrixXd pairwise_euclidean_matrix(const std::vector<FeatureEntry>& queries,
                                          const std::vector<FeatureEntry>& gallery);

}  // namespace spanreid::cpdm
