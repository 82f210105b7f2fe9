#pragma once

// Stage-2 losses: batch-hard triplet over the part-attentive distance
// (or plain euclidean for the ablation variants) and softmax
// cross-entropy for identity classification. Templated on the scalar
// type so the finite-difference checks can run in double.

#include <cmath>
#include <limits>
#include <vector>

#include "spanreid/cpdm.hpp"
#include "spanreid/tensor.hpp"

namespace spanreid::partnet {

enum class DistanceMode { kCpdm, kEuclidean };

struct TripletPick {
  int anchor = -1, positive = -1, negative = -1;
  bool active = false;  // hinge engaged
};

// Batch-hard reduction over a precomputed distance matrix: per anchor,
// the hardest positive (max distance, same id, not itself) against the
// hardest negative (min distance, different id). Anchors without a
// positive are skipped; a batch without any cross-identity pair is an
// error.
template <typename T>
T batch_hard_from_distmat(const std::vector<std::vector<T>>& dist, const std::vector<int>& ids,
                          double margin, std::vector<TripletPick>* picks = nullptr) {
  const size_t n = ids.size();
  if (dist.size() != n) throw std::invalid_argument("batch_hard: distance matrix size mismatch");
  bool any_negative = false;
  double total = 0.0;
  int anchors = 0;
  std::vector<TripletPick> local;
  for (size_t a = 0; a < n; ++a) {
    if (dist[a].size() != n)
      throw std::invalid_argument("batch_hard: distance matrix size mismatch");
    TripletPick pick;
    pick.anchor = static_cast<int>(a);
    double worst_pos = -1.0;
    double best_neg = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      if (ids[j] == ids[a]) {
        if (double(dist[a][j]) > worst_pos) {
          worst_pos = dist[a][j];
          pick.positive = static_cast<int>(j);
        }
      } else {
        any_negative = true;
        if (double(dist[a][j]) < best_neg) {
          best_neg = dist[a][j];
          pick.negative = static_cast<int>(j);
        }
      }
    }
    if (pick.positive < 0 || pick.negative < 0) continue;  // anchor unusable
    const double hinge = worst_pos - best_neg + margin;
    pick.active = hinge > 0.0;
    if (pick.active) total += hinge;
    local.push_back(pick);
    ++anchors;
  }
  if (!any_negative)
    throw std::invalid_argument("batch_hard: batch contains a single identity (no negatives)");
  if (anchors == 0)
    throw std::invalid_argument("batch_hard: no anchor has a positive");
  if (picks) *picks = std::move(local);
  return static_cast<T>(total / anchors);
}

// Full loss over a PK batch of part features (N, parts*dim). For kCpdm,
// `ars` supplies each image's area ratios (frozen mask network output)
// and the pairwise attentive weights follow from them; for kEuclidean the
// concatenated vector is compared directly. Gradients w.r.t. the features
// are accumulated into `grad` scaled by grad_scale.
template <typename T>
T batch_hard_triplet_loss(const Tensor<T>& feats, const std::vector<int>& ids,
                          const std::vector<cpdm::AreaRatios>& ars, int dim, double margin,
                          DistanceMode mode, Tensor<T>* grad = nullptr,
                          double grad_scale = 1.0) {
  const int n = feats.n();
  if (static_cast<int>(ids.size()) != n)
    throw std::invalid_argument("triplet: id count mismatch");
  if (mode == DistanceMode::kCpdm) {
    if (static_cast<int>(ars.size()) != n)
      throw std::invalid_argument("triplet: area-ratio count mismatch");
    if (static_cast<int>(feats.sample_size()) != cpdm::kParts * dim)
      throw std::invalid_argument("triplet: feature layout mismatch");
  }
  const int len = static_cast<int>(feats.sample_size());

  std::vector<std::vector<cpdm::AttentiveWeights>> w;
  if (mode == DistanceMode::kCpdm) {
    w.assign(n, std::vector<cpdm::AttentiveWeights>(n));
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) w[a][b] = cpdm::attentive_weights(ars[a], ars[b]);
    }
  }
  auto pair_dist = [&](int a, int b) {
    return mode == DistanceMode::kCpdm
               ? cpdm::part_distance(feats.sample(a), feats.sample(b), dim, w[a][b])
               : cpdm::euclidean_distance(feats.sample(a), feats.sample(b), len);
  };

  std::vector<std::vector<T>> dist(n, std::vector<T>(n, T(0)));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double d = pair_dist(a, b);
      dist[a][b] = static_cast<T>(d);
      dist[b][a] = static_cast<T>(d);
    }
  }

  std::vector<TripletPick> picks;
  const T loss = batch_hard_from_distmat(dist, ids, margin, &picks);

  if (grad) {
    int anchors = 0;
    for (const auto& p : picks) anchors += p.positive >= 0 && p.negative >= 0;
    const double coeff = grad_scale / anchors;
    for (const auto& p : picks) {
      if (!p.active) continue;
      if (mode == DistanceMode::kCpdm) {
        cpdm::part_distance_grad(feats.sample(p.anchor), feats.sample(p.positive), dim,
                                 w[p.anchor][p.positive], coeff, grad->sample(p.anchor),
                                 grad->sample(p.positive));
        cpdm::part_distance_grad(feats.sample(p.anchor), feats.sample(p.negative), dim,
                                 w[p.anchor][p.negative], -coeff, grad->sample(p.anchor),
                                 grad->sample(p.negative));
      } else {
        cpdm::euclidean_distance_grad(feats.sample(p.anchor), feats.sample(p.positive), len,
                                      coeff, grad->sample(p.anchor), grad->sample(p.positive));
        cpdm::euclidean_distance_grad(feats.sample(p.anchor), feats.sample(p.negative), len,
                                      -coeff, grad->sample(p.anchor), grad->sample(p.negative));
      }
    }
  }
  return loss;
}

// Softmax cross-entropy over identity logits; targets are class indices.
template <typename T>
T cross_entropy_loss(const Tensor<T>& logits, const std::vector<int>& targets,
                     Tensor<T>* grad = nullptr, double grad_scale = 1.0) {
  const int n = logits.n();
  const int k = static_cast<int>(logits.sample_size());
  if (static_cast<int>(targets.size()) != n)
    throw std::invalid_argument("cross_entropy: target count mismatch");
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    if (targets[s] < 0 || targets[s] >= k)
      throw std::invalid_argument("cross_entropy: unknown identity index");
    const T* z = logits.sample(s);
    double zmax = z[0];
    for (int c = 1; c < k; ++c) zmax = std::max(zmax, double(z[c]));
    double lse = 0.0;
    for (int c = 0; c < k; ++c) lse += std::exp(double(z[c]) - zmax);
    lse = zmax + std::log(lse);
    total += lse - double(z[targets[s]]);
    if (grad) {
      T* g = grad->sample(s);
      for (int c = 0; c < k; ++c) {
        const double p = std::exp(double(z[c]) - lse);
        g[c] += static_cast<T>(grad_scale * (p - (c == targets[s] ? 1.0 : 0.0)) / n);
      }
    }
  }
  return static_cast<T>(total / n);
}

}  // namespace spanreid::partnet
