#include "spanreid/cpdm.hpp"

#include <stdexcept>

namespace spanreid::cpdm {

AreaRatios area_ratios_from_mass(double front, double rear, double side) {
  if (front < 0.0 || rear < 0.0 || side < 0.0)
    throw std::invalid_argument("area_ratios: negative mask mass");
  const double total = front + rear + side;
  if (total <= 0.0)
    throw std::invalid_argument("area_ratios: all view masks are empty");
  AreaRatios ar;
  ar.v = {1.0, front / total, rear / total, side / total};
  return ar;
}

AreaRatios area_ratios(const Tensor<float>& masks) {
  if (masks.n() != 1 || masks.c() != 3)
    throw std::invalid_argument("area_ratios: expected a (1,3,H,W) mask tensor");
  const size_t plane = static_cast<size_t>(masks.h()) * masks.w();
  double mass[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    const float* m = masks.data() + i * plane;
    for (size_t p = 0; p < plane; ++p) mass[i] += m[p];
  }
  return area_ratios_from_mass(mass[0], mass[1], mass[2]);
}

AttentiveWeights attentive_weights(const AreaRatios& a, const AreaRatios& b) {
  AttentiveWeights w;
  double denom = 0.0;
  for (int i = 0; i < kParts; ++i) {
    w.v[i] = a[i] * b[i];
    denom += w.v[i];
  }
  // denom >= a[0]*b[0] = 1
  for (int i = 0; i < kParts; ++i) w.v[i] /= denom;
  return w;
}

double cpdm_distance(const FeatureEntry& a, const FeatureEntry& b, int dim) {
  if (a.f.size() != b.f.size() || static_cast<int>(a.f.size()) != kParts * dim)
    throw std::invalid_argument("cpdm_distance: feature dimension mismatch");
  return part_distance(a.f.data(), b.f.data(), dim, attentive_weights(a.ar, b.ar));
}

namespace {

void check_sets(const std::vector<FeatureEntry>& queries,
                const std::vector<FeatureEntry>& gallery, size_t expected_len,
                const char* who) {
  if (queries.empty() || gallery.empty())
    throw std::invalid_argument(std::string(who) + ": empty query or gallery set");
  for (const auto& e : queries) {
    if (e.f.size() != expected_len)
      throw std::invalid_argument(std::string(who) + ": feature dimension mismatch");
  }
  for (const auto& e : gallery) {
    if (e.f.size() != expected_len)
      throw std::invalid_argument(std::string(who) + ": feature dimension mismatch");
  }
}

}  // namespace

Eigen::MatrixXd pairwise_distance_matrix(const std::vector<FeatureEntry>& queries,
                                         const std::vector<FeatureEntry>& gallery, int dim) {
  check_sets(queries, gallery, static_cast<size_t>(kParts) * dim, "pairwise_distance_matrix");
  Eigen::MatrixXd d(queries.size(), gallery.size());
#pragma omp parallel for schedule(static)
  for (int q = 0; q < static_cast<int>(queries.size()); ++q) {
    for (size_t g = 0; g < gallery.size(); ++g) {
      const AttentiveWeights w = attentive_weights(queries[q].ar, gallery[g].ar);
      d(q, g) = part_distance(queries[q].f.data(), gallery[g].f.data(), dim, w);
    }
  }
  return d;
}

Eigen::MatrixXd pairwise_euclidean_matrix(const std::vector<FeatureEntry>& queries,
                                          const std::vector<FeatureEntry>& gallery) {
  if (queries.empty() || gallery.empty())
    throw std::invalid_argument("pairwise_euclidean_matrix: empty query or gallery set");
  check_sets(queries, gallery, queries[0].f.size(), "pairwise_euclidean_matrix");
  Eigen::MatrixXd d(queries.size(), gallery.size());
  const int len = static_cast<int>(queries[0].f.size());
#pragma omp parallel for schedule(static)
  for (int q = 0; q < static_cast<int>(queries.size()); ++q) {
    for (size_t g = 0; g < gallery.size(); ++g) {
      d(q, g) = euclidean_distance(queries[q].f.data(), gallery[g].f.data(), len);
    }
  }
  return d;
}

}  // namespace spanreid::cpdm
