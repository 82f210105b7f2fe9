#include <doctest.h>

#include <Eigen/Dense>

#include "spanreid/ranking.hpp"
#include "spanreid/rng.hpp"

using namespace spanreid;
using namespace spanreid::evalkit;

namespace {

// Brute-force reference evaluator, written from the protocol definition
// and kept independent of the library implementation: insertion sort by
// distance (original order on ties), average precision straight from its
// definition, CMC as the first-correct-rank histogram.
struct NaiveResult {
  double mean_ap = 0.0;
  std::vector<double> cmc;
  int evaluated = 0;
};

NaiveResult naive_eval(const Eigen::MatrixXd& dist, const std::vector<ImageMeta>& query,
                       const std::vector<ImageMeta>& gallery, bool exclude_same_camera) {
  NaiveResult out;
  out.cmc.assign(gallery.size(), 0.0);
  for (size_t qi = 0; qi < query.size(); ++qi) {
    // insertion sort keeps original order on equal keys
    std::vector<int> order;
    for (size_t gi = 0; gi < gallery.size(); ++gi) {
      if (exclude_same_camera && gallery[gi].identity_id == query[qi].identity_id &&
          gallery[gi].camera_id == query[qi].camera_id)
        continue;
      int pos = static_cast<int>(order.size());
      while (pos > 0 && dist(qi, order[pos - 1]) > dist(qi, gi)) --pos;
      order.insert(order.begin() + pos, static_cast<int>(gi));
    }
    int positives = 0;
    for (int gi : order) positives += gallery[gi].identity_id == query[qi].identity_id;
    if (positives == 0) continue;

    int hit = 0;
    double ap = 0.0;
    int first = -1;
    for (size_t rank = 0; rank < order.size(); ++rank) {
      if (gallery[order[rank]].identity_id == query[qi].identity_id) {
        ++hit;
        ap += double(hit) / double(rank + 1);
        if (first < 0) first = static_cast<int>(rank);
      }
    }
    out.mean_ap += ap / positives;
    for (size_t k = static_cast<size_t>(first); k < out.cmc.size(); ++k) out.cmc[k] += 1.0;
    ++out.evaluated;
  }
  if (out.evaluated > 0) {
    out.mean_ap /= out.evaluated;
    for (auto& c : out.cmc) c /= out.evaluated;
  }
  return out;
}

}  // namespace

TEST_CASE("perfect ranking gives R-1 = mAP = 1") {
  // 3 queries, each with exactly one positive that is also the nearest
  std::vector<ImageMeta> query{{0, 0}, {1, 0}, {2, 0}};
  std::vector<ImageMeta> gallery{{0, 1}, {1, 1}, {2, 1}, {3, 1}, {4, 1}};
  Eigen::MatrixXd dist(3, 5);
  dist.setConstant(5.0);
  for (int q = 0; q < 3; ++q) dist(q, q) = 0.1;
  const RankingResult res = evaluate_ranking(dist, query, gallery);
  CHECK(res.rank_k(1) == doctest::Approx(1.0));
  CHECK(res.mean_ap == doctest::Approx(1.0));
}

TEST_CASE("hand-computed AP: positives at ranks 1 and 3") {
  std::vector<ImageMeta> query{{7, 0}};
  std::vector<ImageMeta> gallery{{7, 1}, {1, 1}, {7, 2}, {2, 1}};
  Eigen::MatrixXd dist(1, 4);
  dist << 0.1, 0.2, 0.3, 0.4;
  const RankingResult res = evaluate_ranking(dist, query, gallery);
  CHECK(res.mean_ap == doctest::Approx(5.0 / 6.0));
  CHECK(res.cmc[0] == doctest::Approx(1.0));
}

TEST_CASE("matches the brute-force oracle on random instances") {
  Rng rng(55);
  for (int inst = 0; inst < 120; ++inst) {
    const int nq = rng.uniform_int(1, 20);
    const int ng = rng.uniform_int(2, 50);
    const int n_ids = rng.uniform_int(2, 8);
    const int n_cams = rng.uniform_int(2, 4);
    std::vector<ImageMeta> query, gallery;
    for (int i = 0; i < nq; ++i)
      query.push_back({rng.uniform_int(0, n_ids - 1), rng.uniform_int(0, n_cams - 1)});
    for (int i = 0; i < ng; ++i)
      gallery.push_back({rng.uniform_int(0, n_ids - 1), rng.uniform_int(0, n_cams - 1)});
    Eigen::MatrixXd dist(nq, ng);
    for (int q = 0; q < nq; ++q) {
      for (int g = 0; g < ng; ++g) dist(q, g) = rng.uniform(0.0, 10.0);
    }
    const bool exclude = rng.bernoulli(0.8);

    const NaiveResult expect = naive_eval(dist, query, gallery, exclude);
    if (expect.evaluated == 0) {
      CHECK(evaluate_ranking(dist, query, gallery, exclude).query_indices.empty());
      continue;
    }
    const RankingResult got = evaluate_ranking(dist, query, gallery, exclude);
    CHECK(static_cast<int>(got.query_indices.size()) == expect.evaluated);
    CHECK(got.mean_ap == expect.mean_ap);
    REQUIRE(got.cmc.size() == expect.cmc.size());
    for (size_t k = 0; k < expect.cmc.size(); ++k) CHECK(got.cmc[k] == expect.cmc[k]);
  }
}

TEST_CASE("ties break by stable gallery order") {
  std::vector<ImageMeta> query{{0, 0}};
  std::vector<ImageMeta> gallery{{1, 1}, {0, 1}, {0, 2}};
  Eigen::MatrixXd dist(1, 3);
  dist << 1.0, 1.0, 1.0;  // all tied: original order 0,1,2
  const RankingResult res = evaluate_ranking(dist, query, gallery);
  REQUIRE(res.ranked.size() == 1);
  CHECK(res.ranked[0] == std::vector<int>{0, 1, 2});
  // first positive at rank 2 -> AP = (1/2 + 2/3) / 2
  CHECK(res.mean_ap == doctest::Approx((0.5 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("queries without a valid positive are excluded and reported") {
  std::vector<ImageMeta> query{{0, 0}, {1, 0}};
  // identity 0 only appears in the gallery under the query's own camera
  std::vector<ImageMeta> gallery{{0, 0}, {1, 1}, {2, 1}};
  Eigen::MatrixXd dist(2, 3);
  dist << 0.5, 1.0, 2.0, 3.0, 0.5, 1.0;
  const RankingResult res = evaluate_ranking(dist, query, gallery);
  REQUIRE(res.skipped.size() == 1);
  CHECK(res.skipped[0] == 0);
  CHECK(res.query_indices == std::vector<int>{1});
  CHECK(res.mean_ap == doctest::Approx(1.0));
}

TEST_CASE("CMC is monotone non-decreasing") {
  Rng rng(56);
  for (int inst = 0; inst < 20; ++inst) {
    const int nq = rng.uniform_int(2, 10), ng = rng.uniform_int(4, 30);
    std::vector<ImageMeta> query, gallery;
    for (int i = 0; i < nq; ++i) query.push_back({rng.uniform_int(0, 3), rng.uniform_int(0, 2)});
    for (int i = 0; i < ng; ++i)
      gallery.push_back({rng.uniform_int(0, 3), rng.uniform_int(0, 2)});
    Eigen::MatrixXd dist(nq, ng);
    for (int q = 0; q < nq; ++q)
      for (int g = 0; g < ng; ++g) dist(q, g) = rng.uniform(0.0, 1.0);
    const RankingResult res = evaluate_ranking(dist, query, gallery);
    for (size_t k = 1; k < res.cmc.size(); ++k) CHECK(res.cmc[k] >= res.cmc[k - 1]);
  }
}

TEST_CASE("mAP is invariant to gallery permutation (tie-free distances)") {
  Rng rng(57);
  const int nq = 6, ng = 20;
  std::vector<ImageMeta> query, gallery;
  for (int i = 0; i < nq; ++i) query.push_back({rng.uniform_int(0, 3), rng.uniform_int(0, 2)});
  for (int i = 0; i < ng; ++i) gallery.push_back({rng.uniform_int(0, 3), rng.uniform_int(0, 2)});
  Eigen::MatrixXd dist(nq, ng);
  for (int q = 0; q < nq; ++q)
    for (int g = 0; g < ng; ++g) dist(q, g) = rng.uniform(0.0, 1.0);
  const RankingResult base = evaluate_ranking(dist, query, gallery);

  std::vector<int> perm(ng);
  for (int i = 0; i < ng; ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<ImageMeta> gallery2(ng);
  Eigen::MatrixXd dist2(nq, ng);
  for (int i = 0; i < ng; ++i) {
    gallery2[i] = gallery[perm[i]];
    dist2.col(i) = dist.col(perm[i]);
  }
  const RankingResult permuted = evaluate_ranking(dist2, query, gallery2);
  CHECK(permuted.mean_ap == doctest::Approx(base.mean_ap).epsilon(1e-12));
  for (size_t k = 0; k < base.cmc.size(); ++k)
    CHECK(permuted.cmc[k] == doctest::Approx(base.cmc[k]).epsilon(1e-12));
}

TEST_CASE("shape and emptiness guards") {
  std::vector<ImageMeta> query{{0, 0}};
  std::vector<ImageMeta> gallery{{0, 1}};
  Eigen::MatrixXd bad(2, 1);
  CHECK_THROWS_AS(evaluate_ranking(bad, query, gallery), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_ranking(bad, {}, gallery), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// mask quality primitives

#include "spanreid/mask_eval.hpp"

namespace {

spanreid::Tensor<uint8_t> rect_mask(int h, int w, int x0, int y0, int x1, int y1) {
  spanreid::Tensor<uint8_t> m(1, 1, h, w);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) m.at(0, 0, y, x) = 1;
  }
  return m;
}

}  // namespace

TEST_CASE("IoU oracle values") {
  // identical masks
  const auto a = rect_mask(8, 8, 1, 1, 4, 4);
  CHECK(binary_iou(a, a) == doctest::Approx(1.0));
  // complement within the same frame
  spanreid::Tensor<uint8_t> b(1, 1, 8, 8);
  for (size_t i = 0; i < b.size(); ++i) b[i] = a[i] ? 0 : 1;
  CHECK(binary_iou(a, b) == doctest::Approx(0.0));
  // half-overlapping equal-area rectangles: |I| = A/2, |U| = 3A/2
  const auto left = rect_mask(8, 8, 0, 0, 3, 3);   // 4x4
  const auto shifted = rect_mask(8, 8, 2, 0, 5, 3);
  CHECK(binary_iou(left, shifted) == doctest::Approx(1.0 / 3.0));
  // symmetry
  CHECK(binary_iou(shifted, left) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("mask quality accumulator separates visible and invisible views") {
  MaskQualityAccumulator acc(3, 0.5);
  const auto gt_front = rect_mask(8, 8, 0, 0, 3, 7);
  spanreid::Tensor<uint8_t> empty(1, 1, 8, 8);
  const auto fg = gt_front;

  spanreid::Tensor<float> pred(1, 3, 8, 8);
  // front prediction = ground truth at confidence 0.9; rear leaks 10% of
  // the foreground mass; side stays silent
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      pred.at(0, 0, y, x) = gt_front.at(0, 0, y, x) ? 0.9f : 0.0f;
    }
  }
  const double fg_area = 32.0;
  pred.at(0, 1, 7, 7) = static_cast<float>(0.1 * fg_area);  // soft mass, below threshold anyway

  acc.add(pred, {gt_front, empty, empty}, fg,
          spanreid::SemanticLabel::vehicle(true, false, false));
  const MaskQualityReport r = acc.report();
  CHECK(r.mean_iou[0] == doctest::Approx(1.0));
  CHECK(r.false_area_ratio[1] == doctest::Approx(0.1));
  CHECK(r.false_area_ratio[2] == doctest::Approx(0.0));
  CHECK(r.visible_count[0] == 1);
  CHECK(r.invisible_count[1] == 1);
}

TEST_CASE("bbox and centroid helpers") {
  const auto m = rect_mask(10, 10, 2, 3, 5, 6);
  const BBox box = mask_bbox(m);
  CHECK(box.x0 == 2);
  CHECK(box.y0 == 3);
  CHECK(box.x1 == 5);
  CHECK(box.y1 == 6);
  CHECK(box.contains(3.5, 4.5));
  CHECK(!box.contains(6.5, 4.5));

  std::vector<float> plane(100, 0.0f);
  plane[4 * 10 + 3] = 2.0f;  // (x=3, y=4)
  const auto c = soft_centroid(plane.data(), 10, 10);
  CHECK(c[0] == doctest::Approx(3.0));
  CHECK(c[1] == doctest::Approx(4.0));
  std::vector<float> zero(100, 0.0f);
  CHECK(soft_centroid(zero.data(), 10, 10)[0] == -1.0);
}
