#include "spanreid/ranking.hpp"

#include <algorithm>
#include <stdexcept>

namespace spanreid::evalkit {

RankingResult evaluate_ranking(const Eigen::MatrixXd& dist,
                               const std::vector<ImageMeta>& query,
                               const std::vector<ImageMeta>& gallery,
                               bool exclude_same_camera) {
  if (query.empty() || gallery.empty())
    throw std::invalid_argument("evaluate_ranking: empty query or gallery set");
  if (dist.rows() != static_cast<Eigen::Index>(query.size()) ||
      dist.cols() != static_cast<Eigen::Index>(gallery.size()))
    throw std::invalid_argument("evaluate_ranking: distance matrix shape mismatch");

  RankingResult res;
  res.cmc.assign(gallery.size(), 0.0);

  for (size_t q = 0; q < query.size(); ++q) {
    std::vector<int> valid;
    valid.reserve(gallery.size());
    int positives = 0;
    for (size_t g = 0; g < gallery.size(); ++g) {
      if (exclude_same_camera && gallery[g].identity_id == query[q].identity_id &&
          gallery[g].camera_id == query[q].camera_id) {
        continue;
      }
      valid.push_back(static_cast<int>(g));
      if (gallery[g].identity_id == query[q].identity_id) ++positives;
    }
    if (positives == 0) {
      res.skipped.push_back(static_cast<int>(q));
      continue;
    }
    // Stable sort keeps the original gallery order for tied distances.
    std::stable_sort(valid.begin(), valid.end(), [&](int a, int b) {
      return dist(q, a) < dist(q, b);
    });

    int found = 0;
    double ap = 0.0;
    int first_hit = -1;
    for (size_t pos = 0; pos < valid.size(); ++pos) {
      if (gallery[valid[pos]].identity_id == query[q].identity_id) {
        ++found;
        ap += double(found) / double(pos + 1);
        if (first_hit < 0) first_hit = static_cast<int>(pos);
      }
    }
    ap /= positives;

    res.query_indices.push_back(static_cast<int>(q));
    res.ranked.push_back(std::move(valid));
    res.average_precision.push_back(ap);
    for (size_t k = static_cast<size_t>(first_hit); k < res.cmc.size(); ++k) res.cmc[k] += 1.0;
    res.mean_ap += ap;
  }

  const size_t evaluated = res.query_indices.size();
  if (evaluated > 0) {
    res.mean_ap /= evaluated;
    for (auto& c : res.cmc) c /= evaluated;
  }
  return res;
}

}  // namespace spanreid::evalkit
