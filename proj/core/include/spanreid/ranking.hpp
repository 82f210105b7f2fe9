#pragma once

#include <Eigen/Dense>
#include <vector>

namespace spanreid::evalkit {

struct ImageMeta {
  int identity_id = -1;
  int camera_id = -1;
};

struct RankingResult {
  // One entry per *evaluated* query (queries with no valid positive are
  // skipped and listed in `skipped`).
  std::vector<int> query_indices;
  std::vector<std::vector<int>> ranked;  // valid gallery indices, best first
  std::vector<double> average_precision;
  std::vector<int> skipped;
  std::vector<double> cmc;  // cmc[k-1] = rank-k accuracy
  double mean_ap = 0.0;

  double rank_k(int k) const { return cmc.empty() ? 0.0 : cmc[std::min<size_t>(k, cmc.size()) - 1]; }
};

// Cross-camera retrieval protocol: gallery entries sharing both identity
// and camera with the query are excluded (unless disabled), distances are
// ranked with ties broken by stable gallery order, AP averages precision
// at each true positive, and CMC counts the first correct rank.
RankingResult evaluate_ranking(const Eigen::MatrixXd& dist,
                               const std::vector<ImageMeta>& query,
                               const std::vector<ImageMeta>& gallery,
                               bool exclude_same_camera = true);

}  // namespace spanreid::evalkit
