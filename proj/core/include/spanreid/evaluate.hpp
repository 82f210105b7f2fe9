#pragma once

// Model-level evaluation: re-ID retrieval metrics over a test split,
// mask quality against the synthetic ground truth, and digit
// localization for the multi-digit variant.

#include "spanreid/feature_extract.hpp"
#include "spanreid/mask_eval.hpp"
#include "spanreid/ranking.hpp"
#include "spanreid/reid_losses.hpp"

namespace spanreid::evalkit {

// Standard query/gallery partition of a test split: the first image of
// every (identity, camera) pair becomes a query, the rest go to the
// gallery.
void split_query_gallery(const synth::DatasetSplit& test, std::vector<int>* query_idx,
                         std::vector<int>* gallery_idx);

struct ReidMetrics {
  double rank1 = 0.0, rank5 = 0.0, mean_ap = 0.0;
  int n_query = 0, n_gallery = 0, n_skipped = 0;
};

ReidMetrics reid_metrics(const std::vector<partnet::FeatureRecord>& query,
                         const std::vector<partnet::FeatureRecord>& gallery, int dim,
                         partnet::DistanceMode mode, bool exclude_same_camera = true,
                         RankingResult* ranking_out = nullptr);

// Runs the mask network over a split and scores the predictions:
// thresholded IoU per visible view, soft false-area ratio per invisible
// view.
MaskQualityReport evaluate_masks(span::SpanNet& net, const synth::DatasetSplit& data,
                                 double binarize_threshold, int batch_size = 32);

// Fraction of samples for which every visible digit's predicted-mask
// centroid lands inside that digit's ground-truth bounding box.
double digit_localization_rate(span::SpanNet& net, const synth::DatasetSplit& data,
                               int batch_size = 32);

}  // namespace spanreid::evalkit
