#pragma once

// Mask-quality measurements against the synthetic ground truth: IoU of
// thresholded predictions for visible views, false-area ratio (soft mask
// mass over foreground mass) for invisible ones, and the correlation of
// predicted vs true mask areas.

#include <array>
#include <vector>

#include "spanreid/semantic_label.hpp"
#include "spanreid/tensor.hpp"

namespace spanreid::evalkit {

// Intersection-over-union of two binary masks; 1.0 when both are empty.
double binary_iou(const Tensor<uint8_t>& a, const Tensor<uint8_t>& b);

struct MaskQualityReport {
  std::vector<double> mean_iou;          // per view, over samples where visible
  std::vector<double> false_area_ratio;  // per view, over samples where invisible
  std::vector<double> area_correlation;  // per view, pred vs gt area (visible samples)
  std::vector<int> visible_count;
  std::vector<int> invisible_count;
};

// Streaming accumulator so callers can feed predictions sample by sample.
class MaskQualityAccumulator {
 public:
  MaskQualityAccumulator(int n_views, double threshold);

  // pred: (1, K, H, W) soft masks; gt: K binary view masks; fg: binary
  // foreground.
  void add(const Tensor<float>& pred, const std::vector<Tensor<uint8_t>>& gt,
           const Tensor<uint8_t>& fg, const SemanticLabel& label);

  MaskQualityReport report() const;

 private:
  int n_views_;
  double threshold_;
  std::vector<double> iou_sum_;
  std::vector<double> false_area_sum_;
  std::vector<int> visible_count_, invisible_count_;
  // per view: paired (pred area, gt area) samples for the correlation
  std::vector<std::vector<std::array<double, 2>>> areas_;
};

struct BBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive; empty when x1 < x0
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  bool empty() const { return x1 < x0 || y1 < y0; }
};

BBox mask_bbox(const Tensor<uint8_t>& mask);

// Mass-weighted centroid (x, y) of a soft mask plane; (-1, -1) when the
// mask is all zero.
std::array<double, 2> soft_centroid(const float* mask, int h, int w);

}  // namespace spanreid::evalkit
