#include "spanreid/mask_eval.hpp"

#include <cmath>
#include <stdexcept>

namespace spanreid::evalkit {

double binary_iou(const Tensor<uint8_t>& a, const Tensor<uint8_t>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("binary_iou: shape mismatch");
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const bool pa = a[i] != 0, pb = b[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

MaskQualityAccumulator::MaskQualityAccumulator(int n_views, double threshold)
    : n_views_(n_views), threshold_(threshold), iou_sum_(n_views, 0.0),
      false_area_sum_(n_views, 0.0), visible_count_(n_views, 0),
      invisible_count_(n_views, 0), areas_(n_views) {}

void MaskQualityAccumulator::add(const Tensor<float>& pred,
                                 const std::vector<Tensor<uint8_t>>& gt,
                                 const Tensor<uint8_t>& fg, const SemanticLabel& label) {
  if (pred.c() != n_views_ || static_cast<int>(gt.size()) != n_views_ ||
      label.views() != n_views_)
    throw std::invalid_argument("MaskQualityAccumulator: view count mismatch");
  const int plane = pred.h() * pred.w();
  double fg_area = 0.0;
  for (size_t i = 0; i < fg.size(); ++i) fg_area += fg[i] != 0;

  for (int i = 0; i < n_views_; ++i) {
    const float* m = pred.data() + static_cast<size_t>(i) * plane;
    double mass = 0.0;
    for (int p = 0; p < plane; ++p) mass += m[p];
    if (label.visible(i)) {
      Tensor<uint8_t> bin(1, 1, pred.h(), pred.w());
      for (int p = 0; p < plane; ++p) bin[p] = m[p] >= threshold_ ? 1 : 0;
      iou_sum_[i] += binary_iou(bin, gt[i]);
      double gt_area = 0.0;
      for (size_t p = 0; p < gt[i].size(); ++p) gt_area += gt[i][p] != 0;
      areas_[i].push_back({mass, gt_area});
      ++visible_count_[i];
    } else {
      if (fg_area > 0.0) false_area_sum_[i] += mass / fg_area;
      ++invisible_count_[i];
    }
  }
}

MaskQualityReport MaskQualityAccumulator::report() const {
  MaskQualityReport r;
  r.visible_count = visible_count_;
  r.invisible_count = invisible_count_;
  for (int i = 0; i < n_views_; ++i) {
    r.mean_iou.push_back(visible_count_[i] > 0 ? iou_sum_[i] / visible_count_[i] : 0.0);
    r.false_area_ratio.push_back(
        invisible_count_[i] > 0 ? false_area_sum_[i] / invisible_count_[i] : 0.0);
    // Pearson correlation between predicted and true mask areas.
    const auto& pts = areas_[i];
    double corr = 0.0;
    if (pts.size() >= 2) {
      double mx = 0.0, my = 0.0;
      for (const auto& p : pts) {
        mx += p[0];
        my += p[1];
      }
      mx /= pts.size();
      my /= pts.size();
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (const auto& p : pts) {
        sxy += (p[0] - mx) * (p[1] - my);
        sxx += (p[0] - mx) * (p[0] - mx);
        syy += (p[1] - my) * (p[1] - my);
      }
      if (sxx > 0.0 && syy > 0.0) corr = sxy / std::sqrt(sxx * syy);
    }
    r.area_correlation.push_back(corr);
  }
  return r;
}

BBox mask_bbox(const Tensor<uint8_t>& mask) {
  BBox box;
  box.x0 = mask.w();
  box.y0 = mask.h();
  box.x1 = -1;
  box.y1 = -1;
  for (int y = 0; y < mask.h(); ++y) {
    for (int x = 0; x < mask.w(); ++x) {
      if (mask.at(0, 0, y, x) != 0) {
        box.x0 = std::min(box.x0, x);
        box.y0 = std::min(box.y0, y);
        box.x1 = std::max(box.x1, x);
        box.y1 = std::max(box.y1, y);
      }
    }
  }
  return box;
}

std::array<double, 2> soft_centroid(const float* mask, int h, int w) {
  double mass = 0.0, sx = 0.0, sy = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = mask[static_cast<size_t>(y) * w + x];
      mass += v;
      sx += v * x;
      sy += v * y;
    }
  }
  if (mass <= 0.0) return {-1.0, -1.0};
  return {sx / mass, sy / mass};
}

}  // namespace spanreid::evalkit
