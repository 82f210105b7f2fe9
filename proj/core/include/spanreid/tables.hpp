#pragma once

#include <vector>

#include "spanreid/semantic_label.hpp"

namespace spanreid::span {

// Per-viewpoint maximum area ratios for the area constraint: a cap on
// ||M_i||_1 / ||V||_1 for each view under a given label. Invisible views
// are capped at 0, sole visible views at 1, and the two views of a
// two-view vehicle label at `two_view_ratio` (0.7 by default).
class AreaRatioTable {
 public:
  static AreaRatioTable vehicle(double two_view_ratio = 0.7);
  // Generic rule for k-view labels (multi-digit): visible views get
  // min(1, slack / #visible), invisible views get 0. slack=1.4 reproduces
  // the vehicle two-view cap.
  static AreaRatioTable uniform_slack(int n_views, double slack = 1.4);

  std::vector<double> caps(const SemanticLabel& label) const;
  int views() const { return n_views_; }
  double two_view_ratio() const { return two_view_ratio_; }

 private:
  int n_views_ = 3;
  bool vehicle_mode_ = true;
  double two_view_ratio_ = 0.7;
  double slack_ = 1.4;
};

// Pairwise overlap margins for the spatial diversity loss. Symmetric,
// non-negative; the mutually exclusive front/rear pair gets 0 and the
// adjacent pairs a small positive tolerance.
class MarginTable {
 public:
  static MarginTable vehicle(double adjacent_margin = 0.04);
  static MarginTable uniform(int n_views, double margin);

  double margin(int i, int j) const;
  int views() const { return n_views_; }

 private:
  int n_views_ = 3;
  std::vector<double> m_;  // row-major n_views x n_views
};

}  // namespace spanreid::span
