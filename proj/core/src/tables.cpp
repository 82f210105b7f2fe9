#include "spanreid/tables.hpp"

#include <algorithm>
#include <stdexcept>

namespace spanreid::span {

AreaRatioTable AreaRatioTable::vehicle(double two_view_ratio) {
  if (two_view_ratio < 0.0 || two_view_ratio > 1.0)
    throw std::invalid_argument("AreaRatioTable: ratio must be in [0,1]");
  AreaRatioTable t;
  t.n_views_ = 3;
  t.vehicle_mode_ = true;
  t.two_view_ratio_ = two_view_ratio;
  return t;
}

AreaRatioTable AreaRatioTable::uniform_slack(int n_views, double slack) {
  if (n_views < 1) throw std::invalid_argument("AreaRatioTable: need >= 1 view");
  AreaRatioTable t;
  t.n_views_ = n_views;
  t.vehicle_mode_ = false;
  t.slack_ = slack;
  return t;
}

std::vector<double> AreaRatioTable::caps(const SemanticLabel& label) const {
  if (label.views() != n_views_)
    throw std::invalid_argument("AreaRatioTable: label view count mismatch");
  std::vector<double> a(n_views_, 0.0);
  if (vehicle_mode_) {
    // Five label classes: single-view rows are one-hot with cap 1, the
    // two-view rows cap both visible views at two_view_ratio_.
    const bool two_view = label.visible_count() == 2;
    for (int i = 0; i < n_views_; ++i) {
      if (!label.visible(i)) continue;
      a[i] = two_view ? two_view_ratio_ : 1.0;
    }
  } else {
    const double cap = std::min(1.0, slack_ / label.visible_count());
    for (int i = 0; i < n_views_; ++i) {
      if (label.visible(i)) a[i] = cap;
    }
  }
  return a;
}

MarginTable MarginTable::vehicle(double adjacent_margin) {
  if (adjacent_margin < 0.0)
    throw std::invalid_argument("MarginTable: margins must be non-negative");
  MarginTable t;
  t.n_views_ = 3;
  t.m_.assign(9, 0.0);
  // (front, side) and (rear, side) tolerate a small overlap; (front, rear)
  // tolerates none.
  auto set = [&t](int i, int j, double v) {
    t.m_[i * 3 + j] = v;
    t.m_[j * 3 + i] = v;
  };
  set(kFront, kRear, 0.0);
  set(kFront, kSide, adjacent_margin);
  set(kRear, kSide, adjacent_margin);
  return t;
}

MarginTable MarginTable::uniform(int n_views, double margin) {
  if (n_views < 1) throw std::invalid_argument("MarginTable: need >= 1 view");
  if (margin < 0.0) throw std::invalid_argument("MarginTable: margins must be non-negative");
  MarginTable t;
  t.n_views_ = n_views;
  t.m_.assign(static_cast<size_t>(n_views) * n_views, margin);
  for (int i = 0; i < n_views; ++i) t.m_[i * n_views + i] = 0.0;
  return t;
}

double MarginTable::margin(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_views_ || j >= n_views_)
    throw std::invalid_argument("MarginTable: view index out of range");
  return m_[i * n_views_ + j];
}

}  // namespace spanreid::span
