#include "spanreid/semantic_label.hpp"

#include <stdexcept>

namespace spanreid {

SemanticLabel SemanticLabel::vehicle(bool front, bool rear, bool side) {
  if (!front && !rear && !side)
    throw std::invalid_argument("SemanticLabel: at least one view must be visible");
  if (front && rear)
    throw std::invalid_argument("SemanticLabel: front and rear are mutually exclusive");
  return SemanticLabel({uint8_t(front), uint8_t(rear), uint8_t(side)});
}

SemanticLabel SemanticLabel::from_bits(std::vector<uint8_t> bits) {
  if (bits.empty()) throw std::invalid_argument("SemanticLabel: empty bit vector");
  bool any = false;
  for (auto& b : bits) {
    if (b > 1) throw std::invalid_argument("SemanticLabel: bits must be 0 or 1");
    any = any || b;
  }
  if (!any) throw std::invalid_argument("SemanticLabel: at least one view must be visible");
  return SemanticLabel(std::move(bits));
}

int SemanticLabel::visible_count() const {
  int n = 0;
  for (auto b : bits_) n += b;
  return n;
}

int SemanticLabel::vehicle_class() const {
  if (bits_.size() != 3) throw std::logic_error("vehicle_class: not a vehicle label");
  const bool f = bits_[0], r = bits_[1], s = bits_[2];
  if (f && !s) return 0;
  if (r && !s) return 1;
  if (s && !f && !r) return 2;
  if (f && s) return 3;
  return 4;  // rear-side
}

}  // namespace spanreid
