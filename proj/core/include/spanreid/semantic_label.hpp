#pragma once

#include <cstdint>
#include <vector>

namespace spanreid {

// Vehicle view indices; the multi-digit variant uses indices 0..9 instead.
enum VehicleView : int { kFront = 0, kRear = 1, kSide = 2 };

// Image-level visibility vector: bit i says whether view i appears in the
// image. Vehicles use three views (front, rear, side); front and rear are
// never visible together.
class SemanticLabel {
 public:
  static SemanticLabel vehicle(bool front, bool rear, bool side);
  // Generic k-view label (multi-digit datasets). Must not be all-zero.
  static SemanticLabel from_bits(std::vector<uint8_t> bits);

  int views() const { return static_cast<int>(bits_.size()); }
  bool visible(int i) const { return bits_[i] != 0; }
  int visible_count() const;
  const std::vector<uint8_t>& bits() const { return bits_; }

  // Index into the five vehicle label classes:
  // 0 front, 1 rear, 2 side, 3 front-side, 4 rear-side. Vehicle labels only.
  int vehicle_class() const;
  static constexpr int kVehicleClasses = 5;

  bool operator==(const SemanticLabel& o) const { return bits_ == o.bits_; }

 private:
  explicit SemanticLabel(std::vector<uint8_t> bits) : bits_(std::move(bits)) {}
  std::vector<uint8_t> bits_;
};

}  // namespace spanreid
