#pragma once

// Procedural dataset generation: box-shaped "vehicles" with per-face
// procedural textures on cluttered backgrounds, and multi-digit images.
// Every render is a pure function of its arguments, and ground-truth
// view masks fall out of the rasterization (pairwise disjoint, union
// equal to the foreground).

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spanreid/semantic_label.hpp"
#include "spanreid/tensor.hpp"

namespace spanreid::synth {

struct IdentitySpec {
  int identity_id = 0;
  std::array<float, 3> body_color{0.5f, 0.5f, 0.5f};
  std::array<float, 3> body_aspect{2.0f, 1.0f, 0.9f};  // length, width, height
  uint64_t face_texture_seed = 0;
};

struct LabeledSample {
  explicit LabeledSample(SemanticLabel l) : label(std::move(l)) {}

  Tensor<float> image;  // (1,3,H,W) RGB in [0,1]
  int identity_id = -1;
  int camera_id = 0;
  double orientation_deg = 0.0;
  SemanticLabel label;
  Tensor<uint8_t> foreground;                // (1,1,H,W)
  std::vector<Tensor<uint8_t>> view_masks;   // per view, (1,1,H,W)
};

// Orientation convention: 0 deg = camera facing the front of the vehicle,
// 90 deg = pure right side, 180 deg = pure rear. Faces whose viewing
// angle is within `margin_deg` of grazing count as invisible.
SemanticLabel derive_semantic_label(double orientation_deg, double margin_deg = 10.0);

struct VehicleRenderConfig {
  int image_size = 96;
  double visibility_margin_deg = 10.0;
  double fov_deg = 30.0;
  int background_shapes = 6;
  double occluder_prob = 0.25;
  double noise_stddev = 0.02;
};

// Deterministic identity synthesis: same (id, dataset_seed) -> same spec.
// Body colors come from a small shared palette so that color alone does
// not identify a vehicle; the per-face textures carry the identity.
IdentitySpec make_identity(int identity_id, uint64_t dataset_seed);

LabeledSample render_vehicle_sample(const IdentitySpec& spec, double orientation_deg,
                                    int camera_id, uint64_t render_seed,
                                    const VehicleRenderConfig& cfg = {});

struct DigitRenderConfig {
  int image_size = 96;
  double noise_stddev = 0.02;
  int max_place_attempts = 100;
  // glyph height as a fraction of the image side
  double min_glyph_frac = 0.20;
  double max_glyph_frac = 0.34;
};

// Multi-digit analog: ten views, one per digit class. The semantic label
// bit d is set iff digit d appears; its ground-truth mask covers exactly
// that glyph's pixels.
LabeledSample render_multidigit_sample(const std::vector<int>& visible_digits,
                                       uint64_t layout_seed,
                                       const DigitRenderConfig& cfg = {});

}  // namespace spanreid::synth
