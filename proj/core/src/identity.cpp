#include "spanreid/rng.hpp"
#include "spanreid/synth.hpp"

namespace spanreid::synth {

namespace {
constexpr uint64_t kIdentitySalt = 0x1d5a11e5u;
}

// Shared color palette; backgrounds and clutter draw from the same set.
const std::array<std::array<float, 3>, 8>& color_palette() {
  static const std::array<std::array<float, 3>, 8> kPalette = {{
      {0.82f, 0.10f, 0.12f},  // red
      {0.12f, 0.30f, 0.72f},  // blue
      {0.90f, 0.90f, 0.88f},  // white
      {0.15f, 0.15f, 0.16f},  // black
      {0.55f, 0.56f, 0.58f},  // silver
      {0.10f, 0.48f, 0.22f},  // green
      {0.85f, 0.62f, 0.10f},  // yellow
      {0.45f, 0.22f, 0.55f},  // purple
  }};
  return kPalette;
}

IdentitySpec make_identity(int identity_id, uint64_t dataset_seed) {
  Rng rng(Rng::mix(Rng::mix(dataset_seed, kIdentitySalt), static_cast<uint64_t>(identity_id)));
  IdentitySpec spec;
  spec.identity_id = identity_id;
  const auto& palette = color_palette();
  const auto& base = palette[rng.uniform_int(0, static_cast<int>(palette.size()) - 1)];
  for (int i = 0; i < 3; ++i) {
    spec.body_color[i] = std::min(1.0f, std::max(0.0f, base[i] + static_cast<float>(rng.uniform(-0.05, 0.05))));
  }
  spec.body_aspect[0] = static_cast<float>(rng.uniform(1.7, 2.6));  // length
  spec.body_aspect[1] = static_cast<float>(rng.uniform(0.9, 1.3));  // width
  spec.body_aspect[2] = static_cast<float>(rng.uniform(0.75, 1.25));  // height
  spec.face_texture_seed = rng.next_u64();
  return spec;
}

}  // namespace spanreid::synth
