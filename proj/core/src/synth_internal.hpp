#pragma once

#include <array>

namespace spanreid::synth {

// Shared 8-color palette; vehicle bodies, glyphs and background clutter
// all draw from it so color alone is a weak identity cue.
const std::array<std::array<float, 3>, 8>& color_palette();

}  // namespace spanreid::synth
