#pragma once

#include <filesystem>

#include "spanreid/dataset.hpp"
#include "spanreid/span_model.hpp"

namespace spanreid::evalkit {

// Writes one panel image per selected sample: the input, a heatmap per
// view mask annotated with its area ratio, and the label-gated
// reconstruction against the foreground mask. Samples are chosen
// deterministically from `seed`; n is clamped to the split size.
// Returns the number of panels written.
int export_mask_panels(span::SpanNet& net, const synth::DatasetSplit& data, int n,
                       uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace spanreid::evalkit
