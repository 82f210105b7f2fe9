#pragma once

// Bridges between the frozen mask network, the part feature network and
// the retrieval pipeline: precomputed per-image mask data for stage-2
// training, and feature records for evaluation.

#include <filesystem>
#include <string>
#include <vector>

#include "spanreid/cpdm.hpp"
#include "spanreid/dataset.hpp"
#include "spanreid/reid_model.hpp"
#include "spanreid/span_model.hpp"

namespace spanreid::partnet {

// Frozen-SPAN byproducts for one split: attention masks pooled to the
// trunk grid plus each image's area ratios. Degenerate all-zero mask
// outputs fall back to uniform ratios; the count is reported so callers
// can warn.
struct SpanOutputs {
  std::vector<Tensor<float>> pooled_masks;  // (1, 3, map, map) each
  std::vector<cpdm::AreaRatios> ars;
  int degenerate_count = 0;
};

SpanOutputs precompute_span_outputs(span::SpanNet& span, const synth::DatasetSplit& data,
                                    int map_size, int batch_size = 32);

struct FeatureRecord {
  std::string sample_id;
  int identity_id = -1;
  int camera_id = 0;
  cpdm::AreaRatios ar;
  std::vector<float> f;  // always 4 * dim (zero-filled parts for the baseline)
};

// Runs the part network in inference mode over a split. `span_out` must
// be present unless the model is global-only.
std::vector<FeatureRecord> extract_features(ReidNet& net, const SpanOutputs* span_out,
                                            const synth::DatasetSplit& data,
                                            int batch_size = 32);

cpdm::FeatureEntry to_entry(const FeatureRecord& rec);

// Binary feature file: a short text header naming the feature dimension
// and record count, then little-endian records
// (sample_id, identity_id, camera_id, 4 area ratios, 4*dim floats).
void write_features(const std::filesystem::path& path, const std::vector<FeatureRecord>& records,
                    int dim);
std::vector<FeatureRecord> read_features(const std::filesystem::path& path, int* dim_out = nullptr);

}  // namespace spanreid::partnet
