#pragma once

#include <functional>

#include "spanreid/feature_extract.hpp"
#include "spanreid/reid_losses.hpp"

namespace spanreid::partnet {

struct IterLog {
  int iteration = 0;
  double trip = 0.0, id = 0.0, total = 0.0;
};

struct ReidTrainResult {
  std::vector<IterLog> log;
};

// Stage-2 training over PK batches: lambda_trip * L_trip + lambda_id *
// L_ID, with the triplet distances taken from the configured metric. The
// mask network is not touched (its outputs arrive precomputed in
// span_out; pass nullptr for the global-only baseline).
ReidTrainResult train_reid(ReidNet& net, const synth::DatasetSplit& data,
                           const SpanOutputs* span_out, const ReidTrainConfig& cfg,
                           uint64_t seed,
                           const std::function<void(const IterLog&)>& on_iteration = {});

}  // namespace spanreid::partnet
