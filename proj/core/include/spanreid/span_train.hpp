#pragma once

#include <functional>

#include "spanreid/dataset.hpp"
#include "spanreid/span_losses.hpp"
#include "spanreid/span_model.hpp"

namespace spanreid::span {

struct EpochLog {
  int epoch = 0;
  double recon = 0.0, area = 0.0, div = 0.0, total = 0.0;
};

struct SpanTrainResult {
  std::vector<EpochLog> log;
};

// Epoch ordering used by the trainer. With balanced on (vehicle data),
// the epoch holds the same number of samples from every label class;
// otherwise it is a plain shuffle of the whole split.
std::vector<int> epoch_order(const synth::DatasetSplit& data, bool balanced, Rng& rng);

// Stage-1 training: minimizes the weighted sum of the three mask losses
// over the split. With balanced_viewpoints on (vehicle data), each epoch
// draws the same number of samples from every label class. Aborts with
// NumericError naming the offending batch if the loss goes non-finite.
SpanTrainResult train_span(SpanNet& net, const synth::DatasetSplit& data,
                           const SpanTrainConfig& cfg, uint64_t seed,
                           const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace spanreid::span
