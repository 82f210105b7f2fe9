#include "spanreid/reid_train.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "spanreid/errors.hpp"
#include "spanreid/pk_sampler.hpp"

namespace spanreid::partnet {

ReidTrainResult train_reid(ReidNet& net, const synth::DatasetSplit& data,
                           const SpanOutputs* span_out, const ReidTrainConfig& cfg,
                           uint64_t seed, const std::function<void(const IterLog&)>& on_iteration) {
  if (data.samples.empty()) throw std::invalid_argument("train_reid: empty dataset");
  if (!net.global_only()) {
    if (!span_out) throw ConfigError("train_reid: mask network outputs required");
    if (span_out->pooled_masks.size() != data.samples.size())
      throw std::invalid_argument("train_reid: mask output count mismatch");
  }
  const DistanceMode mode =
      cfg.distance == "cpdm" ? DistanceMode::kCpdm : DistanceMode::kEuclidean;
  if (net.global_only() && mode == DistanceMode::kCpdm)
    throw ConfigError("train_reid: the global-only model has no parts for the cpdm distance");

  // identity ids -> contiguous class indices for the classifier
  const std::vector<int> ids = data.identities();
  std::map<int, int> class_of;
  for (size_t i = 0; i < ids.size(); ++i) class_of[ids[i]] = static_cast<int>(i);
  if (net.n_identities() != static_cast<int>(ids.size()))
    throw ConfigError("train_reid: classifier size does not match identity count");

  std::vector<int> identity_of_sample;
  identity_of_sample.reserve(data.samples.size());
  for (const auto& s : data.samples) identity_of_sample.push_back(s.identity_id);
  PKSampler sampler(identity_of_sample, cfg.batch_p, cfg.batch_k, Rng::mix(seed, 0xba7c4ULL));

  auto params = net.params();
  nn::Adam<float> adam(params, cfg.lr);

  const int s = net.image_size();
  const int map = net.map_size();
  const int d = net.feature_dim();

  ReidTrainResult result;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const std::vector<int> batch = sampler.next_batch();
    const int bsz = static_cast<int>(batch.size());
    Tensor<float> images(bsz, 3, s, s);
    Tensor<float> masks;
    if (!net.global_only()) masks = Tensor<float>(bsz, 3, map, map);
    std::vector<int> targets, batch_ids;
    std::vector<cpdm::AreaRatios> ars;
    for (int b = 0; b < bsz; ++b) {
      const auto& sample = data.samples[batch[b]];
      std::copy(sample.image.data(), sample.image.data() + sample.image.size(),
                images.sample(b));
      if (!net.global_only()) {
        const auto& pm = span_out->pooled_masks[batch[b]];
        std::copy(pm.data(), pm.data() + pm.size(), masks.sample(b));
        ars.push_back(span_out->ars[batch[b]]);
      }
      targets.push_back(class_of.at(sample.identity_id));
      batch_ids.push_back(sample.identity_id);
    }

    ReidNet::Output out = net.forward(images, masks, /*train=*/true);

    Tensor<float> gfeat(bsz, out.features.c(), 1, 1);
    Tensor<float> glogits(bsz, out.logits.c(), 1, 1);
    const float l_trip = batch_hard_triplet_loss(out.features, batch_ids, ars, d,
                                                 cfg.triplet_margin, mode, &gfeat,
                                                 cfg.lambda_trip);
    const float l_id = cross_entropy_loss(out.logits, targets, &glogits, cfg.lambda_id);
    const double total = cfg.lambda_trip * l_trip + cfg.lambda_id * l_id;
    if (!std::isfinite(total)) {
      std::ostringstream msg;
      msg << "train_reid: non-finite loss at iteration " << iter << "; samples:";
      for (int b : batch) msg << " " << data.samples[b].sample_id;
      throw NumericError(msg.str());
    }

    adam.zero_grad();
    net.backward(gfeat, glogits);
    if (cfg.grad_clip > 0) nn::clip_grad_norm(params, cfg.grad_clip);
    adam.step();

    IterLog log{iter, double(l_trip), double(l_id), total};
    result.log.push_back(log);
    if (on_iteration) on_iteration(log);
  }
  return result;
}

}  // namespace spanreid::partnet
