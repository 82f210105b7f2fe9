#include "spanreid/span_train.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "spanreid/errors.hpp"

namespace spanreid::span {

std::vector<int> epoch_order(const synth::DatasetSplit& data, bool balanced, Rng& rng) {
  std::vector<int> order;
  if (balanced && data.n_views() == 3) {
    std::map<int, std::vector<int>> by_class;
    for (size_t i = 0; i < data.samples.size(); ++i) {
      by_class[data.samples[i].label.vehicle_class()].push_back(static_cast<int>(i));
    }
    // oversample each class to the largest class size so an epoch keeps
    // the full dataset's worth of updates
    size_t per_class = 0;
    for (auto& [cls, idx] : by_class) per_class = std::max(per_class, idx.size());
    for (auto& [cls, idx] : by_class) {
      rng.shuffle(idx);
      for (size_t k = 0; k < per_class; ++k) order.push_back(idx[k % idx.size()]);
    }
  } else {
    order.resize(data.samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  }
  rng.shuffle(order);
  return order;
}

SpanTrainResult train_span(SpanNet& net, const synth::DatasetSplit& data,
                           const SpanTrainConfig& cfg, uint64_t seed,
                           const std::function<void(const EpochLog&)>& on_epoch) {
  if (data.samples.empty()) throw std::invalid_argument("train_span: empty dataset");
  if (data.n_views() != net.n_views())
    throw std::invalid_argument("train_span: dataset/model view count mismatch");

  const int n_views = net.n_views();
  const AreaRatioTable area_table =
      n_views == 3 ? AreaRatioTable::vehicle(cfg.two_view_area_ratio)
                   : AreaRatioTable::uniform_slack(n_views, cfg.digit_area_slack);
  const MarginTable margins = n_views == 3 ? MarginTable::vehicle(cfg.adjacent_margin)
                                           : MarginTable::uniform(n_views, cfg.digit_margin);
  const LossWeights weights{cfg.lambda_recon, cfg.lambda_area, cfg.lambda_div};

  auto params = net.params();
  nn::Adam<float> adam(params, cfg.lr);
  Rng order_rng(Rng::mix(seed, 0xe90c4ULL));

  const int s = net.image_size();
  const size_t plane = static_cast<size_t>(s) * s;

  SpanTrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = epoch_order(data, cfg.balanced_viewpoints, order_rng);
    EpochLog log;
    log.epoch = epoch;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const int bsz = static_cast<int>(std::min<size_t>(cfg.batch_size, order.size() - start));
      if (bsz < 2) continue;  // batchnorm needs more than one sample
      Tensor<float> images(bsz, 3, s, s);
      Tensor<float> fg(bsz, 1, s, s);
      std::vector<SemanticLabel> labels;
      labels.reserve(bsz);
      for (int b = 0; b < bsz; ++b) {
        const auto& sample = data.samples[order[start + b]];
        std::copy(sample.image.data(), sample.image.data() + sample.image.size(),
                  images.sample(b));
        for (size_t p = 0; p < plane; ++p) fg.sample(b)[p] = sample.foreground[p];
        labels.push_back(sample.label);
      }

      Tensor<float> masks = net.forward(images, /*train=*/true);
      Tensor<float> gmasks(bsz, n_views, s, s);
      const LossBreakdown<float> loss =
          span_total_loss(masks, fg, labels, area_table, margins, weights, &gmasks);
      if (!std::isfinite(loss.total)) {
        std::ostringstream msg;
        msg << "train_span: non-finite loss at epoch " << epoch << ", batch "
            << batches << "; samples:";
        for (int b = 0; b < bsz; ++b) msg << " " << data.samples[order[start + b]].sample_id;
        throw NumericError(msg.str());
      }

      adam.zero_grad();
      net.backward(gmasks);
      if (cfg.grad_clip > 0) nn::clip_grad_norm(params, cfg.grad_clip);
      adam.step();

      log.recon += loss.recon;
      log.area += loss.area;
      log.div += loss.div;
      log.total += loss.total;
      ++batches;
    }
    if (batches == 0) throw std::invalid_argument("train_span: no full batch in dataset");
    log.recon /= batches;
    log.area /= batches;
    log.div /= batches;
    log.total /= batches;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace spanreid::span
