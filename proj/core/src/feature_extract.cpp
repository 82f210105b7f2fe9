#include "spanreid/feature_extract.hpp"

#include <stdexcept>

namespace spanreid::partnet {

SpanOutputs precompute_span_outputs(span::SpanNet& span, const synth::DatasetSplit& data,
                                    int map_size, int batch_size) {
  if (span.n_views() != 3)
    throw std::invalid_argument("precompute_span_outputs: expected a 3-view mask network");
  if (data.width != span.image_size() || data.height != span.image_size())
    throw std::invalid_argument("precompute_span_outputs: dataset/model image size mismatch");

  SpanOutputs out;
  const int s = span.image_size();
  const int factor = s / map_size;
  if (factor * map_size != s)
    throw std::invalid_argument("precompute_span_outputs: map size does not divide image size");

  const int n = static_cast<int>(data.samples.size());
  for (int start = 0; start < n; start += batch_size) {
    const int bsz = std::min(batch_size, n - start);
    Tensor<float> images(bsz, 3, s, s);
    for (int b = 0; b < bsz; ++b) {
      const auto& img = data.samples[start + b].image;
      std::copy(img.data(), img.data() + img.size(), images.sample(b));
    }
    const Tensor<float> masks = span.forward(images, /*train=*/false);
    const Tensor<float> pooled = nn::avg_downsample(masks, factor, factor);
    for (int b = 0; b < bsz; ++b) {
      Tensor<float> full(1, 3, s, s);
      std::copy(masks.sample(b), masks.sample(b) + masks.sample_size(), full.data());
      try {
        out.ars.push_back(cpdm::area_ratios(full));
      } catch (const std::invalid_argument&) {
        out.ars.push_back(cpdm::AreaRatios::uniform_fallback());
        ++out.degenerate_count;
      }
      Tensor<float> pm(1, 3, map_size, map_size);
      std::copy(pooled.sample(b), pooled.sample(b) + pooled.sample_size(), pm.data());
      out.pooled_masks.push_back(std::move(pm));
    }
  }
  return out;
}

std::vector<FeatureRecord> extract_features(ReidNet& net, const SpanOutputs* span_out,
                                            const synth::DatasetSplit& data, int batch_size) {
  if (!net.global_only()) {
    if (!span_out)
      throw std::invalid_argument("extract_features: mask outputs required for part branches");
    if (span_out->pooled_masks.size() != data.samples.size())
      throw std::invalid_argument("extract_features: mask output count mismatch");
  }
  const int n = static_cast<int>(data.samples.size());
  const int s = net.image_size();
  const int map = net.map_size();
  const int d = net.feature_dim();
  std::vector<FeatureRecord> records;
  records.reserve(n);
  for (int start = 0; start < n; start += batch_size) {
    const int bsz = std::min(batch_size, n - start);
    Tensor<float> images(bsz, 3, s, s);
    Tensor<float> masks;
    if (!net.global_only()) masks = Tensor<float>(bsz, 3, map, map);
    for (int b = 0; b < bsz; ++b) {
      const auto& img = data.samples[start + b].image;
      std::copy(img.data(), img.data() + img.size(), images.sample(b));
      if (!net.global_only()) {
        const auto& pm = span_out->pooled_masks[start + b];
        std::copy(pm.data(), pm.data() + pm.size(), masks.sample(b));
      }
    }
    const ReidNet::Output out = net.forward(images, masks, /*train=*/false);
    for (int b = 0; b < bsz; ++b) {
      FeatureRecord rec;
      const auto& sample = data.samples[start + b];
      rec.sample_id = sample.sample_id;
      rec.identity_id = sample.identity_id;
      rec.camera_id = sample.camera_id;
      rec.ar = net.global_only() ? cpdm::AreaRatios{} : span_out->ars[start + b];
      rec.f.assign(static_cast<size_t>(cpdm::kParts) * d, 0.0f);
      const float* src = out.features.sample(b);
      std::copy(src, src + net.n_parts() * d, rec.f.begin());
      records.push_back(std::move(rec));
    }
  }
  return records;
}

cpdm::FeatureEntry to_entry(const FeatureRecord& rec) {
  return {rec.f, rec.ar};
}

}  // namespace spanreid::partnet
