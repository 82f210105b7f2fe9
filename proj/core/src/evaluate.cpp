#include "spanreid/evaluate.hpp"

#include <map>
#include <set>
#include <stdexcept>

namespace spanreid::evalkit {

void split_query_gallery(const synth::DatasetSplit& test, std::vector<int>* query_idx,
                         std::vector<int>* gallery_idx) {
  query_idx->clear();
  gallery_idx->clear();
  std::set<std::pair<int, int>> seen;
  for (size_t i = 0; i < test.samples.size(); ++i) {
    const auto& s = test.samples[i];
    if (seen.insert({s.identity_id, s.camera_id}).second) {
      query_idx->push_back(static_cast<int>(i));
    } else {
      gallery_idx->push_back(static_cast<int>(i));
    }
  }
}

ReidMetrics reid_metrics(const std::vector<partnet::FeatureRecord>& query,
                         const std::vector<partnet::FeatureRecord>& gallery, int dim,
                         partnet::DistanceMode mode, bool exclude_same_camera,
                         RankingResult* ranking_out) {
  std::vector<cpdm::FeatureEntry> q, g;
  std::vector<ImageMeta> qm, gm;
  for (const auto& r : query) {
    q.push_back(partnet::to_entry(r));
    qm.push_back({r.identity_id, r.camera_id});
  }
  for (const auto& r : gallery) {
    g.push_back(partnet::to_entry(r));
    gm.push_back({r.identity_id, r.camera_id});
  }
  const Eigen::MatrixXd dist = mode == partnet::DistanceMode::kCpdm
                                   ? cpdm::pairwise_distance_matrix(q, g, dim)
                                   : cpdm::pairwise_euclidean_matrix(q, g);
  const RankingResult res = evaluate_ranking(dist, qm, gm, exclude_same_camera);
  ReidMetrics out;
  out.rank1 = res.rank_k(1);
  out.rank5 = res.rank_k(5);
  out.mean_ap = res.mean_ap;
  out.n_query = static_cast<int>(query.size());
  out.n_gallery = static_cast<int>(gallery.size());
  out.n_skipped = static_cast<int>(res.skipped.size());
  if (ranking_out) *ranking_out = res;
  return out;
}

namespace {

// Shared batched inference loop over a split.
template <typename Fn>
void for_each_prediction(span::SpanNet& net, const synth::DatasetSplit& data, int batch_size,
                         Fn&& fn) {
  const int s = net.image_size();
  const int n = static_cast<int>(data.samples.size());
  for (int start = 0; start < n; start += batch_size) {
    const int bsz = std::min(batch_size, n - start);
    Tensor<float> images(bsz, 3, s, s);
    for (int b = 0; b < bsz; ++b) {
      const auto& img = data.samples[start + b].image;
      std::copy(img.data(), img.data() + img.size(), images.sample(b));
    }
    const Tensor<float> masks = net.forward(images, /*train=*/false);
    for (int b = 0; b < bsz; ++b) {
      Tensor<float> pred(1, net.n_views(), s, s);
      std::copy(masks.sample(b), masks.sample(b) + masks.sample_size(), pred.data());
      fn(data.samples[start + b], pred);
    }
  }
}

}  // namespace

MaskQualityReport evaluate_masks(span::SpanNet& net, const synth::DatasetSplit& data,
                                 double binarize_threshold, int batch_size) {
  if (data.n_views() != net.n_views())
    throw std::invalid_argument("evaluate_masks: view count mismatch");
  if (data.samples.empty() || data.samples[0].view_masks.empty())
    throw std::invalid_argument("evaluate_masks: split has no ground-truth masks");
  MaskQualityAccumulator acc(net.n_views(), binarize_threshold);
  for_each_prediction(net, data, batch_size,
                      [&](const synth::LoadedSample& sample, const Tensor<float>& pred) {
                        acc.add(pred, sample.view_masks, sample.foreground, sample.label);
                      });
  return acc.report();
}

double digit_localization_rate(span::SpanNet& net, const synth::DatasetSplit& data,
                               int batch_size) {
  if (data.n_views() != net.n_views())
    throw std::invalid_argument("digit_localization_rate: view count mismatch");
  if (data.samples.empty() || data.samples[0].view_masks.empty())
    throw std::invalid_argument("digit_localization_rate: split has no ground-truth masks");
  const int s = net.image_size();
  const size_t plane = static_cast<size_t>(s) * s;
  int hits = 0, total = 0;
  for_each_prediction(net, data, batch_size,
                      [&](const synth::LoadedSample& sample, const Tensor<float>& pred) {
                        bool all_inside = true;
                        for (int v = 0; v < net.n_views(); ++v) {
                          if (!sample.label.visible(v)) continue;
                          const BBox box = mask_bbox(sample.view_masks[v]);
                          const auto c = soft_centroid(pred.data() + v * plane, s, s);
                          if (box.empty() || !box.contains(c[0], c[1])) all_inside = false;
                        }
                        hits += all_inside;
                        ++total;
                      });
  return total > 0 ? double(hits) / total : 0.0;
}

}  // namespace spanreid::evalkit
