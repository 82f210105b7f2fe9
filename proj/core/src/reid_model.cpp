#include "spanreid/reid_model.hpp"

#include <memory>
#include <stdexcept>

namespace spanreid::partnet {

Tensor<float> apply_mask_to_featuremap(const Tensor<float>& feature_map,
                                       const Tensor<float>& mask) {
  if (mask.n() != feature_map.n() || mask.c() != 1)
    throw std::invalid_argument("apply_mask_to_featuremap: expected a (N,1,H,W) mask");
  if (mask.h() % feature_map.h() != 0 || mask.w() % feature_map.w() != 0)
    throw std::invalid_argument(
        "apply_mask_to_featuremap: mask size is not an integer multiple of the feature map");
  const Tensor<float> pooled =
      nn::avg_downsample(mask, mask.h() / feature_map.h(), mask.w() / feature_map.w());
  Tensor<float> out(feature_map.n(), feature_map.c(), feature_map.h(), feature_map.w());
  const size_t plane = static_cast<size_t>(feature_map.h()) * feature_map.w();
  for (int s = 0; s < feature_map.n(); ++s) {
    const float* m = pooled.sample(s);
    for (int c = 0; c < feature_map.c(); ++c) {
      const float* src = feature_map.sample(s) + c * plane;
      float* dst = out.sample(s) + c * plane;
      for (size_t p = 0; p < plane; ++p) dst[p] = src[p] * m[p];
    }
  }
  return out;
}

ReidNet::Branch::Branch(int in_ch, int width, int dim)
    : conv(in_ch, width, 3, 1, 1), fc(width, dim) {}

Tensor<float> ReidNet::Branch::forward(const Tensor<float>& x, bool train) {
  return fc.forward(pool.forward(conv.forward(x, train), train), train);
}

Tensor<float> ReidNet::Branch::backward(const Tensor<float>& gy) {
  return conv.backward(pool.backward(fc.backward(gy)));
}

void ReidNet::Branch::init(Rng& rng) {
  conv.init(rng);
  fc.init(rng);
}

void ReidNet::Branch::collect_params(std::vector<nn::Param<float>*>& out) {
  conv.collect_params(out);
  fc.collect_params(out);
}

void ReidNet::Branch::collect_state(const std::string& prefix,
                                    std::vector<nn::NamedTensor<float>>& out) {
  conv.collect_state(prefix + ".conv", out);
  fc.collect_state(prefix + ".fc", out);
}

ReidNet::ReidNet(const ReidModelConfig& cfg, int image_size, int n_identities, uint64_t seed)
    : cfg_(cfg), image_size_(image_size), n_identities_(n_identities),
      identity_trunk_(cfg.trunk == "identity"),
      cls_bn_((cfg.global_only ? 1 : 4) * cfg.feature_dim),
      cls_fc_((cfg.global_only ? 1 : 4) * cfg.feature_dim, n_identities) {
  if (n_identities < 2) throw std::invalid_argument("ReidNet: need at least two identities");
  int trunk_ch = 3;
  if (!identity_trunk_) {
    if (image_size % nn::ResEncoder<float>::downsample_factor() != 0)
      throw std::invalid_argument("ReidNet: image size must be a multiple of 8");
    trunk_ = std::make_unique<nn::ResEncoder<float>>(3, cfg.trunk_widths);
    trunk_ch = trunk_->out_channels();
  }
  Rng rng(Rng::mix(seed, 0x7e1dULL));
  if (trunk_) trunk_->init(rng);
  const int n_br = n_parts();
  for (int i = 0; i < n_br; ++i) {
    branches_.emplace_back(trunk_ch, cfg.branch_width, cfg.feature_dim);
    branches_.back().init(rng);
  }
  cls_fc_.init(rng);
}

int ReidNet::map_size() const {
  return identity_trunk_ ? image_size_
                         : image_size_ / nn::ResEncoder<float>::downsample_factor();
}

ReidNet::Output ReidNet::forward(const Tensor<float>& images, const Tensor<float>& pooled_masks,
                                 bool train) {
  if (images.h() != image_size_ || images.w() != image_size_ || images.c() != 3)
    throw std::invalid_argument("ReidNet: input shape mismatch");
  const int n = images.n();
  trunk_out_ = trunk_ ? trunk_->forward(images, train) : images;
  const int map = trunk_out_.h();
  if (!cfg_.global_only) {
    if (pooled_masks.n() != n || pooled_masks.c() != 3 || pooled_masks.h() != map ||
        pooled_masks.w() != map)
      throw std::invalid_argument("ReidNet: pooled mask shape mismatch");
    masks_ = pooled_masks;
  }

  const int d = cfg_.feature_dim;
  Output out;
  out.features = Tensor<float>(n, n_parts() * d, 1, 1);
  const size_t mplane = static_cast<size_t>(map) * map;
  for (int b = 0; b < n_parts(); ++b) {
    Tensor<float> in = trunk_out_;
    if (b > 0) {
      // gate by the (b-1)-th view mask
      for (int s = 0; s < n; ++s) {
        const float* m = masks_.sample(s) + (b - 1) * mplane;
        for (int c = 0; c < in.c(); ++c) {
          float* dst = in.sample(s) + c * mplane;
          for (size_t p = 0; p < mplane; ++p) dst[p] *= m[p];
        }
      }
    }
    const Tensor<float> f = branches_[b].forward(in, train);
    for (int s = 0; s < n; ++s) {
      std::copy(f.sample(s), f.sample(s) + d, out.features.sample(s) + b * d);
    }
  }
  out.logits = cls_fc_.forward(cls_bn_.forward(out.features, train), train);
  return out;
}

void ReidNet::backward(const Tensor<float>& grad_features, const Tensor<float>& grad_logits) {
  const int n = grad_features.n();
  const int d = cfg_.feature_dim;
  const int map = trunk_out_.h();
  const size_t mplane = static_cast<size_t>(map) * map;

  Tensor<float> gfeat = grad_features;
  {
    const Tensor<float> gcls = cls_bn_.backward(cls_fc_.backward(grad_logits));
    for (size_t i = 0; i < gfeat.size(); ++i) gfeat[i] += gcls[i];
  }

  Tensor<float> gtrunk(n, trunk_out_.c(), map, map);
  for (int b = 0; b < n_parts(); ++b) {
    Tensor<float> gf(n, d, 1, 1);
    for (int s = 0; s < n; ++s) {
      std::copy(gfeat.sample(s) + b * d, gfeat.sample(s) + (b + 1) * d, gf.sample(s));
    }
    Tensor<float> gin = branches_[b].backward(gf);
    if (b > 0) {
      for (int s = 0; s < n; ++s) {
        const float* m = masks_.sample(s) + (b - 1) * mplane;
        for (int c = 0; c < gin.c(); ++c) {
          float* dst = gin.sample(s) + c * mplane;
          for (size_t p = 0; p < mplane; ++p) dst[p] *= m[p];
        }
      }
    }
    for (size_t i = 0; i < gtrunk.size(); ++i) gtrunk[i] += gin[i];
  }
  if (trunk_) trunk_->backward(gtrunk);
}

std::vector<nn::Param<float>*> ReidNet::params() {
  std::vector<nn::Param<float>*> out;
  if (trunk_) trunk_->collect_params(out);
  for (auto& b : branches_) b.collect_params(out);
  cls_bn_.collect_params(out);
  cls_fc_.collect_params(out);
  return out;
}

std::vector<nn::NamedTensor<float>> ReidNet::state() {
  std::vector<nn::NamedTensor<float>> out;
  if (trunk_) trunk_->collect_state("trunk", out);
  static const char* kNames[4] = {"global", "front", "rear", "side"};
  for (size_t b = 0; b < branches_.size(); ++b) {
    branches_[b].collect_state(std::string("branch_") + kNames[b], out);
  }
  cls_bn_.collect_state("classifier.bn", out);
  cls_fc_.collect_state("classifier.fc", out);
  return out;
}

void ReidNet::load_state(const std::map<std::string, Tensor<float>>& tensors) {
  for (auto& nt : state()) {
    auto it = tensors.find(nt.name);
    if (it == tensors.end())
      throw std::invalid_argument("ReidNet: checkpoint missing tensor " + nt.name);
    if (!it->second.same_shape(*nt.tensor))
      throw std::invalid_argument("ReidNet: checkpoint shape mismatch for " + nt.name);
    *nt.tensor = it->second;
  }
}

}  // namespace spanreid::partnet
