#pragma once

// Part feature extraction (stage 2). One shared trunk; four independent
// branches produce the global and per-view features. The view branches
// see the trunk feature map gated by the (pooled) attention masks. The
// identity classifier is a batchnorm plus a linear map over the
// concatenated feature.

#include <map>
#include <memory>

#include "spanreid/config.hpp"
#include "spanreid/nn.hpp"

namespace spanreid::partnet {

// Average-pools `mask` down to the feature map grid and multiplies every
// channel with it. Mask dimensions must be integer multiples of the
// feature map's.
Tensor<float> apply_mask_to_featuremap(const Tensor<float>& feature_map,
                                       const Tensor<float>& mask);

class ReidNet {
 public:
  ReidNet(const ReidModelConfig& cfg, int image_size, int n_identities, uint64_t seed);

  int n_parts() const { return cfg_.global_only ? 1 : 4; }
  int feature_dim() const { return cfg_.feature_dim; }
  int image_size() const { return image_size_; }
  int n_identities() const { return n_identities_; }
  bool global_only() const { return cfg_.global_only; }
  // side length of the trunk output grid
  int map_size() const;

  struct Output {
    Tensor<float> features;  // (N, n_parts * D)
    Tensor<float> logits;    // (N, n_identities)
  };

  // pooled_masks: (N, 3, map, map) attention masks at trunk resolution;
  // ignored (may be empty) for the global-only variant.
  Output forward(const Tensor<float>& images, const Tensor<float>& pooled_masks, bool train);
  void backward(const Tensor<float>& grad_features, const Tensor<float>& grad_logits);

  std::vector<nn::Param<float>*> params();
  std::vector<nn::NamedTensor<float>> state();
  void load_state(const std::map<std::string, Tensor<float>>& tensors);

 private:
  struct Branch {
    Branch(int in_ch, int width, int dim);
    Tensor<float> forward(const Tensor<float>& x, bool train);
    Tensor<float> backward(const Tensor<float>& gy);
    void init(Rng& rng);
    void collect_params(std::vector<nn::Param<float>*>& out);
    void collect_state(const std::string& prefix, std::vector<nn::NamedTensor<float>>& out);

    nn::ConvBnRelu<float> conv;
    nn::GlobalAvgPool<float> pool;
    nn::Linear<float> fc;
  };

  ReidModelConfig cfg_;
  int image_size_, n_identities_;
  bool identity_trunk_;
  std::unique_ptr<nn::ResEncoder<float>> trunk_;
  std::vector<Branch> branches_;
  nn::BatchNorm2d<float> cls_bn_;
  nn::Linear<float> cls_fc_;

  // forward caches for the gated backward pass
  Tensor<float> trunk_out_;
  Tensor<float> masks_;
};

}  // namespace spanreid::partnet
