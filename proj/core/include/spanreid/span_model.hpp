#pragma once

// Mask network: a shared residual encoder (1/8 resolution) and one
// generator head per view. Each head is three generative blocks
// (2x transposed conv + batchnorm + ReLU) followed by a 1x1 projection
// and a sigmoid, so the masks come back at input resolution with values
// strictly inside (0,1).

#include <map>

#include "spanreid/config.hpp"
#include "spanreid/nn.hpp"

namespace spanreid::span {

class SpanNet {
 public:
  SpanNet(const SpanModelConfig& cfg, int n_views, int image_size, uint64_t seed);

  int n_views() const { return n_views_; }
  int image_size() const { return image_size_; }

  // images (N,3,H,W) -> masks (N, n_views, H, W)
  Tensor<float> forward(const Tensor<float>& images, bool train);
  // grad wrt masks -> grad wrt images (rarely needed; parameter grads
  // accumulate as a side effect)
  Tensor<float> backward(const Tensor<float>& grad_masks);

  std::vector<nn::Param<float>*> params();
  std::vector<nn::NamedTensor<float>> state();
  void load_state(const std::map<std::string, Tensor<float>>& tensors);

 private:
  struct Head {
    Head(int in_ch, const std::vector<int>& widths);
    Tensor<float> forward(const Tensor<float>& x, bool train);
    Tensor<float> backward(const Tensor<float>& gy);
    void init(Rng& rng);
    void collect_params(std::vector<nn::Param<float>*>& out);
    void collect_state(const std::string& prefix, std::vector<nn::NamedTensor<float>>& out);

    std::vector<nn::ConvTranspose2d<float>> deconvs;
    std::vector<nn::BatchNorm2d<float>> bns;
    std::vector<nn::ReLU<float>> relus;
    nn::Conv2d<float> proj;
    nn::Sigmoid<float> sigmoid;
  };

  SpanModelConfig cfg_;
  int n_views_, image_size_;
  nn::ResEncoder<float> encoder_;
  std::vector<Head> heads_;
};

}  // namespace spanreid::span
