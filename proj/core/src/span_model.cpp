#include "spanreid/span_model.hpp"

#include <stdexcept>

namespace spanreid::span {

SpanNet::Head::Head(int in_ch, const std::vector<int>& widths)
    : proj(widths.back(), 1, 1, 1, 0, /*bias=*/true) {
  int ch = in_ch;
  for (int w : widths) {
    deconvs.emplace_back(ch, w, 2, 2);
    bns.emplace_back(w);
    relus.emplace_back();
    ch = w;
  }
}

Tensor<float> SpanNet::Head::forward(const Tensor<float>& x, bool train) {
  Tensor<float> h = x;
  for (size_t i = 0; i < deconvs.size(); ++i) {
    h = relus[i].forward(bns[i].forward(deconvs[i].forward(h, train), train), train);
  }
  return sigmoid.forward(proj.forward(h, train), train);
}

Tensor<float> SpanNet::Head::backward(const Tensor<float>& gy) {
  Tensor<float> g = proj.backward(sigmoid.backward(gy));
  for (int i = static_cast<int>(deconvs.size()) - 1; i >= 0; --i) {
    g = deconvs[i].backward(bns[i].backward(relus[i].backward(g)));
  }
  return g;
}

void SpanNet::Head::init(Rng& rng) {
  for (auto& d : deconvs) d.init(rng);
  proj.init(rng);
}

void SpanNet::Head::collect_params(std::vector<nn::Param<float>*>& out) {
  for (size_t i = 0; i < deconvs.size(); ++i) {
    deconvs[i].collect_params(out);
    bns[i].collect_params(out);
  }
  proj.collect_params(out);
}

void SpanNet::Head::collect_state(const std::string& prefix,
                                  std::vector<nn::NamedTensor<float>>& out) {
  for (size_t i = 0; i < deconvs.size(); ++i) {
    deconvs[i].collect_state(prefix + ".deconv" + std::to_string(i), out);
    bns[i].collect_state(prefix + ".bn" + std::to_string(i), out);
  }
  proj.collect_state(prefix + ".proj", out);
}

SpanNet::SpanNet(const SpanModelConfig& cfg, int n_views, int image_size, uint64_t seed)
    : cfg_(cfg), n_views_(n_views), image_size_(image_size),
      encoder_(3, cfg.encoder_widths) {
  if (image_size % nn::ResEncoder<float>::downsample_factor() != 0)
    throw std::invalid_argument("SpanNet: image size must be a multiple of 8");
  if (n_views < 1) throw std::invalid_argument("SpanNet: need at least one view");
  // three 2x generative blocks bring the 1/8 encoder map back to full
  // resolution
  if (cfg.head_widths.size() != 3)
    throw std::invalid_argument("SpanNet: head_widths must have exactly 3 entries");
  for (int v = 0; v < n_views; ++v) {
    heads_.emplace_back(encoder_.out_channels(), cfg.head_widths);
  }
  Rng rng(Rng::mix(seed, 0x59a4ULL));
  encoder_.init(rng);
  for (auto& h : heads_) h.init(rng);
}

Tensor<float> SpanNet::forward(const Tensor<float>& images, bool train) {
  if (images.h() != image_size_ || images.w() != image_size_ || images.c() != 3)
    throw std::invalid_argument("SpanNet: input shape mismatch");
  const Tensor<float> feat = encoder_.forward(images, train);
  Tensor<float> masks(images.n(), n_views_, image_size_, image_size_);
  const size_t plane = static_cast<size_t>(image_size_) * image_size_;
  for (int v = 0; v < n_views_; ++v) {
    const Tensor<float> m = heads_[v].forward(feat, train);
    for (int s = 0; s < images.n(); ++s) {
      std::copy(m.sample(s), m.sample(s) + plane,
                masks.sample(s) + static_cast<size_t>(v) * plane);
    }
  }
  return masks;
}

Tensor<float> SpanNet::backward(const Tensor<float>& grad_masks) {
  const size_t plane = static_cast<size_t>(image_size_) * image_size_;
  Tensor<float> gfeat;
  for (int v = 0; v < n_views_; ++v) {
    Tensor<float> gm(grad_masks.n(), 1, image_size_, image_size_);
    for (int s = 0; s < grad_masks.n(); ++s) {
      std::copy(grad_masks.sample(s) + static_cast<size_t>(v) * plane,
                grad_masks.sample(s) + static_cast<size_t>(v + 1) * plane, gm.sample(s));
    }
    Tensor<float> g = heads_[v].backward(gm);
    if (gfeat.empty()) {
      gfeat = std::move(g);
    } else {
      for (size_t i = 0; i < gfeat.size(); ++i) gfeat[i] += g[i];
    }
  }
  return encoder_.backward(gfeat);
}

std::vector<nn::Param<float>*> SpanNet::params() {
  std::vector<nn::Param<float>*> out;
  encoder_.collect_params(out);
  for (auto& h : heads_) h.collect_params(out);
  return out;
}

std::vector<nn::NamedTensor<float>> SpanNet::state() {
  std::vector<nn::NamedTensor<float>> out;
  encoder_.collect_state("encoder", out);
  for (size_t v = 0; v < heads_.size(); ++v) {
    heads_[v].collect_state("head" + std::to_string(v), out);
  }
  return out;
}

void SpanNet::load_state(const std::map<std::string, Tensor<float>>& tensors) {
  for (auto& nt : state()) {
    auto it = tensors.find(nt.name);
    if (it == tensors.end())
      throw std::invalid_argument("SpanNet: checkpoint missing tensor " + nt.name);
    if (!it->second.same_shape(*nt.tensor))
      throw std::invalid_argument("SpanNet: checkpoint shape mismatch for " + nt.name);
    *nt.tensor = it->second;
  }
}

}  // namespace spanreid::span
