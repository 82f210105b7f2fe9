#include <doctest.h>

#include <functional>

#include "spanreid/nn.hpp"

using namespace spanreid;
using nn::Param;

namespace {

Tensor<double> random_tensor(int n, int c, int h, int w, Rng& rng, double lo = -1.0,
                             double hi = 1.0) {
  Tensor<double> t(n, c, h, w);
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Checks d(dot(forward(x), r))/dx and the parameter gradients against
// central differences.
template <typename Layer>
void check_layer_gradients(Layer& layer, Tensor<double> x, Rng& rng, double tol = 1e-5) {
  Tensor<double> y = layer.forward(x, /*train=*/true);
  Tensor<double> r = random_tensor(y.n(), y.c(), y.h(), y.w(), rng);

  std::vector<Param<double>*> params;
  layer.collect_params(params);
  for (auto* p : params) p->zero_grad();
  layer.forward(x, true);
  Tensor<double> gx = layer.backward(r);

  auto loss_at = [&]() { return dot(layer.forward(x, true), r); };

  const double h = 1e-6;
  // input gradient
  for (size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = loss_at();
    x[i] = orig - h;
    const double fm = loss_at();
    x[i] = orig;
    const double fd = (fp - fm) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(gx[i]), 1e-6});
    CHECK(std::abs(fd - gx[i]) / denom < tol);
  }
  // parameter gradients
  for (auto* p : params) {
    for (size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double fp = loss_at();
      p->value[i] = orig - h;
      const double fm = loss_at();
      p->value[i] = orig;
      const double fd = (fp - fm) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(p->grad[i]), 1e-6});
      CHECK(std::abs(fd - p->grad[i]) / denom < tol);
    }
  }
}

}  // namespace

TEST_CASE("conv2d known value") {
  nn::Conv2d<double> conv(1, 1, 2, 1, 0);
  std::vector<Param<double>*> params;
  conv.collect_params(params);
  params[0]->value.fill(1.0);  // weight
  Tensor<double> x(1, 1, 2, 2);
  x[0] = 1;
  x[1] = 2;
  x[2] = 3;
  x[3] = 4;
  Tensor<double> y = conv.forward(x, false);
  CHECK(y.size() == 1);
  CHECK(y[0] == doctest::Approx(10.0));
}

TEST_CASE("conv2d gradients (stride 2, padded)") {
  Rng rng(101);
  nn::Conv2d<double> conv(2, 3, 3, 2, 1);
  conv.init(rng);
  check_layer_gradients(conv, random_tensor(2, 2, 5, 5, rng), rng);
}

TEST_CASE("conv2d 1x1 gradients") {
  Rng rng(102);
  nn::Conv2d<double> conv(3, 2, 1, 1, 0);
  conv.init(rng);
  check_layer_gradients(conv, random_tensor(2, 3, 3, 3, rng), rng);
}

TEST_CASE("conv-transpose upsamples 2x and matches finite differences") {
  Rng rng(103);
  nn::ConvTranspose2d<double> deconv(3, 2, 2, 2);
  deconv.init(rng);
  Tensor<double> x = random_tensor(2, 3, 3, 3, rng);
  Tensor<double> y = deconv.forward(x, true);
  CHECK(y.h() == 6);
  CHECK(y.w() == 6);
  CHECK(y.c() == 2);
  check_layer_gradients(deconv, x, rng);
}

TEST_CASE("batchnorm train-mode gradients") {
  Rng rng(104);
  nn::BatchNorm2d<double> bn(3);
  std::vector<Param<double>*> params;
  bn.collect_params(params);
  // move gamma/beta off their init so grads are generic
  for (size_t i = 0; i < params[0]->value.size(); ++i) {
    params[0]->value[i] = 0.5 + 0.2 * double(i);
    params[1]->value[i] = 0.1 * double(i);
  }
  check_layer_gradients(bn, random_tensor(3, 3, 4, 4, rng), rng, 1e-4);
}

TEST_CASE("batchnorm eval output is independent of batch composition") {
  Rng rng(105);
  nn::BatchNorm2d<float> bn(2);
  // establish nontrivial running stats
  Tensor<float> warm(8, 2, 3, 3);
  for (size_t i = 0; i < warm.size(); ++i) warm[i] = float(rng.uniform(-2.0, 2.0));
  bn.forward(warm, true);

  Tensor<float> one(1, 2, 3, 3);
  for (size_t i = 0; i < one.size(); ++i) one[i] = float(rng.uniform(-1.0, 1.0));
  const Tensor<float> alone = bn.forward(one, false);

  Tensor<float> batch(4, 2, 3, 3);
  for (size_t i = 0; i < batch.size(); ++i) batch[i] = float(rng.uniform(-1.0, 1.0));
  std::copy(one.data(), one.data() + one.size(), batch.sample(2));
  const Tensor<float> mixed = bn.forward(batch, false);
  for (size_t i = 0; i < one.size(); ++i) {
    CHECK(mixed.sample(2)[i] == alone[i]);
  }
}

TEST_CASE("linear gradients") {
  Rng rng(106);
  nn::Linear<double> fc(6, 4);
  fc.init(rng);
  check_layer_gradients(fc, random_tensor(3, 6, 1, 1, rng), rng);
}

TEST_CASE("global average pool gradients and value") {
  Rng rng(107);
  nn::GlobalAvgPool<double> pool;
  Tensor<double> x(1, 1, 2, 2);
  x[0] = 1;
  x[1] = 2;
  x[2] = 3;
  x[3] = 6;
  CHECK(pool.forward(x, false)[0] == doctest::Approx(3.0));
}

TEST_CASE("residual block gradients") {
  Rng rng(108);
  nn::ResidualBlock<double> block(3);
  block.init(rng);
  check_layer_gradients(block, random_tensor(2, 3, 4, 4, rng), rng, 1e-4);
}

TEST_CASE("encoder downsamples by 8 and backpropagates") {
  Rng rng(109);
  nn::ResEncoder<double> enc(3, {2, 3, 4, 5});
  enc.init(rng);
  Tensor<double> x = random_tensor(2, 3, 16, 16, rng);
  Tensor<double> y = enc.forward(x, true);
  CHECK(y.h() == 2);
  CHECK(y.w() == 2);
  CHECK(y.c() == 5);
  Tensor<double> r = random_tensor(2, 5, 2, 2, rng);
  Tensor<double> gx = enc.backward(r);
  CHECK(gx.same_shape(x));
}

TEST_CASE("avg_downsample pools the half-plane mask as expected") {
  Tensor<float> mask(1, 1, 4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 2; ++x) mask.at(0, 0, y, x) = 1.0f;
  }
  const Tensor<float> pooled = nn::avg_downsample(mask, 2, 2);
  CHECK(pooled.at(0, 0, 0, 0) == 1.0f);
  CHECK(pooled.at(0, 0, 0, 1) == 0.0f);
  CHECK(pooled.at(0, 0, 1, 0) == 1.0f);
  CHECK(pooled.at(0, 0, 1, 1) == 0.0f);
  CHECK_THROWS_AS(nn::avg_downsample(mask, 3, 3), std::invalid_argument);
}

TEST_CASE("adam minimizes a quadratic") {
  Param<double> p;
  p.value = Tensor<double>(1, 1, 1, 1);
  p.grad = Tensor<double>(1, 1, 1, 1);
  p.value[0] = 1.0;
  nn::Adam<double> adam({&p}, 0.05);
  for (int i = 0; i < 200; ++i) {
    adam.zero_grad();
    p.grad[0] = 2.0 * p.value[0];
    adam.step();
  }
  CHECK(std::abs(p.value[0]) < 0.05);
}

TEST_CASE("clip_grad_norm rescales to the cap") {
  Param<double> p;
  p.value = Tensor<double>(1, 2, 1, 1);
  p.grad = Tensor<double>(1, 2, 1, 1);
  p.grad[0] = 3.0;
  p.grad[1] = 4.0;
  std::vector<Param<double>*> ps{&p};
  const double norm = nn::clip_grad_norm(ps, 1.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(std::sqrt(p.grad[0] * p.grad[0] + p.grad[1] * p.grad[1]) == doctest::Approx(1.0));
}
