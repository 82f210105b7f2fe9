#include <benchmark/benchmark.h>

#include "spanreid/cpdm.hpp"
#include "spanreid/ranking.hpp"
#include "spanreid/rng.hpp"
#include "spanreid/span_model.hpp"

using namespace spanreid;

static void BM_SpanForward(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  SpanModelConfig cfg;
  span::SpanNet net(cfg, 3, s, 1);
  Rng rng(2);
  Tensor<float> images(8, 3, s, s);
  for (size_t i = 0; i < images.size(); ++i) images[i] = float(rng.uniform(0.0, 1.0));
  for (auto _ : state) {
    auto masks = net.forward(images, /*train=*/false);
    benchmark::DoNotOptimize(masks.data());
  }
  state.SetItemsProcessed(state.iterations() * images.n());
}
BENCHMARK(BM_SpanForward)->Arg(32)->Arg(48)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_SpanTrainStep(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  SpanModelConfig cfg;
  span::SpanNet net(cfg, 3, s, 1);
  Rng rng(3);
  Tensor<float> images(8, 3, s, s);
  for (size_t i = 0; i < images.size(); ++i) images[i] = float(rng.uniform(0.0, 1.0));
  Tensor<float> grad(8, 3, s, s);
  for (size_t i = 0; i < grad.size(); ++i) grad[i] = float(rng.uniform(-0.01, 0.01));
  for (auto _ : state) {
    auto masks = net.forward(images, /*train=*/true);
    benchmark::DoNotOptimize(masks.data());
    auto gx = net.backward(grad);
    benchmark::DoNotOptimize(gx.data());
  }
  state.SetItemsProcessed(state.iterations() * images.n());
}
BENCHMARK(BM_SpanTrainStep)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);

static void BM_CpdmMatrix(benchmark::State& state) {
  Rng rng(4);
  const int dim = 128;
  auto make_set = [&](int n) {
    std::vector<cpdm::FeatureEntry> set;
    for (int i = 0; i < n; ++i) {
      cpdm::FeatureEntry e;
      e.ar = cpdm::area_ratios_from_mass(rng.uniform(0.1, 2.0), rng.uniform(0.0, 2.0),
                                         rng.uniform(0.1, 2.0));
      e.f.resize(4 * dim);
      for (auto& v : e.f) v = float(rng.uniform(-1.0, 1.0));
      set.push_back(std::move(e));
    }
    return set;
  };
  const auto q = make_set(static_cast<int>(state.range(0)));
  const auto g = make_set(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto d = cpdm::pairwise_distance_matrix(q, g, dim);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * q.size() * g.size());
}
BENCHMARK(BM_CpdmMatrix)->Args({64, 256})->Args({128, 512})->Unit(benchmark::kMillisecond);

static void BM_EvaluateRanking(benchmark::State& state) {
  Rng rng(5);
  const int nq = static_cast<int>(state.range(0));
  const int ng = static_cast<int>(state.range(1));
  std::vector<evalkit::ImageMeta> query, gallery;
  for (int i = 0; i < nq; ++i)
    query.push_back({rng.uniform_int(0, 40), rng.uniform_int(0, 3)});
  for (int i = 0; i < ng; ++i)
    gallery.push_back({rng.uniform_int(0, 40), rng.uniform_int(0, 3)});
  Eigen::MatrixXd dist(nq, ng);
  for (int i = 0; i < nq; ++i)
    for (int j = 0; j < ng; ++j) dist(i, j) = rng.uniform(0.0, 1.0);
  for (auto _ : state) {
    auto res = evalkit::evaluate_ranking(dist, query, gallery);
    benchmark::DoNotOptimize(res.mean_ap);
  }
}
BENCHMARK(BM_EvaluateRanking)->Args({128, 1024})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
