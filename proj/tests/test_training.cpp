#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "spanreid/checkpoint.hpp"
#include "spanreid/errors.hpp"
#include "spanreid/evaluate.hpp"
#include "spanreid/reid_train.hpp"
#include "spanreid/span_train.hpp"

using namespace spanreid;

namespace {

std::filesystem::path tiny_vehicle_dataset() {
  static std::filesystem::path root;
  if (root.empty()) {
    root = std::filesystem::temp_directory_path() / "spanreid_tests" / "train_smoke";
    std::filesystem::remove_all(root);
    synth::DatasetGenConfig cfg;
    cfg.kind = "vehicle";
    cfg.image_size = 32;
    cfg.num_identities = 8;
    cfg.num_cameras = 2;
    cfg.samples_per_identity = 6;
    cfg.occluder_prob = 0.0;
    synth::generate_dataset(cfg, 17, root);
  }
  return root;
}

SpanModelConfig tiny_span_model() {
  SpanModelConfig m;
  m.encoder_widths = {8, 12, 16, 24};
  m.head_widths = {16, 12, 8};
  return m;
}

ReidModelConfig tiny_reid_model() {
  ReidModelConfig m;
  m.trunk_widths = {8, 12, 16, 24};
  m.branch_width = 16;
  m.feature_dim = 8;
  return m;
}

}  // namespace

TEST_CASE("balanced epochs draw the same count from every label class") {
  const synth::DatasetSplit train = synth::load_split(tiny_vehicle_dataset(), "train");
  Rng rng(5);
  const std::vector<int> order = span::epoch_order(train, /*balanced=*/true, rng);
  std::map<int, int> per_class;
  for (int idx : order) per_class[train.samples[idx].label.vehicle_class()]++;
  REQUIRE(!per_class.empty());
  const int first = per_class.begin()->second;
  for (const auto& [cls, count] : per_class) CHECK(count == first);

  Rng rng2(5);
  const std::vector<int> plain = span::epoch_order(train, /*balanced=*/false, rng2);
  CHECK(plain.size() == train.samples.size());
}

TEST_CASE("stage-1 training reduces the loss and is seed-reproducible") {
  const synth::DatasetSplit train = synth::load_split(tiny_vehicle_dataset(), "train");
  SpanTrainConfig tcfg;
  tcfg.epochs = 3;
  tcfg.batch_size = 8;
  tcfg.lr = 2e-3;

  span::SpanNet net(tiny_span_model(), 3, 32, /*seed=*/9);
  const auto result = span::train_span(net, train, tcfg, /*seed=*/9);
  REQUIRE(result.log.size() == 3);
  CHECK(result.log.back().total < result.log.front().total);

  span::SpanNet net2(tiny_span_model(), 3, 32, 9);
  const auto result2 = span::train_span(net2, train, tcfg, 9);
  CHECK(result.log.back().total ==
        doctest::Approx(result2.log.back().total).epsilon(1e-6));

  // inference masks land strictly inside (0,1) and repeat bit-for-bit
  Tensor<float> image(1, 3, 32, 32);
  std::copy(train.samples[0].image.data(),
            train.samples[0].image.data() + image.size(), image.data());
  const Tensor<float> m1 = net.forward(image, false);
  const Tensor<float> m2 = net.forward(image, false);
  for (size_t i = 0; i < m1.size(); ++i) {
    CHECK(m1[i] > 0.0f);
    CHECK(m1[i] < 1.0f);
    CHECK(m1[i] == m2[i]);
  }
}

TEST_CASE("mask inference does not depend on batch composition") {
  const synth::DatasetSplit train = synth::load_split(tiny_vehicle_dataset(), "train");
  SpanTrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.batch_size = 8;
  span::SpanNet net(tiny_span_model(), 3, 32, 4);
  span::train_span(net, train, tcfg, 4);

  Tensor<float> solo(1, 3, 32, 32);
  std::copy(train.samples[2].image.data(),
            train.samples[2].image.data() + solo.size(), solo.data());
  const Tensor<float> alone = net.forward(solo, false);

  Tensor<float> batch(3, 3, 32, 32);
  for (int b = 0; b < 3; ++b) {
    std::copy(train.samples[b].image.data(),
              train.samples[b].image.data() + solo.size(), batch.sample(b));
  }
  const Tensor<float> together = net.forward(batch, false);
  for (size_t i = 0; i < solo.size(); ++i) {
    CHECK(together.sample(2)[i] == alone[i]);
  }
}

TEST_CASE("non-finite losses abort with the offending batch named") {
  const synth::DatasetSplit train = synth::load_split(tiny_vehicle_dataset(), "train");
  SpanTrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.batch_size = 8;
  tcfg.lambda_recon = 1e39;  // overflows the float total
  span::SpanNet net(tiny_span_model(), 3, 32, 4);
  try {
    span::train_span(net, train, tcfg, 4);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    CHECK(std::string(e.what()).find("samples:") != std::string::npos);
  }
}

TEST_CASE("stage-2 training leaves the mask network untouched and learns") {
  const auto root = tiny_vehicle_dataset();
  const synth::DatasetSplit train = synth::load_split(root, "train");

  span::SpanNet span_net(tiny_span_model(), 3, 32, 9);
  SpanTrainConfig scfg;
  scfg.epochs = 2;
  scfg.batch_size = 8;
  span::train_span(span_net, train, scfg, 9);
  const std::string span_hash_before = io::state_hash(span_net.state());

  const int map = 32 / nn::ResEncoder<float>::downsample_factor();
  const partnet::SpanOutputs outs = partnet::precompute_span_outputs(span_net, train, map);
  CHECK(outs.pooled_masks.size() == train.samples.size());
  CHECK(outs.ars.size() == train.samples.size());

  partnet::ReidNet reid(tiny_reid_model(), 32, static_cast<int>(train.identities().size()),
                        /*seed=*/13);
  ReidTrainConfig rcfg;
  rcfg.iterations = 30;
  rcfg.batch_p = 4;
  rcfg.batch_k = 2;
  rcfg.lr = 1e-3;
  const auto result = partnet::train_reid(reid, train, &outs, rcfg, 13);
  REQUIRE(result.log.size() == 30);

  // the mask network was never touched
  CHECK(io::state_hash(span_net.state()) == span_hash_before);

  // the identity loss trends down over the short run
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 5; ++i) early += result.log[i].id;
  for (int i = 25; i < 30; ++i) late += result.log[i].id;
  CHECK(late < early);

  // determinism of the whole stage-2 path
  partnet::ReidNet reid2(tiny_reid_model(), 32, static_cast<int>(train.identities().size()), 13);
  const auto result2 = partnet::train_reid(reid2, train, &outs, rcfg, 13);
  CHECK(result.log.back().total == doctest::Approx(result2.log.back().total).epsilon(1e-6));
}

TEST_CASE("stage-2 configuration errors") {
  const synth::DatasetSplit train = synth::load_split(tiny_vehicle_dataset(), "train");
  partnet::ReidNet reid(tiny_reid_model(), 32, static_cast<int>(train.identities().size()), 1);
  ReidTrainConfig rcfg;
  rcfg.iterations = 1;
  rcfg.batch_p = 3;
  rcfg.batch_k = 2;
  CHECK_THROWS_AS(partnet::train_reid(reid, train, nullptr, rcfg, 1), ConfigError);

  ReidModelConfig global = tiny_reid_model();
  global.global_only = true;
  partnet::ReidNet base(global, 32, static_cast<int>(train.identities().size()), 1);
  CHECK_THROWS_AS(partnet::train_reid(base, train, nullptr, rcfg, 1), ConfigError);
  rcfg.distance = "euclidean";
  const auto log = partnet::train_reid(base, train, nullptr, rcfg, 1);
  CHECK(log.log.size() == 1);
}

TEST_CASE("query/gallery split covers the test set once") {
  const synth::DatasetSplit test = synth::load_split(tiny_vehicle_dataset(), "test");
  std::vector<int> q, g;
  evalkit::split_query_gallery(test, &q, &g);
  CHECK(q.size() + g.size() == test.samples.size());
  std::set<std::pair<int, int>> qkeys;
  for (int i : q) {
    qkeys.insert({test.samples[i].identity_id, test.samples[i].camera_id});
  }
  CHECK(qkeys.size() == q.size());  // one query per (id, cam)
}
