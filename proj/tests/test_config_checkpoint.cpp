#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "spanreid/checkpoint.hpp"
#include "spanreid/config.hpp"
#include "spanreid/errors.hpp"
#include "spanreid/span_model.hpp"
#include "spanreid/tables.hpp"

using namespace spanreid;

namespace {

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "spanreid_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("defaults carry the published hyperparameters") {
  const RunConfig c = parse_config("{}");
  CHECK(c.span_train.lambda_recon == 1.0);
  CHECK(c.span_train.lambda_area == 0.5);
  CHECK(c.span_train.lambda_div == 1.0);
  CHECK(c.span_train.two_view_area_ratio == 0.7);
  CHECK(c.span_train.adjacent_margin == 0.04);
  CHECK(c.reid_train.batch_p == 8);
  CHECK(c.reid_train.batch_k == 4);
  CHECK(c.reid_train.lambda_trip == 1.0);
  CHECK(c.reid_train.lambda_id == 1.0);
  CHECK(c.reid_train.distance == "cpdm");
  CHECK(c.dataset.image_size == 96);
  CHECK(c.dataset.visibility_margin_deg == 10.0);
}

TEST_CASE("the default area table matches the five label classes") {
  const auto table = span::AreaRatioTable::vehicle();
  auto caps = table.caps(SemanticLabel::vehicle(true, false, false));
  CHECK(caps == std::vector<double>{1.0, 0.0, 0.0});
  caps = table.caps(SemanticLabel::vehicle(false, true, false));
  CHECK(caps == std::vector<double>{0.0, 1.0, 0.0});
  caps = table.caps(SemanticLabel::vehicle(false, false, true));
  CHECK(caps == std::vector<double>{0.0, 0.0, 1.0});
  caps = table.caps(SemanticLabel::vehicle(true, false, true));
  CHECK(caps == std::vector<double>{0.7, 0.0, 0.7});
  caps = table.caps(SemanticLabel::vehicle(false, true, true));
  CHECK(caps == std::vector<double>{0.0, 0.7, 0.7});
}

TEST_CASE("the default margin table is symmetric with a zero front-rear entry") {
  const auto m = span::MarginTable::vehicle();
  CHECK(m.margin(kFront, kRear) == 0.0);
  CHECK(m.margin(kFront, kSide) == 0.04);
  CHECK(m.margin(kRear, kSide) == 0.04);
  CHECK(m.margin(kSide, kFront) == 0.04);
  CHECK_THROWS_AS(m.margin(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(span::MarginTable::vehicle(-0.1), std::invalid_argument);
}

TEST_CASE("unknown config keys are rejected by full path") {
  try {
    parse_config(R"({"dataset": {"imge_size": 64}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("dataset.imge_size") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"span": {"train": {"lr": "fast"}}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(parse_config(R"({"dataset": {"image_size": 50}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"span": {"train": {"lambda_area": -1}}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"reid": {"train": {"batch_p": 1}}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"reid": {"train": {"distance": "cosine"}}})"), ConfigError);
}

TEST_CASE("config echo round-trips") {
  RunConfig c = parse_config("{}");
  c.seed = 42;
  c.dataset.num_identities = 33;
  c.reid_train.iterations = 777;
  const std::string echoed = config_to_json(c);
  const RunConfig back = parse_config(echoed);
  CHECK(back.seed == 42);
  CHECK(back.dataset.num_identities == 33);
  CHECK(back.reid_train.iterations == 777);
  CHECK(config_to_json(back) == echoed);
}

TEST_CASE("checkpoints round-trip and verify their hash") {
  const auto dir = temp_dir("ckpt");
  RunConfig cfg = parse_config("{}");
  cfg.span_model.encoder_widths = {4, 6, 8, 10};
  cfg.span_model.head_widths = {8, 6, 4};
  span::SpanNet net(cfg.span_model, 3, 16, /*seed=*/3);

  const auto path = dir / "span.ckpt";
  io::save_checkpoint(path, "span", cfg, {{"n_views", 3}, {"image_size", 16}}, net.state());

  const io::Checkpoint back = io::load_checkpoint(path);
  CHECK(back.kind == "span");
  CHECK(back.extra.at("n_views") == 3);
  CHECK(back.config.span_model.encoder_widths == std::vector<int>{4, 6, 8, 10});
  CHECK(back.content_hash.size() == 40);

  span::SpanNet restored(back.config.span_model, 3, 16, /*seed=*/999);
  restored.load_state(back.tensors);
  CHECK(io::state_hash(restored.state()) == io::state_hash(net.state()));

  // flip one byte in the data section: load must fail the hash check
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(-4, std::ios::end);
  char byte;
  f.seekg(-4, std::ios::end);
  f.read(&byte, 1);
  byte ^= 0x40;
  f.seekp(-4, std::ios::end);
  f.write(&byte, 1);
  f.close();
  CHECK_THROWS_AS(io::load_checkpoint(path), IoError);
}

TEST_CASE("restore_state rejects missing or mismatched tensors") {
  RunConfig cfg = parse_config("{}");
  cfg.span_model.encoder_widths = {4, 6, 8, 10};
  cfg.span_model.head_widths = {8, 6, 4};
  span::SpanNet net(cfg.span_model, 3, 16, 3);
  io::Checkpoint empty;
  CHECK_THROWS_AS(io::restore_state(empty, net.state()), IoError);
}
