#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "spanreid/dataset.hpp"
#include "spanreid/errors.hpp"
#include "spanreid/synth.hpp"

using namespace spanreid;
using namespace spanreid::synth;

namespace {

std::vector<uint8_t> bits(const SemanticLabel& l) { return l.bits(); }

size_t mask_area(const Tensor<uint8_t>& m) {
  size_t n = 0;
  for (size_t i = 0; i < m.size(); ++i) n += m[i] != 0;
  return n;
}

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "spanreid_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("semantic labels from orientation") {
  CHECK(bits(derive_semantic_label(0.0)) == std::vector<uint8_t>{1, 0, 0});
  CHECK(bits(derive_semantic_label(180.0)) == std::vector<uint8_t>{0, 1, 0});
  CHECK(bits(derive_semantic_label(45.0)) == std::vector<uint8_t>{1, 0, 1});
  CHECK(bits(derive_semantic_label(90.0)) == std::vector<uint8_t>{0, 0, 1});
  CHECK(bits(derive_semantic_label(270.0)) == std::vector<uint8_t>{0, 0, 1});
  CHECK(bits(derive_semantic_label(225.0)) == std::vector<uint8_t>{0, 1, 1});
  CHECK(bits(derive_semantic_label(355.0)) == std::vector<uint8_t>{1, 0, 0});
  CHECK_THROWS_AS(derive_semantic_label(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(derive_semantic_label(360.0), std::invalid_argument);
}

TEST_CASE("no orientation yields front+rear or an empty label") {
  for (double o = 0.0; o < 360.0; o += 0.1) {
    const SemanticLabel l = derive_semantic_label(o);
    CHECK(!(l.visible(kFront) && l.visible(kRear)));
    CHECK(l.visible_count() >= 1);
  }
}

TEST_CASE("vehicle label invariants are enforced") {
  CHECK_THROWS_AS(SemanticLabel::vehicle(false, false, false), std::invalid_argument);
  CHECK_THROWS_AS(SemanticLabel::vehicle(true, true, false), std::invalid_argument);
  CHECK(SemanticLabel::vehicle(true, false, true).vehicle_class() == 3);
  CHECK(SemanticLabel::vehicle(false, true, true).vehicle_class() == 4);
}

TEST_CASE("identity synthesis is deterministic and id-distinct") {
  const IdentitySpec a1 = make_identity(3, 99);
  const IdentitySpec a2 = make_identity(3, 99);
  CHECK(a1.body_color == a2.body_color);
  CHECK(a1.body_aspect == a2.body_aspect);
  CHECK(a1.face_texture_seed == a2.face_texture_seed);
  const IdentitySpec b = make_identity(4, 99);
  CHECK((a1.body_color != b.body_color || a1.body_aspect != b.body_aspect ||
         a1.face_texture_seed != b.face_texture_seed));
}

TEST_CASE("vehicle renders satisfy the mask invariants") {
  VehicleRenderConfig cfg;
  cfg.image_size = 48;
  const IdentitySpec spec = make_identity(1, 5);
  for (double orientation : {0.0, 45.0, 90.0, 135.0, 180.0, 250.0, 310.0}) {
    const LabeledSample s = render_vehicle_sample(spec, orientation, 1, 77, cfg);
    REQUIRE(s.view_masks.size() == 3);
    size_t union_area = 0;
    for (size_t i = 0; i < s.foreground.size(); ++i) {
      int cover = 0;
      for (const auto& vm : s.view_masks) cover += vm[i] != 0;
      CHECK(cover <= 1);  // pairwise disjoint
      CHECK((cover == 1) == (s.foreground[i] != 0));
      union_area += cover;
    }
    CHECK(union_area == mask_area(s.foreground));
    for (int v = 0; v < 3; ++v) {
      CHECK((mask_area(s.view_masks[v]) > 0) == s.label.visible(v));
    }
    CHECK(mask_area(s.foreground) > 0);
  }
}

TEST_CASE("pure-front render has empty rear and side masks") {
  VehicleRenderConfig cfg;
  cfg.image_size = 48;
  const LabeledSample s = render_vehicle_sample(make_identity(0, 7), 0.0, 0, 7, cfg);
  CHECK(mask_area(s.view_masks[kFront]) > 0);
  CHECK(mask_area(s.view_masks[kRear]) == 0);
  CHECK(mask_area(s.view_masks[kSide]) == 0);
}

TEST_CASE("renders are bit-identical for identical arguments") {
  VehicleRenderConfig cfg;
  cfg.image_size = 48;
  const IdentitySpec spec = make_identity(2, 9);
  const LabeledSample a = render_vehicle_sample(spec, 45.0, 0, 7, cfg);
  const LabeledSample b = render_vehicle_sample(spec, 45.0, 0, 7, cfg);
  REQUIRE(a.image.size() == b.image.size());
  for (size_t i = 0; i < a.image.size(); ++i) REQUIRE(a.image[i] == b.image[i]);
  for (size_t i = 0; i < a.foreground.size(); ++i)
    REQUIRE(a.foreground[i] == b.foreground[i]);
}

TEST_CASE("45-degree views are both partially visible") {
  VehicleRenderConfig cfg;
  cfg.image_size = 48;
  cfg.occluder_prob = 0.0;
  const LabeledSample s = render_vehicle_sample(make_identity(5, 11), 45.0, 0, 13, cfg);
  const double fg = double(mask_area(s.foreground));
  const double front_frac = mask_area(s.view_masks[kFront]) / fg;
  const double side_frac = mask_area(s.view_masks[kSide]) / fg;
  CHECK(front_frac > 0.0);
  CHECK(front_frac < 1.0);
  CHECK(side_frac > 0.0);
  CHECK(side_frac < 1.0);
}

TEST_CASE("degenerate aspect is rejected") {
  IdentitySpec spec = make_identity(0, 1);
  spec.body_aspect[1] = 0.0f;
  CHECK_THROWS_AS(render_vehicle_sample(spec, 10.0, 0, 1), std::invalid_argument);
}

TEST_CASE("multi-digit: single digit covers exactly its glyph") {
  DigitRenderConfig cfg;
  cfg.image_size = 48;
  const LabeledSample s = render_multidigit_sample({3}, 1, cfg);
  REQUIRE(s.label.views() == 10);
  CHECK(s.label.visible_count() == 1);
  CHECK(s.label.visible(3));
  CHECK(mask_area(s.view_masks[3]) > 0);
  for (size_t i = 0; i < s.foreground.size(); ++i) {
    CHECK(s.foreground[i] == s.view_masks[3][i]);
  }
}

TEST_CASE("multi-digit: three digits give disjoint masks whose areas add up") {
  DigitRenderConfig cfg;
  cfg.image_size = 48;
  const LabeledSample s = render_multidigit_sample({2, 5, 8}, 4, cfg);
  size_t total = 0;
  for (int d : {2, 5, 8}) {
    CHECK(mask_area(s.view_masks[d]) > 0);
    total += mask_area(s.view_masks[d]);
  }
  for (size_t i = 0; i < s.foreground.size(); ++i) {
    int cover = 0;
    for (const auto& vm : s.view_masks) cover += vm[i] != 0;
    CHECK(cover <= 1);
  }
  CHECK(total == mask_area(s.foreground));  // pixel-count oracle
}

TEST_CASE("multi-digit renders deterministically and validates input") {
  const LabeledSample a = render_multidigit_sample({1, 7}, 42);
  const LabeledSample b = render_multidigit_sample({1, 7}, 42);
  for (size_t i = 0; i < a.image.size(); ++i) REQUIRE(a.image[i] == b.image[i]);
  CHECK_THROWS_AS(render_multidigit_sample({}, 1), std::invalid_argument);
  CHECK_THROWS_AS(render_multidigit_sample({3, 3}, 1), std::invalid_argument);
  CHECK_THROWS_AS(render_multidigit_sample({10}, 1), std::invalid_argument);
}

TEST_CASE("impossible layouts fail after bounded retries") {
  DigitRenderConfig cfg;
  cfg.image_size = 32;
  cfg.min_glyph_frac = 0.46;
  cfg.max_glyph_frac = 0.48;
  CHECK_THROWS_AS(render_multidigit_sample({0, 2, 3, 4, 5, 6, 8, 9}, 3, cfg), ConfigError);
}

TEST_CASE("generate_dataset writes both splits with the protocol guarantees") {
  const auto root = temp_dir("gen_vehicle");
  DatasetGenConfig cfg;
  cfg.kind = "vehicle";
  cfg.image_size = 48;
  cfg.num_identities = 20;
  cfg.num_cameras = 4;
  cfg.samples_per_identity = 8;
  cfg.train_ratio = 0.5;
  const GeneratedDataset out = generate_dataset(cfg, 0, root);
  CHECK(out.train.records.size() + out.test.records.size() == 160);

  std::set<int> train_ids, test_ids;
  for (const auto& r : out.train.records) train_ids.insert(r.identity_id);
  for (const auto& r : out.test.records) test_ids.insert(r.identity_id);
  CHECK(train_ids.size() == 10);
  CHECK(test_ids.size() == 10);
  for (int id : train_ids) CHECK(test_ids.count(id) == 0);

  // every identity sees >= 3 distinct orientations spanning >= 2 classes
  std::map<int, std::set<double>> orients;
  std::map<int, std::set<int>> classes;
  for (const auto& r : out.train.records) {
    orients[r.identity_id].insert(r.orientation_deg);
    classes[r.identity_id].insert(
        SemanticLabel::from_bits(r.label).vehicle_class());
  }
  for (const auto& [id, os] : orients) CHECK(os.size() >= 3);
  for (const auto& [id, cs] : classes) CHECK(cs.size() >= 2);

  // files exist and load back
  const DatasetSplit train = load_split(root, "train");
  CHECK(train.samples.size() == out.train.records.size());
  CHECK(train.width == 48);
  CHECK(train.n_views() == 3);
  for (const auto& s : train.samples) {
    CHECK(s.view_masks.size() == 3);
    for (int v = 0; v < 3; ++v) {
      CHECK((mask_area(s.view_masks[v]) > 0) == s.label.visible(v));
    }
  }
}

TEST_CASE("dataset generation is a pure function of config and seed") {
  const auto root1 = temp_dir("gen_det1");
  const auto root2 = temp_dir("gen_det2");
  DatasetGenConfig cfg;
  cfg.kind = "vehicle";
  cfg.image_size = 48;
  cfg.num_identities = 4;
  cfg.samples_per_identity = 4;
  generate_dataset(cfg, 7, root1);
  generate_dataset(cfg, 7, root2);
  CHECK(slurp(root1 / "train" / "manifest") == slurp(root2 / "train" / "manifest"));
  CHECK(slurp(root1 / "test" / "manifest") == slurp(root2 / "test" / "manifest"));
  CHECK(slurp(root1 / "train" / "images" / "000000.png") ==
        slurp(root2 / "train" / "images" / "000000.png"));
}

TEST_CASE("multidigit dataset generation") {
  const auto root = temp_dir("gen_digits");
  DatasetGenConfig cfg;
  cfg.kind = "multidigit";
  cfg.image_size = 48;
  cfg.digit_samples = 24;
  cfg.max_digits = 3;
  const GeneratedDataset out = generate_dataset(cfg, 3, root);
  CHECK(out.train.records.size() == 12);
  CHECK(out.test.records.size() == 12);
  CHECK(out.train.view_names.size() == 10);
  const DatasetSplit split = load_split(root, "test");
  CHECK(split.n_views() == 10);
}

TEST_CASE("config errors are rejected up front") {
  DatasetGenConfig cfg;
  cfg.kind = "nope";
  CHECK_THROWS_AS(generate_dataset(cfg, 0, temp_dir("gen_bad")), ConfigError);
  cfg.kind = "vehicle";
  cfg.samples_per_identity = 2;
  CHECK_THROWS_AS(generate_dataset(cfg, 0, temp_dir("gen_bad2")), ConfigError);
  cfg.samples_per_identity = 4;
  cfg.train_ratio = 1.5;
  CHECK_THROWS_AS(generate_dataset(cfg, 0, temp_dir("gen_bad3")), ConfigError);
}

TEST_CASE("manifest round-trips through its text form") {
  const auto dir = temp_dir("manifest_rt");
  DatasetManifest m;
  m.split = "train";
  m.seed = 123;
  m.width = m.height = 48;
  m.view_names = {"front", "rear", "side"};
  SampleRecord r;
  r.sample_id = "000001";
  r.identity_id = 5;
  r.camera_id = 2;
  r.orientation_deg = 123.4567;
  r.label = {1, 0, 1};
  r.image_path = "images/000001.png";
  r.mask_paths = {"masks/000001_fg.png", "masks/000001_front.png", "masks/000001_rear.png",
                  "masks/000001_side.png"};
  m.records.push_back(r);
  write_manifest(dir / "manifest", m);
  const DatasetManifest back = read_manifest(dir / "manifest");
  CHECK(back.split == "train");
  CHECK(back.seed == 123);
  CHECK(back.width == 48);
  CHECK(back.view_names == m.view_names);
  REQUIRE(back.records.size() == 1);
  CHECK(back.records[0].sample_id == "000001");
  CHECK(back.records[0].orientation_deg == doctest::Approx(123.4567));
  CHECK(back.records[0].label == std::vector<uint8_t>{1, 0, 1});
  CHECK(back.records[0].mask_paths.size() == 4);
}
