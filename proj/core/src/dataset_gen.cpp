#include <cstdio>
#include <set>

#include "spanreid/dataset.hpp"
#include "spanreid/errors.hpp"
#include "spanreid/image_io.hpp"
#include "spanreid/rng.hpp"

namespace spanreid::synth {

namespace {

std::string format_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

void write_sample(const std::filesystem::path& split_dir, const std::string& sample_id,
                  const LabeledSample& sample, const std::vector<std::string>& view_names,
                  DatasetManifest& manifest) {
  SampleRecord rec;
  rec.sample_id = sample_id;
  rec.identity_id = sample.identity_id;
  rec.camera_id = sample.camera_id;
  rec.orientation_deg = sample.orientation_deg;
  rec.label = sample.label.bits();
  rec.image_path = "images/" + sample_id + ".png";
  io::save_image_png(split_dir / rec.image_path, sample.image);
  rec.mask_paths.push_back("masks/" + sample_id + "_fg.png");
  io::save_mask_png(split_dir / rec.mask_paths.back(), sample.foreground);
  for (size_t v = 0; v < view_names.size(); ++v) {
    rec.mask_paths.push_back("masks/" + sample_id + "_" + view_names[v] + ".png");
    io::save_mask_png(split_dir / rec.mask_paths.back(), sample.view_masks[v]);
  }
  manifest.records.push_back(std::move(rec));
}

// Orientation sampling stratified by label class so the five classes
// stay balanced. Sample j of an identity takes class j for the first
// five samples (so every identity spans several classes), then classes
// are drawn uniformly. A one-degree guard keeps orientations away from
// the visibility boundaries.
double orientation_for_class(int cls, Rng& rng, double margin) {
  const double g = 1.0;
  switch (cls) {
    case 0: {  // front only: side invisible around 0
      const double o = rng.uniform(-(margin - g), margin - g);
      return o < 0.0 ? o + 360.0 : o;
    }
    case 1:  // rear only: around 180
      return rng.uniform(180.0 - margin + g, 180.0 + margin - g);
    case 2:  // side only: around 90 or 270
      return rng.bernoulli(0.5) ? rng.uniform(90.0 - margin + g, 90.0 + margin - g)
                                : rng.uniform(270.0 - margin + g, 270.0 + margin - g);
    case 3: {  // front-side
      const bool right = rng.bernoulli(0.5);
      return right ? rng.uniform(margin + g, 90.0 - margin - g)
                   : rng.uniform(270.0 + margin + g, 360.0 - margin - g);
    }
    default: {  // rear-side
      const bool right = rng.bernoulli(0.5);
      return right ? rng.uniform(90.0 + margin + g, 180.0 - margin - g)
                   : rng.uniform(180.0 + margin + g, 270.0 - margin - g);
    }
  }
}

double draw_orientation(Rng& rng, int sample_idx, double margin) {
  const int cls = sample_idx < 5 ? sample_idx : rng.uniform_int(0, 4);
  return orientation_for_class(cls, rng, margin);
}

}  // namespace

GeneratedDataset generate_dataset(const DatasetGenConfig& cfg, uint64_t seed,
                                  const std::filesystem::path& root) {
  if (cfg.kind != "vehicle" && cfg.kind != "multidigit")
    throw ConfigError("generate_dataset: unknown dataset kind '" + cfg.kind + "'");
  if (cfg.train_ratio <= 0.0 || cfg.train_ratio >= 1.0)
    throw ConfigError("generate_dataset: train_ratio must be in (0,1)");
  if (cfg.kind == "vehicle" && cfg.samples_per_identity < 3)
    throw ConfigError("generate_dataset: need >= 3 samples per identity");
  if (cfg.kind == "vehicle" && cfg.num_identities < 2)
    throw ConfigError("generate_dataset: need >= 2 identities");

  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw IoError("cannot create dataset root: " + root.string());

  GeneratedDataset out;
  const bool vehicle = cfg.kind == "vehicle";
  const std::vector<std::string> view_names =
      vehicle ? std::vector<std::string>{"front", "rear", "side"}
              : std::vector<std::string>{"d0", "d1", "d2", "d3", "d4",
                                         "d5", "d6", "d7", "d8", "d9"};

  for (const char* split : {"train", "test"}) {
    const std::filesystem::path dir = root / split;
    std::filesystem::create_directories(dir / "images", ec);
    if (ec) throw IoError("cannot create dataset directory: " + (dir / "images").string());
    std::filesystem::create_directories(dir / "masks", ec);
    if (ec) throw IoError("cannot create dataset directory: " + (dir / "masks").string());
    DatasetManifest& manifest = std::string(split) == "train" ? out.train : out.test;
    manifest.split = split;
    manifest.seed = seed;
    manifest.width = cfg.image_size;
    manifest.height = cfg.image_size;
    manifest.view_names = view_names;
  }

  int next_index = 0;
  if (vehicle) {
    VehicleRenderConfig rc;
    rc.image_size = cfg.image_size;
    rc.visibility_margin_deg = cfg.visibility_margin_deg;
    rc.background_shapes = cfg.background_shapes;
    rc.occluder_prob = cfg.occluder_prob;
    rc.noise_stddev = cfg.noise_stddev;
    const int n_train_ids =
        std::max(1, std::min(cfg.num_identities - 1,
                             static_cast<int>(cfg.num_identities * cfg.train_ratio + 0.5)));
    for (int id = 0; id < cfg.num_identities; ++id) {
      const bool is_train = id < n_train_ids;
      DatasetManifest& manifest = is_train ? out.train : out.test;
      const IdentitySpec spec = make_identity(id, seed);
      Rng id_rng(Rng::mix(Rng::mix(seed, 0x5a3b1eULL), static_cast<uint64_t>(id)));
      for (int j = 0; j < cfg.samples_per_identity; ++j) {
        const double orientation = draw_orientation(id_rng, j, cfg.visibility_margin_deg);
        const int camera = j % cfg.num_cameras;
        const uint64_t render_seed = Rng::mix(seed, static_cast<uint64_t>(next_index) + 1);
        LabeledSample sample = render_vehicle_sample(spec, orientation, camera, render_seed, rc);
        write_sample(root / manifest.split, format_id(next_index), sample, view_names, manifest);
        ++next_index;
      }
    }
  } else {
    DigitRenderConfig rc;
    rc.image_size = cfg.image_size;
    rc.noise_stddev = cfg.noise_stddev;
    const int n_train = static_cast<int>(cfg.digit_samples * cfg.train_ratio + 0.5);
    Rng pick_rng(Rng::mix(seed, 0xd16175ULL));
    for (int i = 0; i < cfg.digit_samples; ++i) {
      const int count = pick_rng.uniform_int(1, std::max(1, cfg.max_digits));
      std::set<int> chosen;
      while (static_cast<int>(chosen.size()) < count) chosen.insert(pick_rng.uniform_int(0, 9));
      const uint64_t layout_seed = Rng::mix(seed, static_cast<uint64_t>(i) + 0x9000001ULL);
      LabeledSample sample = render_multidigit_sample(
          std::vector<int>(chosen.begin(), chosen.end()), layout_seed, rc);
      DatasetManifest& manifest = i < n_train ? out.train : out.test;
      write_sample(root / manifest.split, format_id(next_index), sample, view_names, manifest);
      ++next_index;
    }
  }

  write_manifest(root / "train" / "manifest", out.train);
  write_manifest(root / "test" / "manifest", out.test);
  return out;
}

std::vector<int> DatasetSplit::identities() const {
  std::set<int> ids;
  for (const auto& s : samples) ids.insert(s.identity_id);
  return {ids.begin(), ids.end()};
}

}  // namespace spanreid::synth
