#include "spanreid/dataset.hpp"
#include "spanreid/errors.hpp"
#include "spanreid/image_io.hpp"

namespace spanreid::synth {

DatasetSplit load_split(const std::filesystem::path& root, const std::string& split,
                        bool with_masks) {
  const std::filesystem::path dir = root / split;
  const DatasetManifest manifest = read_manifest(dir / "manifest");
  DatasetSplit out;
  out.split = manifest.split;
  out.seed = manifest.seed;
  out.width = manifest.width;
  out.height = manifest.height;
  out.view_names = manifest.view_names;
  out.samples.reserve(manifest.records.size());
  for (const auto& rec : manifest.records) {
    LoadedSample s(SemanticLabel::from_bits(rec.label));
    s.sample_id = rec.sample_id;
    s.identity_id = rec.identity_id;
    s.camera_id = rec.camera_id;
    s.orientation_deg = rec.orientation_deg;
    s.image = io::load_image_png(dir / rec.image_path);
    if (s.image.h() != manifest.height || s.image.w() != manifest.width)
      throw IoError("dataset image does not match manifest size: " + rec.image_path);
    if (with_masks) {
      if (rec.mask_paths.size() != manifest.view_names.size() + 1)
        throw IoError("dataset record has wrong mask count: " + rec.sample_id);
      s.foreground = io::load_mask_png(dir / rec.mask_paths[0]);
      for (size_t v = 1; v < rec.mask_paths.size(); ++v) {
        s.view_masks.push_back(io::load_mask_png(dir / rec.mask_paths[v]));
      }
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace spanreid::synth
