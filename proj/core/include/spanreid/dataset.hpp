#pragma once

// On-disk dataset format and generation. Layout per split:
//   <root>/<split>/images/<sample_id>.png
//   <root>/<split>/masks/<sample_id>_{fg,<view>...}.png
//   <root>/<split>/manifest
// The manifest is line-oriented text: a header carrying split name, seed,
// image size and view names, then one record per sample
// (sample_id, identity_id, camera_id, orientation_deg, label bits, paths).

#include <filesystem>
#include <string>
#include <vector>

#include "spanreid/semantic_label.hpp"
#include "spanreid/synth.hpp"
#include "spanreid/tensor.hpp"

namespace spanreid::synth {

struct SampleRecord {
  std::string sample_id;
  int identity_id = -1;
  int camera_id = 0;
  double orientation_deg = 0.0;
  std::vector<uint8_t> label;
  std::string image_path;                // relative to the split directory
  std::vector<std::string> mask_paths;   // foreground first, then one per view
};

struct DatasetManifest {
  std::string split;
  uint64_t seed = 0;
  int width = 0, height = 0;
  std::vector<std::string> view_names;
  std::vector<SampleRecord> records;
};

void write_manifest(const std::filesystem::path& file, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& file);

struct DatasetGenConfig {
  std::string kind = "vehicle";  // "vehicle" | "multidigit"
  int image_size = 96;
  double train_ratio = 0.5;
  // vehicle
  int num_identities = 20;
  int num_cameras = 4;
  int samples_per_identity = 8;
  double visibility_margin_deg = 10.0;
  int background_shapes = 6;
  double occluder_prob = 0.25;
  double noise_stddev = 0.02;
  // multidigit
  int digit_samples = 256;
  int max_digits = 3;
};

struct GeneratedDataset {
  DatasetManifest train;
  DatasetManifest test;
};

// Writes both splits under `root`. Pure function of (config, seed):
// rerunning with the same arguments reproduces the manifests byte for
// byte. Vehicle datasets keep train/test identity sets disjoint and give
// every identity at least two semantic-label classes in each split.
GeneratedDataset generate_dataset(const DatasetGenConfig& cfg, uint64_t seed,
                                  const std::filesystem::path& root);

// In-memory split for training and evaluation.
struct LoadedSample {
  explicit LoadedSample(SemanticLabel l) : label(std::move(l)) {}
  std::string sample_id;
  Tensor<float> image;
  Tensor<uint8_t> foreground;
  std::vector<Tensor<uint8_t>> view_masks;
  SemanticLabel label;
  int identity_id = -1;
  int camera_id = 0;
  double orientation_deg = 0.0;
};

struct DatasetSplit {
  std::string split;
  uint64_t seed = 0;
  int width = 0, height = 0;
  std::vector<std::string> view_names;
  std::vector<LoadedSample> samples;

  int n_views() const { return static_cast<int>(view_names.size()); }
  std::vector<int> identities() const;
};

DatasetSplit load_split(const std::filesystem::path& root, const std::string& split,
                        bool with_masks = true);

}  // namespace spanreid::synth
