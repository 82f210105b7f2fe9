#pragma once

// Self-describing checkpoint container: a magic line, a JSON header with
// the resolved run config, kind-specific metadata, the tensor index and a
// SHA-1 over the raw data section, then the float32 tensor data
// (little-endian). The hash is verified on load.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spanreid/config.hpp"
#include "spanreid/nn.hpp"
#include "spanreid/tensor.hpp"

namespace spanreid::io {

struct Checkpoint {
  std::string kind;  // "span" | "reid"
  RunConfig config;
  std::map<std::string, int64_t> extra;  // e.g. n_views, image_size, n_identities
  std::map<std::string, Tensor<float>> tensors;
  std::string content_hash;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const RunConfig& config, const std::map<std::string, int64_t>& extra,
                     const std::vector<nn::NamedTensor<float>>& tensors);

Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies values into the model state entries; throws on missing names or
// shape mismatches.
void restore_state(const Checkpoint& ckpt, const std::vector<nn::NamedTensor<float>>& state);

// Hash of the current parameter tensors; used to verify stage-2 training
// leaves the mask network untouched.
std::string state_hash(const std::vector<nn::NamedTensor<float>>& state);

}  // namespace spanreid::io
