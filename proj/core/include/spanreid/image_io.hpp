#pragma once

#include <filesystem>

#include "spanreid/tensor.hpp"

namespace spanreid::io {

// Images are (1, 3, H, W) RGB float tensors in [0,1]; masks are
// (1, 1, H, W) tensors with values in {0,1}. On disk both are 8-bit PNG
// (masks as 0/255 grayscale).

void save_image_png(const std::filesystem::path& path, const Tensor<float>& image);
Tensor<float> load_image_png(const std::filesystem::path& path);

void save_mask_png(const std::filesystem::path& path, const Tensor<uint8_t>& mask);
Tensor<uint8_t> load_mask_png(const std::filesystem::path& path);

}  // namespace spanreid::io
