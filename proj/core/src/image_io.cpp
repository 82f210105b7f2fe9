#include "spanreid/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "spanreid/errors.hpp"

namespace spanreid::io {

void save_image_png(const std::filesystem::path& path, const Tensor<float>& image) {
  if (image.n() != 1 || image.c() != 3)
    throw std::invalid_argument("save_image_png: expected a (1,3,H,W) tensor");
  cv::Mat bgr(image.h(), image.w(), CV_8UC3);
  const size_t plane = static_cast<size_t>(image.h()) * image.w();
  const float* r = image.data();
  const float* g = r + plane;
  const float* b = g + plane;
  for (int y = 0; y < image.h(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.w(); ++x) {
      const size_t i = static_cast<size_t>(y) * image.w() + x;
      auto q = [](float v) {
        return static_cast<uint8_t>(std::min(255.0f, std::max(0.0f, v * 255.0f + 0.5f)));
      };
      row[x] = {q(b[i]), q(g[i]), q(r[i])};
    }
  }
  if (!cv::imwrite(path.string(), bgr))
    throw IoError("failed to write image: " + path.string());
}

Tensor<float> load_image_png(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("failed to read image: " + path.string());
  Tensor<float> out(1, 3, bgr.rows, bgr.cols);
  const size_t plane = static_cast<size_t>(bgr.rows) * bgr.cols;
  float* r = out.data();
  float* g = r + plane;
  float* b = g + plane;
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      const size_t i = static_cast<size_t>(y) * bgr.cols + x;
      b[i] = row[x][0] / 255.0f;
      g[i] = row[x][1] / 255.0f;
      r[i] = row[x][2] / 255.0f;
    }
  }
  return out;
}

void save_mask_png(const std::filesystem::path& path, const Tensor<uint8_t>& mask) {
  if (mask.n() != 1 || mask.c() != 1)
    throw std::invalid_argument("save_mask_png: expected a (1,1,H,W) tensor");
  cv::Mat gray(mask.h(), mask.w(), CV_8UC1);
  for (int y = 0; y < mask.h(); ++y) {
    auto* row = gray.ptr<uint8_t>(y);
    for (int x = 0; x < mask.w(); ++x) row[x] = mask.at(0, 0, y, x) ? 255 : 0;
  }
  if (!cv::imwrite(path.string(), gray))
    throw IoError("failed to write mask: " + path.string());
}

Tensor<uint8_t> load_mask_png(const std::filesystem::path& path) {
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw IoError("failed to read mask: " + path.string());
  Tensor<uint8_t> out(1, 1, gray.rows, gray.cols);
  for (int y = 0; y < gray.rows; ++y) {
    const auto* row = gray.ptr<uint8_t>(y);
    for (int x = 0; x < gray.cols; ++x) out.at(0, 0, y, x) = row[x] >= 128 ? 1 : 0;
  }
  return out;
}

}  // namespace spanreid::io
