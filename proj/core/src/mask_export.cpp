#include "spanreid/mask_export.hpp"

#include <cstdio>
#include <iostream>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "spanreid/errors.hpp"
#include "spanreid/rng.hpp"

namespace spanreid::evalkit {

namespace {

cv::Mat tensor_to_bgr(const Tensor<float>& img) {
  cv::Mat out(img.h(), img.w(), CV_8UC3);
  const size_t plane = static_cast<size_t>(img.h()) * img.w();
  for (int y = 0; y < img.h(); ++y) {
    auto* row = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.w(); ++x) {
      const size_t i = static_cast<size_t>(y) * img.w() + x;
      auto q = [&](int c) {
        const float v = img.data()[c * plane + i];
        return static_cast<uint8_t>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
      };
      row[x] = {q(2), q(1), q(0)};
    }
  }
  return out;
}

cv::Mat heatmap(const float* plane, int h, int w) {
  cv::Mat gray(h, w, CV_8UC1);
  for (int y = 0; y < h; ++y) {
    auto* row = gray.ptr<uint8_t>(y);
    for (int x = 0; x < w; ++x) {
      row[x] = static_cast<uint8_t>(
          std::clamp(plane[static_cast<size_t>(y) * w + x], 0.0f, 1.0f) * 255.0f + 0.5f);
    }
  }
  cv::Mat colored;
  cv::applyColorMap(gray, colored, cv::COLORMAP_JET);
  return colored;
}

}  // namespace

int export_mask_panels(span::SpanNet& net, const synth::DatasetSplit& data, int n,
                       uint64_t seed, const std::filesystem::path& out_dir) {
  if (data.samples.empty()) throw std::invalid_argument("export_mask_panels: empty split");
  if (n > static_cast<int>(data.samples.size())) {
    std::cerr << "export-masks: requested " << n << " panels, clamping to "
              << data.samples.size() << "\n";
    n = static_cast<int>(data.samples.size());
  }
  if (n <= 0) throw std::invalid_argument("export_mask_panels: need n >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("export_mask_panels: cannot create " + out_dir.string());

  std::vector<int> order(data.samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(Rng::mix(seed, 0xe4b0ULL));
  rng.shuffle(order);
  order.resize(n);

  const int s = net.image_size();
  const size_t plane = static_cast<size_t>(s) * s;
  const int k = net.n_views();
  const int pad = 2;
  const int label_band = 14;

  for (int idx : order) {
    const auto& sample = data.samples[idx];
    Tensor<float> image(1, 3, s, s);
    std::copy(sample.image.data(), sample.image.data() + sample.image.size(), image.data());
    const Tensor<float> masks = net.forward(image, /*train=*/false);

    // area ratios over the predicted soft masks (vehicle case only shows
    // the first three views' ratios; digit sets annotate all heads)
    std::vector<double> mass(k, 0.0);
    double total_mass = 0.0;
    for (int v = 0; v < k; ++v) {
      for (size_t p = 0; p < plane; ++p) mass[v] += masks.data()[v * plane + p];
      total_mass += mass[v];
    }

    const int cols = 2 + k;
    cv::Mat panel(s + label_band, cols * (s + pad) - pad, CV_8UC3, cv::Scalar(30, 30, 30));
    auto paste = [&](const cv::Mat& tile, int col, const std::string& caption) {
      tile.copyTo(panel(cv::Rect(col * (s + pad), 0, s, s)));
      cv::putText(panel, caption, {col * (s + pad) + 2, s + label_band - 3},
                  cv::FONT_HERSHEY_PLAIN, 0.8, cv::Scalar(255, 255, 255), 1, cv::LINE_8);
    };

    paste(tensor_to_bgr(image), 0, "input " + sample.sample_id);
    for (int v = 0; v < k; ++v) {
      char caption[48];
      const double ar = total_mass > 0.0 ? mass[v] / total_mass : 0.0;
      std::snprintf(caption, sizeof(caption), "%s AR=%.2f",
                    v < static_cast<int>(data.view_names.size())
                        ? data.view_names[v].c_str()
                        : "view",
                    ar);
      paste(heatmap(masks.data() + static_cast<size_t>(v) * plane, s, s), 1 + v, caption);
    }

    // gated reconstruction (green) vs ground-truth foreground (red)
    cv::Mat recon(s, s, CV_8UC3);
    for (int y = 0; y < s; ++y) {
      auto* row = recon.ptr<cv::Vec3b>(y);
      for (int x = 0; x < s; ++x) {
        const size_t i = static_cast<size_t>(y) * s + x;
        double gated = 0.0;
        for (int v = 0; v < k; ++v) {
          if (sample.label.visible(v)) gated += masks.data()[v * plane + i];
        }
        const uint8_t g = static_cast<uint8_t>(std::clamp(gated, 0.0, 1.0) * 255.0 + 0.5);
        const uint8_t r = sample.foreground.empty() ? 0 : (sample.foreground[i] ? 255 : 0);
        row[x] = {0, g, r};
      }
    }
    paste(recon, 1 + k, "recon vs fg");

    const std::string path = (out_dir / ("panel_" + sample.sample_id + ".png")).string();
    if (!cv::imwrite(path, panel)) throw IoError("cannot write panel: " + path);
  }
  return n;
}

}  // namespace spanreid::evalkit
