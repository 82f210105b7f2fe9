#include <algorithm>
#include <opencv2/imgproc.hpp>

#include "spanreid/errors.hpp"
#include "spanreid/rng.hpp"
#include "spanreid/synth.hpp"
#include "synth_internal.hpp"

namespace spanreid::synth {

namespace {

struct Glyph {
  cv::Mat mask;  // 8U, tight crop, nonzero = glyph
  int x = 0, y = 0;
};

bool boxes_overlap(int ax, int ay, int aw, int ah, int bx, int by, int bw, int bh, int pad) {
  return ax - pad < bx + bw && bx - pad < ax + aw && ay - pad < by + bh && by - pad < ay + ah;
}

}  // namespace

LabeledSample render_multidigit_sample(const std::vector<int>& visible_digits,
                                       uint64_t layout_seed, const DigitRenderConfig& cfg) {
  if (visible_digits.empty())
    throw std::invalid_argument("render_multidigit_sample: no digits requested");
  std::vector<int> digits = visible_digits;
  std::sort(digits.begin(), digits.end());
  if (std::adjacent_find(digits.begin(), digits.end()) != digits.end())
    throw std::invalid_argument("render_multidigit_sample: duplicate digits");
  if (digits.front() < 0 || digits.back() > 9)
    throw std::invalid_argument("render_multidigit_sample: digits must be in 0..9");

  const int s = cfg.image_size;
  Rng rng(layout_seed);
  Rng noise_rng = rng.fork(7);

  std::vector<uint8_t> bits(10, 0);
  for (int d : digits) bits[d] = 1;
  LabeledSample sample(SemanticLabel::from_bits(bits));

  // plain gradient background
  cv::Mat img(s, s, CV_32FC3);
  const auto& palette = color_palette();
  auto base = palette[rng.uniform_int(0, static_cast<int>(palette.size()) - 1)];
  for (int y = 0; y < s; ++y) {
    const float t = 0.55f + 0.35f * float(y) / s;
    img.row(y).setTo(cv::Scalar(base[0] * t * 0.4f, base[1] * t * 0.4f, base[2] * t * 0.4f));
  }

  static const int kFonts[4] = {cv::FONT_HERSHEY_SIMPLEX, cv::FONT_HERSHEY_DUPLEX,
                                cv::FONT_HERSHEY_COMPLEX, cv::FONT_HERSHEY_TRIPLEX};

  std::vector<Glyph> placed;
  for (int d : digits) {
    const int font = kFonts[rng.uniform_int(0, 3)];
    const double target_h = rng.uniform(cfg.min_glyph_frac, cfg.max_glyph_frac) * s;
    int baseline = 0;
    const cv::Size base_size = cv::getTextSize(std::to_string(d), font, 1.0, 2, &baseline);
    const double scale = target_h / std::max(1, base_size.height);
    const int thickness = std::max(1, static_cast<int>(std::lround(2.0 * scale)));

    // stamp on a large scratch canvas, then crop tight
    cv::Mat scratch = cv::Mat::zeros(2 * s, 2 * s, CV_8UC1);
    cv::putText(scratch, std::to_string(d), {s / 2, 3 * s / 2}, font, scale, 255, thickness,
                cv::LINE_8);
    cv::Rect tight = cv::boundingRect(scratch);
    if (tight.empty())
      throw NumericError("render_multidigit_sample: empty glyph rasterization");
    cv::Mat crop = scratch(tight).clone();

    bool done = false;
    for (int attempt = 0; attempt < cfg.max_place_attempts && !done; ++attempt) {
      if (crop.cols >= s || crop.rows >= s) break;
      const int x = rng.uniform_int(0, s - crop.cols - 1);
      const int y = rng.uniform_int(0, s - crop.rows - 1);
      bool clash = false;
      for (const auto& g : placed) {
        if (boxes_overlap(x, y, crop.cols, crop.rows, g.x, g.y, g.mask.cols, g.mask.rows, 1)) {
          clash = true;
          break;
        }
      }
      if (!clash) {
        placed.push_back({crop, x, y});
        done = true;
      }
    }
    if (!done)
      throw ConfigError("render_multidigit_sample: could not place glyphs without overlap");
  }

  sample.foreground = Tensor<uint8_t>(1, 1, s, s);
  sample.view_masks.assign(10, Tensor<uint8_t>(1, 1, s, s));
  for (size_t k = 0; k < placed.size(); ++k) {
    const Glyph& g = placed[k];
    const int d = digits[k];
    auto color = palette[rng.uniform_int(0, static_cast<int>(palette.size()) - 1)];
    // keep glyphs bright against the dark background
    for (auto& c : color) c = 0.5f + 0.5f * c;
    for (int yy = 0; yy < g.mask.rows; ++yy) {
      const uint8_t* src = g.mask.ptr<uint8_t>(yy);
      auto* dst = img.ptr<cv::Vec3f>(g.y + yy);
      for (int xx = 0; xx < g.mask.cols; ++xx) {
        if (!src[xx]) continue;
        dst[g.x + xx] = cv::Vec3f(color[0], color[1], color[2]);
        sample.foreground.at(0, 0, g.y + yy, g.x + xx) = 1;
        sample.view_masks[d].at(0, 0, g.y + yy, g.x + xx) = 1;
      }
    }
  }

  sample.image = Tensor<float>(1, 3, s, s);
  const size_t plane = static_cast<size_t>(s) * s;
  for (int y = 0; y < s; ++y) {
    const auto* row = img.ptr<cv::Vec3f>(y);
    for (int x = 0; x < s; ++x) {
      const size_t i = static_cast<size_t>(y) * s + x;
      for (int c = 0; c < 3; ++c) {
        const float v = row[x][c] + static_cast<float>(noise_rng.normal(0.0, cfg.noise_stddev));
        sample.image.data()[c * plane + i] = std::clamp(v, 0.0f, 1.0f);
      }
    }
  }
  return sample;
}

}  // namespace spanreid::synth
