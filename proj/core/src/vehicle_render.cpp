#include <Eigen/Dense>
#include <cmath>
#include <opencv2/imgproc.hpp>

#include "spanreid/errors.hpp"
#include "spanreid/rng.hpp"
#include "spanreid/synth.hpp"
#include "synth_internal.hpp"

namespace spanreid::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr uint64_t kCameraSalt = 0xca3e5aULL;

using Vec3 = Eigen::Vector3d;

struct Face {
  int view;          // 0 front, 1 rear, 2 side
  Vec3 normal;
  // P(u,v) = origin + u * u_axis + v * v_axis, u,v in [0,1]
  Vec3 origin, u_axis, v_axis;
};

struct Camera {
  Vec3 pos;
  Vec3 right, up, fwd;
  double tan_half_fov;
  double off_x, off_y;  // framing jitter in normalized screen units
  int image_size;

  cv::Point2d project(const Vec3& p) const {
    const Vec3 d = p - pos;
    const double zc = d.dot(fwd);
    const double sx = d.dot(right) / (zc * tan_half_fov);
    const double sy = d.dot(up) / (zc * tan_half_fov);
    return {(0.5 + 0.5 * sx + off_x) * image_size, (0.5 - 0.5 * sy + off_y) * image_size};
  }
};

// Homography mapping face UV coordinates to pixel coordinates, solved
// from the four corner correspondences.
Eigen::Matrix3d uv_to_pixel_homography(const std::array<cv::Point2d, 4>& px) {
  static const double uv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> rhs;
  for (int i = 0; i < 4; ++i) {
    const double u = uv[i][0], v = uv[i][1];
    const double x = px[i].x, y = px[i].y;
    a.row(2 * i) << u, v, 1, 0, 0, 0, -u * x, -v * x;
    a.row(2 * i + 1) << 0, 0, 0, u, v, 1, -u * y, -v * y;
    rhs(2 * i) = x;
    rhs(2 * i + 1) = y;
  }
  const Eigen::Matrix<double, 8, 1> h = a.colPivHouseholderQr().solve(rhs);
  Eigen::Matrix3d m;
  m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return m;
}

std::array<float, 3> pick_accent(const std::array<float, 3>& body, uint64_t tseed) {
  const auto& palette = color_palette();
  auto accent = palette[(tseed >> 16) % palette.size()];
  float dist = 0.0f;
  for (int i = 0; i < 3; ++i) dist += std::abs(accent[i] - body[i]);
  if (dist < 0.3f) {
    for (auto& c : accent) c = 1.0f - c;
  }
  return accent;
}

// Procedural face texture in UV space. The pattern family, cell count and
// accent color are all identity-determined; left and right sides share a
// texture through the per-view seed.
std::array<float, 3> face_texel(const IdentitySpec& spec, int view, double u, double v) {
  const uint64_t tseed = Rng::mix(spec.face_texture_seed, static_cast<uint64_t>(view));
  const int type = static_cast<int>(tseed % 6);
  const int cells = 2 + static_cast<int>((tseed >> 8) % 5);
  const auto accent = pick_accent(spec.body_color, tseed);

  u = std::clamp(u, 0.0, 0.999999);
  v = std::clamp(v, 0.0, 0.999999);
  bool sel = false;
  switch (type) {
    case 0: sel = static_cast<int>(u * cells) % 2 == 0; break;
    case 1: sel = static_cast<int>(v * cells) % 2 == 0; break;
    case 2: sel = static_cast<int>((u + v) * cells) % 2 == 0; break;
    case 3: sel = (static_cast<int>(u * cells) + static_cast<int>(v * cells)) % 2 == 0; break;
    case 4: {
      const double cu = u * cells - std::floor(u * cells) - 0.5;
      const double cv = v * cells - std::floor(v * cells) - 0.5;
      sel = cu * cu + cv * cv < 0.09;
      break;
    }
    default: sel = u > 0.5 || v < 0.12; break;
  }
  std::array<float, 3> c = sel ? accent : spec.body_color;
  // window band near the top of every face
  if (v > 0.08 && v < 0.36) {
    for (int i = 0; i < 3; ++i) c[i] = 0.25f * c[i];
    c[2] += 0.08f;
  }
  // face furniture shared by all identities; this is what makes "front",
  // "rear" and "side" visual categories rather than per-identity quirks
  auto in = [&](double u0, double u1, double v0, double v1) {
    return u >= u0 && u <= u1 && v >= v0 && v <= v1;
  };
  if (view == kFront) {
    if (in(0.08, 0.30, 0.52, 0.70) || in(0.70, 0.92, 0.52, 0.70)) {
      c = {0.95f, 0.93f, 0.75f};  // headlights
    } else if (in(0.30, 0.70, 0.74, 0.94)) {
      c = {0.10f, 0.10f, 0.10f};  // grille
    }
  } else if (view == kRear) {
    if (in(0.06, 0.94, 0.50, 0.62)) {
      c = {0.75f, 0.08f, 0.08f};  // light bar
    } else if (in(0.38, 0.62, 0.72, 0.90)) {
      c = {0.88f, 0.88f, 0.86f};  // plate
    }
  } else {
    const double wheel_r2 = 0.012;
    for (double cu : {0.22, 0.78}) {
      const double du = (u - cu), dv = (v - 0.88) * 0.55;  // squash vertically
      if (du * du + dv * dv < wheel_r2) c = {0.06f, 0.06f, 0.07f};  // wheels
    }
  }
  return c;
}

void draw_background(cv::Mat& img, Rng& rng, int n_shapes) {
  const auto& palette = color_palette();
  const int s = img.rows;
  auto pal = [&](Rng& r) {
    auto c = palette[r.uniform_int(0, static_cast<int>(palette.size()) - 1)];
    const float j = static_cast<float>(r.uniform(-0.08, 0.08));
    return cv::Scalar(std::clamp(c[0] + j, 0.0f, 1.0f), std::clamp(c[1] + j, 0.0f, 1.0f),
                      std::clamp(c[2] + j, 0.0f, 1.0f));
  };
  const cv::Scalar top = pal(rng), bottom = pal(rng);
  for (int y = 0; y < s; ++y) {
    const double t = double(y) / s;
    const cv::Scalar c = top * (1.0 - t) + bottom * t;
    img.row(y).setTo(c);
  }
  const int shapes = rng.uniform_int(n_shapes / 2, n_shapes);
  for (int i = 0; i < shapes; ++i) {
    const cv::Scalar c = pal(rng);
    const int cx = rng.uniform_int(0, s - 1), cy = rng.uniform_int(0, s - 1);
    const int ww = rng.uniform_int(s / 10, (2 * s) / 5), hh = rng.uniform_int(s / 10, (2 * s) / 5);
    if (rng.bernoulli(0.5)) {
      cv::rectangle(img, {cx - ww / 2, cy - hh / 2}, {cx + ww / 2, cy + hh / 2}, c, cv::FILLED);
    } else {
      cv::ellipse(img, {cx, cy}, {ww / 2, hh / 2}, rng.uniform(0.0, 180.0), 0, 360, c, cv::FILLED);
    }
  }
}

}  // namespace

SemanticLabel derive_semantic_label(double orientation_deg, double margin_deg) {
  if (orientation_deg < 0.0 || orientation_deg >= 360.0)
    throw std::invalid_argument("derive_semantic_label: orientation must be in [0, 360)");
  const double d = margin_deg;
  const double o = orientation_deg;
  const bool front = (o > 270.0 + d && o <= 360.0) || (o >= 0.0 && o < 90.0 - d);
  const bool rear = o > 90.0 + d && o < 270.0 - d;
  const bool side = (o > d && o < 180.0 - d) || (o > 180.0 + d && o < 360.0 - d);
  return SemanticLabel::vehicle(front, rear, side);
}

LabeledSample render_vehicle_sample(const IdentitySpec& spec, double orientation_deg,
                                    int camera_id, uint64_t render_seed,
                                    const VehicleRenderConfig& cfg) {
  for (float a : spec.body_aspect) {
    if (a <= 0.0f) throw std::invalid_argument("render_vehicle_sample: degenerate aspect");
  }
  const SemanticLabel label =
      derive_semantic_label(orientation_deg, cfg.visibility_margin_deg);
  const int s = cfg.image_size;

  Rng root(render_seed);
  Rng bg_rng = root.fork(1);
  Rng frame_rng = root.fork(2);
  Rng light_rng = root.fork(3);
  Rng occl_rng = root.fork(4);
  Rng noise_rng = root.fork(5);

  // Geometry: box of half extents (hx, hy, hz) at the origin, camera on
  // an orbit at `orientation_deg` azimuth.
  const double hx = spec.body_aspect[0] / 2, hy = spec.body_aspect[1] / 2,
               hz = spec.body_aspect[2] / 2;
  const double theta = orientation_deg * kPi / 180.0;
  Rng cam_rng(Rng::mix(kCameraSalt, static_cast<uint64_t>(camera_id)));
  const double elev_base = 9.0 + 6.0 * (camera_id % 4) + cam_rng.uniform(-1.0, 1.0);
  const double elev = (elev_base + frame_rng.uniform(-2.0, 2.0)) * kPi / 180.0;
  const double radius = std::sqrt(hx * hx + hy * hy + hz * hz);
  const double tan_half = std::tan(cfg.fov_deg * kPi / 360.0);
  const double fill = frame_rng.uniform(0.62, 0.80);
  const double dist = radius / (fill * tan_half);

  Camera cam;
  cam.pos = Vec3(dist * std::cos(theta) * std::cos(elev), -dist * std::sin(theta) * std::cos(elev),
                 dist * std::sin(elev));
  cam.fwd = (-cam.pos).normalized();
  cam.right = cam.fwd.cross(Vec3(0, 0, 1)).normalized();
  cam.up = cam.right.cross(cam.fwd);
  cam.tan_half_fov = tan_half;
  cam.off_x = frame_rng.uniform(-0.05, 0.05);
  cam.off_y = frame_rng.uniform(-0.05, 0.05);
  cam.image_size = s;

  // Vertical faces only; the roof is never rasterized so the ground-truth
  // views exactly tile the foreground.
  const std::array<Face, 4> faces = {{
      {kFront, Vec3(1, 0, 0), Vec3(hx, hy, hz), Vec3(0, -2 * hy, 0), Vec3(0, 0, -2 * hz)},
      {kRear, Vec3(-1, 0, 0), Vec3(-hx, -hy, hz), Vec3(0, 2 * hy, 0), Vec3(0, 0, -2 * hz)},
      {kSide, Vec3(0, -1, 0), Vec3(hx, -hy, hz), Vec3(-2 * hx, 0, 0), Vec3(0, 0, -2 * hz)},  // right
      {kSide, Vec3(0, 1, 0), Vec3(-hx, hy, hz), Vec3(2 * hx, 0, 0), Vec3(0, 0, -2 * hz)},    // left
  }};
  const double sin_theta = std::sin(theta);
  const bool face_drawn[4] = {
      label.visible(kFront),
      label.visible(kRear),
      label.visible(kSide) && sin_theta > 0.0,
      label.visible(kSide) && sin_theta < 0.0,
  };

  cv::Mat img(s, s, CV_32FC3);
  draw_background(img, bg_rng, cfg.background_shapes);

  const Vec3 light = (cam.pos.normalized() + Vec3(0, 0, 0.9) +
                      Vec3(light_rng.uniform(-0.2, 0.2), light_rng.uniform(-0.2, 0.2), 0))
                         .normalized();

  auto rasterize = [&](bool with_occluders) {
    cv::Mat idx(s, s, CV_32S, cv::Scalar(-1));
    for (int f = 0; f < 4; ++f) {
      if (!face_drawn[f]) continue;
      const Face& face = faces[f];
      std::array<cv::Point2d, 4> px = {
          cam.project(face.origin),
          cam.project(face.origin + face.u_axis),
          cam.project(face.origin + face.u_axis + face.v_axis),
          cam.project(face.origin + face.v_axis),
      };
      std::vector<cv::Point> poly;
      for (const auto& p : px) poly.emplace_back(int(std::lround(p.x)), int(std::lround(p.y)));
      cv::fillConvexPoly(idx, poly, cv::Scalar(f));
    }
    if (with_occluders) {
      // street-furniture style vertical bars
      const int bars = occl_rng.uniform_int(1, 2);
      for (int i = 0; i < bars; ++i) {
        const int w = occl_rng.uniform_int(std::max(2, s / 24), std::max(3, s / 12));
        const int x = occl_rng.uniform_int(0, s - w - 1);
        const auto& palette = color_palette();
        auto c = palette[occl_rng.uniform_int(0, static_cast<int>(palette.size()) - 1)];
        cv::rectangle(idx, {x, 0}, {x + w, s - 1}, cv::Scalar(-2), cv::FILLED);
        // remembered through idx; color painted below
        cv::rectangle(img, {x, 0}, {x + w, s - 1}, cv::Scalar(c[0], c[1], c[2]), cv::FILLED);
      }
    }
    return idx;
  };

  auto shade = [&](cv::Mat& idx) {
    for (int f = 0; f < 4; ++f) {
      if (!face_drawn[f]) continue;
      const Face& face = faces[f];
      std::array<cv::Point2d, 4> px = {
          cam.project(face.origin),
          cam.project(face.origin + face.u_axis),
          cam.project(face.origin + face.u_axis + face.v_axis),
          cam.project(face.origin + face.v_axis),
      };
      const Eigen::Matrix3d h_inv = uv_to_pixel_homography(px).inverse();
      const double diffuse =
          0.45 + 0.55 * std::max(0.0, face.normal.dot(light));
      int x0 = s, y0 = s, x1 = -1, y1 = -1;
      for (const auto& p : px) {
        x0 = std::min(x0, int(std::floor(p.x)));
        y0 = std::min(y0, int(std::floor(p.y)));
        x1 = std::max(x1, int(std::ceil(p.x)));
        y1 = std::max(y1, int(std::ceil(p.y)));
      }
      x0 = std::max(x0, 0);
      y0 = std::max(y0, 0);
      x1 = std::min(x1, s - 1);
      y1 = std::min(y1, s - 1);
      for (int y = y0; y <= y1; ++y) {
        const int* idx_row = idx.ptr<int>(y);
        auto* img_row = img.ptr<cv::Vec3f>(y);
        for (int x = x0; x <= x1; ++x) {
          if (idx_row[x] != f) continue;
          const Eigen::Vector3d q = h_inv * Eigen::Vector3d(x + 0.5, y + 0.5, 1.0);
          const auto c = face_texel(spec, face.view, q(0) / q(2), q(1) / q(2));
          img_row[x] = cv::Vec3f(static_cast<float>(c[0] * diffuse),
                                 static_cast<float>(c[1] * diffuse),
                                 static_cast<float>(c[2] * diffuse));
        }
      }
    }
  };

  auto masks_from_idx = [&](const cv::Mat& idx, LabeledSample& out) {
    out.foreground = Tensor<uint8_t>(1, 1, s, s);
    out.view_masks.assign(3, Tensor<uint8_t>(1, 1, s, s));
    for (int y = 0; y < s; ++y) {
      const int* row = idx.ptr<int>(y);
      for (int x = 0; x < s; ++x) {
        if (row[x] < 0) continue;
        out.foreground.at(0, 0, y, x) = 1;
        const int view = faces[row[x]].view;
        out.view_masks[view].at(0, 0, y, x) = 1;
      }
    }
  };

  const bool use_occluders = occl_rng.bernoulli(cfg.occluder_prob);
  cv::Mat img_backup = img.clone();
  cv::Mat idx = rasterize(use_occluders);
  LabeledSample sample(label);
  masks_from_idx(idx, sample);
  // An occluder must not wipe out a labelled view entirely.
  bool ok = true;
  for (int v = 0; v < 3; ++v) {
    bool any = false;
    for (size_t i = 0; i < sample.view_masks[v].size(); ++i) any = any || sample.view_masks[v][i];
    if (label.visible(v) && !any) ok = false;
  }
  if (!ok && use_occluders) {
    img = img_backup;
    idx = rasterize(false);
    masks_from_idx(idx, sample);
  }
  shade(idx);

  // per-camera color response, then sensor noise
  const float gain[3] = {static_cast<float>(cam_rng.uniform(0.92, 1.08)),
                         static_cast<float>(cam_rng.uniform(0.92, 1.08)),
                         static_cast<float>(cam_rng.uniform(0.92, 1.08))};
  const float offset = static_cast<float>(cam_rng.uniform(-0.03, 0.03));
  sample.image = Tensor<float>(1, 3, s, s);
  const size_t plane = static_cast<size_t>(s) * s;
  for (int y = 0; y < s; ++y) {
    const auto* row = img.ptr<cv::Vec3f>(y);
    for (int x = 0; x < s; ++x) {
      const size_t i = static_cast<size_t>(y) * s + x;
      for (int c = 0; c < 3; ++c) {
        float v = row[x][c] * gain[c] + offset +
                  static_cast<float>(noise_rng.normal(0.0, cfg.noise_stddev));
        sample.image.data()[c * plane + i] = std::clamp(v, 0.0f, 1.0f);
      }
    }
  }

  sample.identity_id = spec.identity_id;
  sample.camera_id = camera_id;
  sample.orientation_deg = orientation_deg;
  return sample;
}

}  // namespace spanreid::synth
