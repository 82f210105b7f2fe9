#include "spanreid/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>

#include "spanreid/errors.hpp"

namespace spanreid {

using nlohmann::json;

namespace {

// Strict object walker: every key present in `obj` must be consumed by a
// field handler, otherwise the full dotted path is reported.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) throw ConfigError("config: expected an object at " + path_);
  }

  template <typename T>
  void field(const char* key, T& out) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: invalid value for key " + dotted(key));
    }
    seen_.push_back(key);
  }

  void object(const char* key, const std::function<void(ObjectReader&)>& fn) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    ObjectReader sub(*it, dotted(key));
    fn(sub);
    sub.finish();
    seen_.push_back(key);
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), item.key()) == seen_.end()) {
        throw ConfigError("config: unknown key " + dotted(item.key().c_str()));
      }
    }
  }

 private:
  std::string dotted(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }
  const json& obj_;
  std::string path_;
  std::vector<std::string> seen_;
};

void read_dataset(ObjectReader& r, synth::DatasetGenConfig& d) {
  r.field("kind", d.kind);
  r.field("image_size", d.image_size);
  r.field("train_ratio", d.train_ratio);
  r.field("num_identities", d.num_identities);
  r.field("num_cameras", d.num_cameras);
  r.field("samples_per_identity", d.samples_per_identity);
  r.field("visibility_margin_deg", d.visibility_margin_deg);
  r.field("background_shapes", d.background_shapes);
  r.field("occluder_prob", d.occluder_prob);
  r.field("noise_stddev", d.noise_stddev);
  r.field("digit_samples", d.digit_samples);
  r.field("max_digits", d.max_digits);
}

void validate(const RunConfig& c) {
  if (c.dataset.image_size <= 0 || c.dataset.image_size % 8 != 0)
    throw ConfigError("config: dataset.image_size must be a positive multiple of 8");
  if (c.span_train.lambda_recon < 0 || c.span_train.lambda_area < 0 || c.span_train.lambda_div < 0)
    throw ConfigError("config: span loss coefficients must be non-negative");
  if (c.span_model.encoder_widths.size() != 4)
    throw ConfigError("config: span.model.encoder_widths must have 4 entries");
  if (c.span_model.head_widths.size() != 3)
    throw ConfigError("config: span.model.head_widths must have 3 entries");
  if (c.reid_model.trunk_widths.size() != 4 && c.reid_model.trunk != "identity")
    throw ConfigError("config: reid.model.trunk_widths must have 4 entries");
  if (c.reid_train.batch_p < 2 || c.reid_train.batch_k < 2)
    throw ConfigError("config: PK batches need P >= 2 and K >= 2");
  if (c.reid_train.triplet_margin <= 0)
    throw ConfigError("config: triplet margin must be positive");
  if (c.reid_train.distance != "cpdm" && c.reid_train.distance != "euclidean")
    throw ConfigError("config: reid.train.distance must be 'cpdm' or 'euclidean'");
  if (c.reid_model.trunk != "residual" && c.reid_model.trunk != "identity")
    throw ConfigError("config: reid.model.trunk must be 'residual' or 'identity'");
  if (c.reid_train.lambda_trip < 0 || c.reid_train.lambda_id < 0)
    throw ConfigError("config: reid loss coefficients must be non-negative");
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  RunConfig c;
  ObjectReader r(root, "");
  r.field("seed", c.seed);
  r.field("deterministic", c.deterministic);
  r.object("dataset", [&](ObjectReader& d) { read_dataset(d, c.dataset); });
  r.object("span", [&](ObjectReader& s) {
    s.object("model", [&](ObjectReader& m) {
      m.field("encoder_widths", c.span_model.encoder_widths);
      m.field("head_widths", c.span_model.head_widths);
    });
    s.object("train", [&](ObjectReader& t) {
      t.field("epochs", c.span_train.epochs);
      t.field("batch_size", c.span_train.batch_size);
      t.field("lr", c.span_train.lr);
      t.field("lambda_recon", c.span_train.lambda_recon);
      t.field("lambda_area", c.span_train.lambda_area);
      t.field("lambda_div", c.span_train.lambda_div);
      t.field("two_view_area_ratio", c.span_train.two_view_area_ratio);
      t.field("adjacent_margin", c.span_train.adjacent_margin);
      t.field("digit_area_slack", c.span_train.digit_area_slack);
      t.field("digit_margin", c.span_train.digit_margin);
      t.field("balanced_viewpoints", c.span_train.balanced_viewpoints);
      t.field("grad_clip", c.span_train.grad_clip);
    });
  });
  r.object("reid", [&](ObjectReader& s) {
    s.object("model", [&](ObjectReader& m) {
      m.field("trunk_widths", c.reid_model.trunk_widths);
      m.field("branch_width", c.reid_model.branch_width);
      m.field("feature_dim", c.reid_model.feature_dim);
      m.field("global_only", c.reid_model.global_only);
      m.field("trunk", c.reid_model.trunk);
    });
    s.object("train", [&](ObjectReader& t) {
      t.field("iterations", c.reid_train.iterations);
      t.field("lr", c.reid_train.lr);
      t.field("batch_p", c.reid_train.batch_p);
      t.field("batch_k", c.reid_train.batch_k);
      t.field("triplet_margin", c.reid_train.triplet_margin);
      t.field("lambda_trip", c.reid_train.lambda_trip);
      t.field("lambda_id", c.reid_train.lambda_id);
      t.field("distance", c.reid_train.distance);
      t.field("grad_clip", c.reid_train.grad_clip);
    });
  });
  r.object("eval", [&](ObjectReader& e) { e.field("mask_threshold", c.eval.mask_threshold); });
  r.finish();
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string config_to_json(const RunConfig& c) {
  json root;
  root["seed"] = c.seed;
  root["deterministic"] = c.deterministic;
  json& d = root["dataset"];
  d["kind"] = c.dataset.kind;
  d["image_size"] = c.dataset.image_size;
  d["train_ratio"] = c.dataset.train_ratio;
  d["num_identities"] = c.dataset.num_identities;
  d["num_cameras"] = c.dataset.num_cameras;
  d["samples_per_identity"] = c.dataset.samples_per_identity;
  d["visibility_margin_deg"] = c.dataset.visibility_margin_deg;
  d["background_shapes"] = c.dataset.background_shapes;
  d["occluder_prob"] = c.dataset.occluder_prob;
  d["noise_stddev"] = c.dataset.noise_stddev;
  d["digit_samples"] = c.dataset.digit_samples;
  d["max_digits"] = c.dataset.max_digits;
  json& sm = root["span"]["model"];
  sm["encoder_widths"] = c.span_model.encoder_widths;
  sm["head_widths"] = c.span_model.head_widths;
  json& st = root["span"]["train"];
  st["epochs"] = c.span_train.epochs;
  st["batch_size"] = c.span_train.batch_size;
  st["lr"] = c.span_train.lr;
  st["lambda_recon"] = c.span_train.lambda_recon;
  st["lambda_area"] = c.span_train.lambda_area;
  st["lambda_div"] = c.span_train.lambda_div;
  st["two_view_area_ratio"] = c.span_train.two_view_area_ratio;
  st["adjacent_margin"] = c.span_train.adjacent_margin;
  st["digit_area_slack"] = c.span_train.digit_area_slack;
  st["digit_margin"] = c.span_train.digit_margin;
  st["balanced_viewpoints"] = c.span_train.balanced_viewpoints;
  st["grad_clip"] = c.span_train.grad_clip;
  json& rm = root["reid"]["model"];
  rm["trunk_widths"] = c.reid_model.trunk_widths;
  rm["branch_width"] = c.reid_model.branch_width;
  rm["feature_dim"] = c.reid_model.feature_dim;
  rm["global_only"] = c.reid_model.global_only;
  rm["trunk"] = c.reid_model.trunk;
  json& rt = root["reid"]["train"];
  rt["iterations"] = c.reid_train.iterations;
  rt["lr"] = c.reid_train.lr;
  rt["batch_p"] = c.reid_train.batch_p;
  rt["batch_k"] = c.reid_train.batch_k;
  rt["triplet_margin"] = c.reid_train.triplet_margin;
  rt["lambda_trip"] = c.reid_train.lambda_trip;
  rt["lambda_id"] = c.reid_train.lambda_id;
  rt["distance"] = c.reid_train.distance;
  rt["grad_clip"] = c.reid_train.grad_clip;
  root["eval"]["mask_threshold"] = c.eval.mask_threshold;
  return root.dump(2);
}

}  // namespace spanreid
