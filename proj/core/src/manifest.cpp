#include <cstdio>
#include <fstream>
#include <sstream>

#include "spanreid/dataset.hpp"
#include "spanreid/errors.hpp"

namespace spanreid::synth {

void write_manifest(const std::filesystem::path& file, const DatasetManifest& manifest) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write manifest: " + file.string());
  out << "# spanreid-dataset split=" << manifest.split << " seed=" << manifest.seed
      << " size=" << manifest.width << "x" << manifest.height << " views=";
  for (size_t i = 0; i < manifest.view_names.size(); ++i) {
    if (i) out << ",";
    out << manifest.view_names[i];
  }
  out << "\n";
  char orient[32];
  for (const auto& r : manifest.records) {
    std::snprintf(orient, sizeof(orient), "%.4f", r.orientation_deg);
    out << r.sample_id << " " << r.identity_id << " " << r.camera_id << " " << orient;
    for (uint8_t b : r.label) out << " " << int(b);
    out << " " << r.image_path;
    for (const auto& m : r.mask_paths) out << " " << m;
    out << "\n";
  }
  if (!out) throw IoError("failed while writing manifest: " + file.string());
}

DatasetManifest read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read manifest: " + file.string());
  DatasetManifest m;
  std::string header;
  if (!std::getline(in, header) || header.rfind("# spanreid-dataset", 0) != 0)
    throw IoError("manifest header missing or malformed: " + file.string());
  std::istringstream hs(header);
  std::string tok;
  while (hs >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "split") {
      m.split = val;
    } else if (key == "seed") {
      m.seed = std::stoull(val);
    } else if (key == "size") {
      auto x = val.find('x');
      if (x == std::string::npos) throw IoError("manifest: bad size field");
      m.width = std::stoi(val.substr(0, x));
      m.height = std::stoi(val.substr(x + 1));
    } else if (key == "views") {
      std::istringstream vs(val);
      std::string v;
      while (std::getline(vs, v, ',')) m.view_names.push_back(v);
    }
  }
  if (m.view_names.empty()) throw IoError("manifest: no view names in header");

  const size_t n_views = m.view_names.size();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    SampleRecord r;
    ls >> r.sample_id >> r.identity_id >> r.camera_id >> r.orientation_deg;
    r.label.resize(n_views);
    for (size_t i = 0; i < n_views; ++i) {
      int b;
      ls >> b;
      r.label[i] = static_cast<uint8_t>(b);
    }
    ls >> r.image_path;
    r.mask_paths.resize(n_views + 1);
    for (auto& p : r.mask_paths) ls >> p;
    if (!ls) throw IoError("manifest: malformed record: " + line);
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace spanreid::synth
