#include <cstdint>
#include <fstream>

#include "spanreid/errors.hpp"
#include "spanreid/feature_extract.hpp"

namespace spanreid::partnet {

namespace {
constexpr char kHeaderTag[] = "spanreid-features v1";
}

void write_features(const std::filesystem::path& path, const std::vector<FeatureRecord>& records,
                    int dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file: " + path.string());
  out << kHeaderTag << "\n" << "dim " << dim << "\n" << "count " << records.size() << "\n\n";
  for (const auto& r : records) {
    if (r.f.size() != static_cast<size_t>(cpdm::kParts) * dim)
      throw std::invalid_argument("write_features: record has wrong feature length");
    const uint32_t id_len = static_cast<uint32_t>(r.sample_id.size());
    out.write(reinterpret_cast<const char*>(&id_len), sizeof(id_len));
    out.write(r.sample_id.data(), id_len);
    const int32_t ident = r.identity_id, cam = r.camera_id;
    out.write(reinterpret_cast<const char*>(&ident), sizeof(ident));
    out.write(reinterpret_cast<const char*>(&cam), sizeof(cam));
    for (double a : r.ar.v) {
      const float af = static_cast<float>(a);
      out.write(reinterpret_cast<const char*>(&af), sizeof(af));
    }
    out.write(reinterpret_cast<const char*>(r.f.data()),
              static_cast<std::streamsize>(r.f.size() * sizeof(float)));
  }
  if (!out) throw IoError("failed while writing feature file: " + path.string());
}

std::vector<FeatureRecord> read_features(const std::filesystem::path& path, int* dim_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kHeaderTag)
    throw IoError("not a feature file: " + path.string());
  int dim = -1;
  size_t count = 0;
  while (std::getline(in, line) && !line.empty()) {
    if (line.rfind("dim ", 0) == 0) dim = std::stoi(line.substr(4));
    else if (line.rfind("count ", 0) == 0) count = std::stoull(line.substr(6));
    else throw IoError("feature file: unknown header line: " + line);
  }
  if (dim <= 0) throw IoError("feature file: missing dim header");
  std::vector<FeatureRecord> records;
  records.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    FeatureRecord r;
    uint32_t id_len = 0;
    in.read(reinterpret_cast<char*>(&id_len), sizeof(id_len));
    if (!in || id_len > 4096) throw IoError("feature file: corrupt record");
    r.sample_id.resize(id_len);
    in.read(r.sample_id.data(), id_len);
    int32_t ident = 0, cam = 0;
    in.read(reinterpret_cast<char*>(&ident), sizeof(ident));
    in.read(reinterpret_cast<char*>(&cam), sizeof(cam));
    r.identity_id = ident;
    r.camera_id = cam;
    for (double& a : r.ar.v) {
      float af = 0;
      in.read(reinterpret_cast<char*>(&af), sizeof(af));
      a = af;
    }
    r.f.resize(static_cast<size_t>(cpdm::kParts) * dim);
    in.read(reinterpret_cast<char*>(r.f.data()),
            static_cast<std::streamsize>(r.f.size() * sizeof(float)));
    if (!in) throw IoError("feature file: truncated records");
    records.push_back(std::move(r));
  }
  if (dim_out) *dim_out = dim;
  return records;
}

}  // namespace spanreid::partnet
