#include "spanreid/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "spanreid/errors.hpp"
#include "spanreid/sha1.hpp"

namespace spanreid::io {

using nlohmann::json;

namespace {
constexpr char kMagic[] = "spanreid-ckpt v1\n";
}

void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const RunConfig& config, const std::map<std::string, int64_t>& extra,
                     const std::vector<nn::NamedTensor<float>>& tensors) {
  // data section: all tensors back to back
  std::vector<float> data;
  json index = json::array();
  size_t offset = 0;
  for (const auto& nt : tensors) {
    const Tensor<float>& t = *nt.tensor;
    index.push_back({{"name", nt.name},
                     {"shape", {t.n(), t.c(), t.h(), t.w()}},
                     {"offset", offset},
                     {"count", t.size()}});
    data.insert(data.end(), t.data(), t.data() + t.size());
    offset += t.size();
  }
  const std::string hash =
      Sha1::hash_hex(data.data(), data.size() * sizeof(float));

  json header;
  header["kind"] = kind;
  header["config"] = json::parse(config_to_json(config));
  header["extra"] = extra;
  header["tensors"] = index;
  header["data_sha1"] = hash;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic) - 1);
  const uint64_t hlen = header_text.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw IoError("failed while writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw IoError("not a checkpoint file: " + path.string());
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen > (1u << 26)) throw IoError("corrupt checkpoint header: " + path.string());
  std::string header_text(hlen, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw IoError("corrupt checkpoint header: " + path.string());

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint header: " + std::string(e.what()));
  }

  Checkpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.config = parse_config(header.at("config").dump());
  for (const auto& item : header.at("extra").items()) {
    ckpt.extra[item.key()] = item.value().get<int64_t>();
  }

  size_t total = 0;
  for (const auto& e : header.at("tensors")) total += e.at("count").get<size_t>();
  std::vector<float> data(total);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(total * sizeof(float)));
  if (!in) throw IoError("truncated checkpoint data: " + path.string());

  const std::string hash = Sha1::hash_hex(data.data(), data.size() * sizeof(float));
  ckpt.content_hash = header.at("data_sha1").get<std::string>();
  if (hash != ckpt.content_hash)
    throw IoError("checkpoint content hash mismatch (corrupt file): " + path.string());

  for (const auto& e : header.at("tensors")) {
    const auto shape = e.at("shape").get<std::vector<int>>();
    if (shape.size() != 4) throw IoError("checkpoint: bad tensor shape entry");
    Tensor<float> t(shape[0], shape[1], shape[2], shape[3]);
    const size_t off = e.at("offset").get<size_t>();
    const size_t count = e.at("count").get<size_t>();
    if (t.size() != count || off + count > data.size())
      throw IoError("checkpoint: inconsistent tensor index");
    std::copy(data.begin() + off, data.begin() + off + count, t.data());
    ckpt.tensors.emplace(e.at("name").get<std::string>(), std::move(t));
  }
  return ckpt;
}

void restore_state(const Checkpoint& ckpt, const std::vector<nn::NamedTensor<float>>& state) {
  for (const auto& nt : state) {
    auto it = ckpt.tensors.find(nt.name);
    if (it == ckpt.tensors.end())
      throw IoError("checkpoint is missing tensor: " + nt.name);
    if (!it->second.same_shape(*nt.tensor))
      throw IoError("checkpoint tensor shape mismatch: " + nt.name);
    *nt.tensor = it->second;
  }
}

std::string state_hash(const std::vector<nn::NamedTensor<float>>& state) {
  Sha1 h;
  for (const auto& nt : state) {
    h.update(nt.name.data(), nt.name.size());
    h.update(nt.tensor->data(), nt.tensor->size() * sizeof(float));
  }
  return h.hex_digest();
}

}  // namespace spanreid::io
