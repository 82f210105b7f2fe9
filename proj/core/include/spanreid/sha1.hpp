#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace spanreid {

// SHA-1 (RFC 3174). Used for checkpoint content hashes; not a security
// boundary.
class Sha1 {
 public:
  Sha1();
  void update(const void* data, size_t len);
  // Hex digest; finalizes a copy so the object may keep accumulating.
  std::string hex_digest() const;

  static std::string hash_hex(const void* data, size_t len);

 private:
  void process_block(const uint8_t* block);

  uint32_t h_[5];
  uint64_t total_len_ = 0;
  uint8_t buffer_[64];
  size_t buffer_len_ = 0;
};

}  // namespace spanreid
