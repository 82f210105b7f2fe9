#pragma once

#include <map>
#include <vector>

#include "spanreid/rng.hpp"

namespace spanreid::partnet {

// PK batch construction: every batch holds exactly P identities with K
// images each. Identities cycle through a reshuffled queue, so usage
// counts over an epoch differ by at most one batch's worth (K images).
class PKSampler {
 public:
  PKSampler(const std::vector<int>& identity_of_sample, int p, int k, uint64_t seed);

  std::vector<int> next_batch();
  int batch_size() const { return p_ * k_; }
  int batches_per_epoch() const;

 private:
  int p_, k_;
  std::vector<int> id_list_;
  std::map<int, std::vector<int>> by_id_;
  std::vector<int> queue_;
  size_t queue_pos_ = 0;
  Rng rng_;
};

}  // namespace spanreid::partnet
