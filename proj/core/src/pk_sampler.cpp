#include "spanreid/pk_sampler.hpp"

#include <set>
#include <stdexcept>

namespace spanreid::partnet {

PKSampler::PKSampler(const std::vector<int>& identity_of_sample, int p, int k, uint64_t seed)
    : p_(p), k_(k), rng_(Rng::mix(seed, 0x9cbaULL)) {
  if (p < 2 || k < 2) throw std::invalid_argument("PKSampler: need P >= 2 and K >= 2");
  for (size_t i = 0; i < identity_of_sample.size(); ++i) {
    by_id_[identity_of_sample[i]].push_back(static_cast<int>(i));
  }
  if (static_cast<int>(by_id_.size()) < p)
    throw std::invalid_argument("PKSampler: fewer identities than P");
  for (const auto& kv : by_id_) id_list_.push_back(kv.first);
}

int PKSampler::batches_per_epoch() const {
  return static_cast<int>((id_list_.size() + p_ - 1) / p_);
}

std::vector<int> PKSampler::next_batch() {
  std::vector<int> batch;
  batch.reserve(static_cast<size_t>(p_) * k_);
  std::set<int> chosen;
  for (int i = 0; i < p_; ++i) {
    // next identity from the queue that is not already in this batch;
    // the queue refills (reshuffled) when exhausted
    int id = -1;
    while (id < 0) {
      if (queue_pos_ >= queue_.size()) {
        queue_ = id_list_;
        rng_.shuffle(queue_);
        queue_pos_ = 0;
      }
      size_t j = queue_pos_;
      while (j < queue_.size() && chosen.count(queue_[j])) ++j;
      if (j < queue_.size()) {
        std::swap(queue_[queue_pos_], queue_[j]);
        id = queue_[queue_pos_++];
      } else {
        queue_pos_ = queue_.size();  // everything left is already in the batch
      }
    }
    chosen.insert(id);
    const auto& pool = by_id_.at(id);
    if (static_cast<int>(pool.size()) >= k_) {
      std::vector<int> copy = pool;
      rng_.shuffle(copy);
      batch.insert(batch.end(), copy.begin(), copy.begin() + k_);
    } else {
      for (int j = 0; j < k_; ++j) {
        batch.push_back(pool[rng_.uniform_int(0, static_cast<int>(pool.size()) - 1)]);
      }
    }
  }
  return batch;
}

}  // namespace spanreid::partnet
