#pragma once

#include <cassert>
#include <cstddef>
#include <cstdlib>
#include <new>
#include <vector>

namespace spanreid {

// 64-byte aligned storage. Keeping every numeric buffer at a fixed
// alignment makes vectorized reduction order independent of allocator
// state, which is what makes reruns bit-identical.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T* p, size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

// Dense NCHW tensor. Feature vectors use h = w = 1.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w)
      : n_(n), c_(c), h_(h), w_(w),
        data_(static_cast<size_t>(n) * c * h * w, T(0)) {}

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  T& at(int in, int ic, int iy, int ix) {
    return data_[offset(in, ic, iy, ix)];
  }
  const T& at(int in, int ic, int iy, int ix) const {
    return data_[offset(in, ic, iy, ix)];
  }

  size_t offset(int in, int ic, int iy, int ix) const {
    assert(in < n_ && ic < c_ && iy < h_ && ix < w_);
    return ((static_cast<size_t>(in) * c_ + ic) * h_ + iy) * w_ + ix;
  }

  // Pointer to the start of one sample (plane of c*h*w values).
  T* sample(int in) { return data_.data() + static_cast<size_t>(in) * c_ * h_ * w_; }
  const T* sample(int in) const {
    return data_.data() + static_cast<size_t>(in) * c_ * h_ * w_;
  }
  size_t sample_size() const { return static_cast<size_t>(c_) * h_ * w_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(n_, c_, h_, w_);
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  AlignedVector<T> data_;
};

}  // namespace spanreid
