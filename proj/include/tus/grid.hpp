#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tus {

/// Dense row-major 2D array indexed (ix, iy); iy is the contiguous axis.
template <class T>
class Array2D {
 public:
  Array2D() = default;
  Array2D(int nx, int ny, T fill = T{}) : nx_(nx), ny_(ny) {
    if (nx < 0 || ny < 0) throw std::invalid_argument("Array2D: negative dimension");
    data_.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), fill);
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int ix, int iy) { return data_[index(ix, iy)]; }
  const T& operator()(int ix, int iy) const { return data_[index(ix, iy)]; }

  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(ix) * static_cast<std::size_t>(ny_) +
           static_cast<std::size_t>(iy);
  }
  bool contains(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx_ && iy < ny_; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  template <class U>
  bool same_shape(const Array2D<U>& other) const {
    return nx_ == other.nx() && ny_ == other.ny();
  }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Array2D& a, const Array2D& b) {
    return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.data_ == b.data_;
  }

 private:
  int nx_ = 0;
  int ny_ = 0;
  std::vector<T> data_;
};

using Image = Array2D<double>;
using Mask = Array2D<unsigned char>;

template <class A, class B>
void require_same_shape(const Array2D<A>& a, const Array2D<B>& b, const std::string& what) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(what + ": shape mismatch (" + std::to_string(a.nx()) + "x" +
                                std::to_string(a.ny()) + " vs " + std::to_string(b.nx()) + "x" +
                                std::to_string(b.ny()) + ")");
  }
}

}  // namespace tus
