#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vkd/errors.hpp"

namespace vkd {

// Row-major dense matrix of doubles. Deliberately minimal: the layers and
// losses only need contiguous storage plus row pointers.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

  std::size_t size() const { return v.size(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

// NCHW image/activation block.
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0) {}

  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }

  double* plane(int i, int ch) {
    return v.data() + (static_cast<std::size_t>(i) * c + ch) * plane_size();
  }
  const double* plane(int i, int ch) const {
    return v.data() + (static_cast<std::size_t>(i) * c + ch) * plane_size();
  }

  double* item(int i) { return v.data() + static_cast<std::size_t>(i) * c * plane_size(); }
  const double* item(int i) const {
    return v.data() + static_cast<std::size_t>(i) * c * plane_size();
  }

  std::size_t size() const { return v.size(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

// FNV-1a over raw bytes; used for parameter and config hashing.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::vector<double>& v, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(v.data(), v.size() * sizeof(double), h);
}

}  // namespace vkd
