#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vkd/errors.hpp"

namespace vkd {

// splitmix64 step; used only to mix seeds, never as the main generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent substream seed from a root seed and a salt list
// (stream tag, epoch, tracklet id, ...). Stable across platforms.
inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> salts) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  for (std::uint64_t v : salts) {
    s ^= v + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    h ^= splitmix64(s);
  }
  return h;
}

// Substream tags; keep values stable, they are baked into saved artifacts.
namespace stream {
inline constexpr std::uint64_t init = 0x01;
inline constexpr std::uint64_t sampler = 0x02;
inline constexpr std::uint64_t augment = 0x03;
inline constexpr std::uint64_t bags = 0x04;
inline constexpr std::uint64_t split = 0x05;
inline constexpr std::uint64_t jitter = 0x06;
inline constexpr std::uint64_t probe = 0x07;
}  // namespace stream

// mt19937_64 with hand-rolled distributions. Standard-library distribution
// objects are implementation-defined, so sampling goes through the methods
// below to keep every artifact byte-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ArgumentError("Rng::below requires n > 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, no cached spare so the call sequence is predictable.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // First k entries of a Fisher-Yates pass; order of the tail is unspecified.
  std::vector<std::size_t> choose(std::size_t n, std::size_t k) {
    if (k > n) throw ArgumentError("Rng::choose requires k <= n");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(idx[i], idx[i + below(n - i)]);
    }
    idx.resize(k);
    return idx;
  }

  // mt19937_64 textual state is defined by the standard, so this is portable.
  std::string save_state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    if (!is) throw FormatError("bad rng state string");
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace vkd
