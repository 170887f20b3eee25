#pragma once

#include <algorithm>
#include <cmath>

#include "vkd/rng.hpp"
#include "vkd/tensor.hpp"

namespace vkd {

struct AugmentConfig {
  bool flip = true;
  bool random_erase = true;
};

// Horizontal flip applied to one image slot of a [0,1] planar batch.
inline void flip_horizontal(Tensor4& x, int slot) {
  for (int c = 0; c < x.c; ++c) {
    double* p = x.plane(slot, c);
    for (int y = 0; y < x.h; ++y) {
      double* row = p + static_cast<std::size_t>(y) * x.w;
      std::reverse(row, row + x.w);
    }
  }
}

// Random erasing: replace one rectangle (area fraction in [0.02,0.4], aspect
// in [0.3,3.33], up to 10 placement attempts) by the per-channel fill value.
// Operates on pre-normalization [0,1] images, so the natural fill is the
// normalization mean.
inline void random_erase(Tensor4& x, int slot, const double fill[3], Rng& rng) {
  const double hw = static_cast<double>(x.h) * x.w;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double area = rng.uniform(0.02, 0.4) * hw;
    const double aspect = rng.uniform(0.3, 3.33);
    const int eh = static_cast<int>(std::lround(std::sqrt(area * aspect)));
    const int ew = static_cast<int>(std::lround(std::sqrt(area / aspect)));
    if (eh < 1 || ew < 1 || eh >= x.h || ew >= x.w) continue;
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(x.h - eh + 1)));
    const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(x.w - ew + 1)));
    for (int c = 0; c < x.c; ++c) {
      double* p = x.plane(slot, c);
      for (int y = y0; y < y0 + eh; ++y) {
        double* row = p + static_cast<std::size_t>(y) * x.w + x0;
        std::fill(row, row + ew, fill[c]);
      }
    }
    return;
  }
}

inline void augment_image(Tensor4& x, int slot, const AugmentConfig& cfg, const double fill[3],
                          Rng& rng) {
  if (cfg.flip && rng.bernoulli(0.5)) flip_horizontal(x, slot);
  if (cfg.random_erase && rng.bernoulli(0.5)) random_erase(x, slot, fill, rng);
}

}  // namespace vkd
