#pragma once

#include <cmath>
#include <vector>

#include "vkd/errors.hpp"
#include "vkd/rng.hpp"
#include "vkd/tensor.hpp"

namespace vkd {

// train: batch statistics, running stats updated, activations saved for
//        backward.
// eval: running statistics, nothing saved.
// frozen_stats: batch statistics but no running update and no saving — the
//               teacher's mode during distillation.
enum class RunMode { train, eval, frozen_stats };

// 3x3 convolution, padding 1, stride 1 or 2.
struct Conv2d {
  int in_ch = 0, out_ch = 0, stride = 1;
  std::vector<double> w;   // [out][in][3][3]
  std::vector<double> b;   // [out]
  std::vector<double> gw, gb;
  Tensor4 x_saved;

  Conv2d() = default;
  Conv2d(int in, int out, int s)
      : in_ch(in), out_ch(out), stride(s),
        w(static_cast<std::size_t>(out) * in * 9, 0.0), b(out, 0.0),
        gw(w.size(), 0.0), gb(out, 0.0) {}

  void init(Rng& rng) {
    const double a = std::sqrt(6.0 / (in_ch * 9));
    for (auto& v : w) v = rng.uniform(-a, a);
    std::fill(b.begin(), b.end(), 0.0);
  }

  double* wk(int co, int ci, int ky) {
    return w.data() + ((static_cast<std::size_t>(co) * in_ch + ci) * 3 + ky) * 3;
  }
  const double* wk(int co, int ci, int ky) const {
    return w.data() + ((static_cast<std::size_t>(co) * in_ch + ci) * 3 + ky) * 3;
  }
  double* gwk(int co, int ci, int ky) {
    return gw.data() + ((static_cast<std::size_t>(co) * in_ch + ci) * 3 + ky) * 3;
  }

  static int out_extent(int in, int stride) { return (in - 1) / stride + 1; }

  Tensor4 forward(const Tensor4& x, bool save) {
    if (x.c != in_ch) throw ArgumentError("Conv2d: channel mismatch");
    const int oh = out_extent(x.h, stride), ow = out_extent(x.w, stride);
    Tensor4 y(x.n, out_ch, oh, ow);
    for (int n = 0; n < x.n; ++n) {
      for (int co = 0; co < out_ch; ++co) {
        double* yp = y.plane(n, co);
        const double bias = b[co];
        for (int i = 0; i < oh * ow; ++i) yp[i] = bias;
        for (int ci = 0; ci < in_ch; ++ci) {
          const double* xp = x.plane(n, ci);
          for (int ky = 0; ky < 3; ++ky) {
            const double* wrow = wk(co, ci, ky);
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride + ky - 1;
              if (iy < 0 || iy >= x.h) continue;
              double* yrow = yp + static_cast<std::size_t>(oy) * ow;
              const double* xrow = xp + static_cast<std::size_t>(iy) * x.w;
              for (int kx = 0; kx < 3; ++kx) {
                const double wv = wrow[kx];
                const int shift = kx - 1;
                // ox*stride + shift must stay within [0, x.w)
                int lo = 0;
                while (lo * stride + shift < 0) ++lo;
                int hi = ow - 1;
                while (hi >= 0 && hi * stride + shift >= x.w) --hi;
                const double* xs = xrow + static_cast<std::size_t>(lo) * stride + shift;
                if (stride == 1) {
                  for (int ox = lo; ox <= hi; ++ox) yrow[ox] += wv * xs[ox - lo];
                } else {
                  for (int ox = lo; ox <= hi; ++ox) yrow[ox] += wv * xs[(ox - lo) * 2];
                }
              }
            }
          }
        }
      }
    }
    if (save) x_saved = x;
    return y;
  }

  // Accumulates gw/gb, returns dx. Requires a prior forward with save=true.
  Tensor4 backward(const Tensor4& dy) {
    const Tensor4& x = x_saved;
    if (x.n != dy.n || dy.c != out_ch) throw ArgumentError("Conv2d: backward shape mismatch");
    Tensor4 dx(x.n, x.c, x.h, x.w);
    const int oh = dy.h, ow = dy.w;
    for (int n = 0; n < x.n; ++n) {
      for (int co = 0; co < out_ch; ++co) {
        const double* dyp = dy.plane(n, co);
        double acc = 0.0;
        for (int i = 0; i < oh * ow; ++i) acc += dyp[i];
        gb[co] += acc;
        for (int ci = 0; ci < in_ch; ++ci) {
          const double* xp = x.plane(n, ci);
          double* dxp = dx.plane(n, ci);
          for (int ky = 0; ky < 3; ++ky) {
            const double* wrow = wk(co, ci, ky);
            double* gwrow = gwk(co, ci, ky);
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride + ky - 1;
              if (iy < 0 || iy >= x.h) continue;
              const double* dyrow = dyp + static_cast<std::size_t>(oy) * ow;
              const double* xrow = xp + static_cast<std::size_t>(iy) * x.w;
              double* dxrow = dxp + static_cast<std::size_t>(iy) * x.w;
              for (int kx = 0; kx < 3; ++kx) {
                const int shift = kx - 1;
                int lo = 0;
                while (lo * stride + shift < 0) ++lo;
                int hi = ow - 1;
                while (hi >= 0 && hi * stride + shift >= x.w) --hi;
                const double wv = wrow[kx];
                double gsum = 0.0;
                for (int ox = lo; ox <= hi; ++ox) {
                  const int ix = ox * stride + shift;
                  const double g = dyrow[ox];
                  gsum += g * xrow[ix];
                  dxrow[ix] += wv * g;
                }
                gwrow[kx] += gsum;
              }
            }
          }
        }
      }
    }
    return dx;
  }

  void zero_grad() {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
  }
};

struct BatchNorm2d {
  int ch = 0;
  double eps = 1e-5, momentum = 0.1;
  std::vector<double> gamma, beta, running_mean, running_var;
  std::vector<double> ggamma, gbeta;
  // saved by training forward
  std::vector<double> mean_saved, invstd_saved;
  Tensor4 xhat_saved;

  BatchNorm2d() = default;
  explicit BatchNorm2d(int c)
      : ch(c), gamma(c, 1.0), beta(c, 0.0), running_mean(c, 0.0), running_var(c, 1.0),
        ggamma(c, 0.0), gbeta(c, 0.0) {}

  void reset() {
    std::fill(gamma.begin(), gamma.end(), 1.0);
    std::fill(beta.begin(), beta.end(), 0.0);
    std::fill(running_mean.begin(), running_mean.end(), 0.0);
    std::fill(running_var.begin(), running_var.end(), 1.0);
  }

  Tensor4 forward(const Tensor4& x, RunMode mode) {
    if (x.c != ch) throw ArgumentError("BatchNorm2d: channel mismatch");
    Tensor4 y(x.n, x.c, x.h, x.w);
    const std::size_t plane = x.plane_size();
    const double cnt = static_cast<double>(x.n) * plane;

    if (mode == RunMode::eval) {
      for (int c = 0; c < ch; ++c) {
        const double inv = 1.0 / std::sqrt(running_var[c] + eps);
        const double g = gamma[c], b = beta[c], m = running_mean[c];
        for (int n = 0; n < x.n; ++n) {
          const double* xp = x.plane(n, c);
          double* yp = y.plane(n, c);
          for (std::size_t i = 0; i < plane; ++i) yp[i] = g * (xp[i] - m) * inv + b;
        }
      }
      return y;
    }

    const bool save = mode == RunMode::train;
    if (save) {
      mean_saved.assign(ch, 0.0);
      invstd_saved.assign(ch, 0.0);
      xhat_saved = Tensor4(x.n, x.c, x.h, x.w);
    }
    for (int c = 0; c < ch; ++c) {
      double sum = 0.0;
      for (int n = 0; n < x.n; ++n) {
        const double* xp = x.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) sum += xp[i];
      }
      const double mean = sum / cnt;
      double sq = 0.0;
      for (int n = 0; n < x.n; ++n) {
        const double* xp = x.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) sq += (xp[i] - mean) * (xp[i] - mean);
      }
      const double var = sq / cnt;
      const double inv = 1.0 / std::sqrt(var + eps);
      const double g = gamma[c], b = beta[c];
      for (int n = 0; n < x.n; ++n) {
        const double* xp = x.plane(n, c);
        double* yp = y.plane(n, c);
        double* hp = save ? xhat_saved.plane(n, c) : nullptr;
        for (std::size_t i = 0; i < plane; ++i) {
          const double h = (xp[i] - mean) * inv;
          if (save) hp[i] = h;
          yp[i] = g * h + b;
        }
      }
      if (save) {
        mean_saved[c] = mean;
        invstd_saved[c] = inv;
        running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean;
        const double unbiased = cnt > 1.5 ? var * cnt / (cnt - 1.0) : var;
        running_var[c] = (1.0 - momentum) * running_var[c] + momentum * unbiased;
      }
    }
    return y;
  }

  Tensor4 backward(const Tensor4& dy) {
    const Tensor4& xhat = xhat_saved;
    if (dy.c != ch || xhat.size() != dy.size()) {
      throw ArgumentError("BatchNorm2d: backward without saved training forward");
    }
    Tensor4 dx(dy.n, dy.c, dy.h, dy.w);
    const std::size_t plane = dy.plane_size();
    const double cnt = static_cast<double>(dy.n) * plane;
    for (int c = 0; c < ch; ++c) {
      double sum_dy = 0.0, sum_dy_h = 0.0;
      for (int n = 0; n < dy.n; ++n) {
        const double* dp = dy.plane(n, c);
        const double* hp = xhat.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          sum_dy += dp[i];
          sum_dy_h += dp[i] * hp[i];
        }
      }
      ggamma[c] += sum_dy_h;
      gbeta[c] += sum_dy;
      const double scale = gamma[c] * invstd_saved[c] / cnt;
      for (int n = 0; n < dy.n; ++n) {
        const double* dp = dy.plane(n, c);
        const double* hp = xhat.plane(n, c);
        double* xp = dx.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          xp[i] = scale * (cnt * dp[i] - sum_dy - hp[i] * sum_dy_h);
        }
      }
    }
    return dx;
  }

  void zero_grad() {
    std::fill(ggamma.begin(), ggamma.end(), 0.0);
    std::fill(gbeta.begin(), gbeta.end(), 0.0);
  }
};

// Per-feature batch norm over a (B, F) matrix.
struct BatchNorm1d {
  int features = 0;
  double eps = 1e-5, momentum = 0.1;
  std::vector<double> gamma, beta, running_mean, running_var;
  std::vector<double> ggamma, gbeta;
  std::vector<double> invstd_saved;
  Mat xhat_saved;

  BatchNorm1d() = default;
  explicit BatchNorm1d(int f)
      : features(f), gamma(f, 1.0), beta(f, 0.0), running_mean(f, 0.0), running_var(f, 1.0),
        ggamma(f, 0.0), gbeta(f, 0.0) {}

  void reset() {
    std::fill(gamma.begin(), gamma.end(), 1.0);
    std::fill(beta.begin(), beta.end(), 0.0);
    std::fill(running_mean.begin(), running_mean.end(), 0.0);
    std::fill(running_var.begin(), running_var.end(), 1.0);
  }

  Mat forward(const Mat& x, RunMode mode) {
    if (x.cols != features) throw ArgumentError("BatchNorm1d: feature mismatch");
    Mat y(x.rows, x.cols);
    if (mode == RunMode::eval) {
      for (int f = 0; f < features; ++f) {
        const double inv = 1.0 / std::sqrt(running_var[f] + eps);
        for (int r = 0; r < x.rows; ++r) {
          y.at(r, f) = gamma[f] * (x.at(r, f) - running_mean[f]) * inv + beta[f];
        }
      }
      return y;
    }
    const bool save = mode == RunMode::train;
    if (save) {
      invstd_saved.assign(features, 0.0);
      xhat_saved = Mat(x.rows, x.cols);
    }
    const double cnt = x.rows;
    for (int f = 0; f < features; ++f) {
      double sum = 0.0;
      for (int r = 0; r < x.rows; ++r) sum += x.at(r, f);
      const double mean = sum / cnt;
      double sq = 0.0;
      for (int r = 0; r < x.rows; ++r) sq += (x.at(r, f) - mean) * (x.at(r, f) - mean);
      const double var = sq / cnt;
      const double inv = 1.0 / std::sqrt(var + eps);
      for (int r = 0; r < x.rows; ++r) {
        const double h = (x.at(r, f) - mean) * inv;
        if (save) xhat_saved.at(r, f) = h;
        y.at(r, f) = gamma[f] * h + beta[f];
      }
      if (save) {
        invstd_saved[f] = inv;
        running_mean[f] = (1.0 - momentum) * running_mean[f] + momentum * mean;
        const double unbiased = cnt > 1.5 ? var * cnt / (cnt - 1.0) : var;
        running_var[f] = (1.0 - momentum) * running_var[f] + momentum * unbiased;
      }
    }
    return y;
  }

  Mat backward(const Mat& dy) {
    if (dy.cols != features || xhat_saved.rows != dy.rows) {
      throw ArgumentError("BatchNorm1d: backward without saved training forward");
    }
    Mat dx(dy.rows, dy.cols);
    const double cnt = dy.rows;
    for (int f = 0; f < features; ++f) {
      double sum_dy = 0.0, sum_dy_h = 0.0;
      for (int r = 0; r < dy.rows; ++r) {
        sum_dy += dy.at(r, f);
        sum_dy_h += dy.at(r, f) * xhat_saved.at(r, f);
      }
      ggamma[f] += sum_dy_h;
      gbeta[f] += sum_dy;
      const double scale = gamma[f] * invstd_saved[f] / cnt;
      for (int r = 0; r < dy.rows; ++r) {
        dx.at(r, f) =
            scale * (cnt * dy.at(r, f) - sum_dy - xhat_saved.at(r, f) * sum_dy_h);
      }
    }
    return dx;
  }

  void zero_grad() {
    std::fill(ggamma.begin(), ggamma.end(), 0.0);
    std::fill(gbeta.begin(), gbeta.end(), 0.0);
  }
};

struct ReLU4 {
  std::vector<char> mask;

  Tensor4 forward(const Tensor4& x, bool save) {
    Tensor4 y = x;
    if (save) mask.assign(x.size(), 0);
    for (std::size_t i = 0; i < y.v.size(); ++i) {
      if (y.v[i] > 0.0) {
        if (save) mask[i] = 1;
      } else {
        y.v[i] = 0.0;
      }
    }
    return y;
  }

  Tensor4 backward(const Tensor4& dy) {
    if (mask.size() != dy.size()) throw ArgumentError("ReLU: backward without saved forward");
    Tensor4 dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i) {
      if (!mask[i]) dx.v[i] = 0.0;
    }
    return dx;
  }
};

// Fully connected layer, optionally bias-free.
struct Linear {
  int in_f = 0, out_f = 0;
  bool has_bias = true;
  std::vector<double> w;  // [out][in]
  std::vector<double> b;
  std::vector<double> gw, gb;
  Mat x_saved;

  Linear() = default;
  Linear(int in, int out, bool bias)
      : in_f(in), out_f(out), has_bias(bias), w(static_cast<std::size_t>(in) * out, 0.0),
        b(bias ? out : 0, 0.0), gw(w.size(), 0.0), gb(b.size(), 0.0) {}

  void init(Rng& rng) {
    const double a = std::sqrt(6.0 / in_f);
    for (auto& v : w) v = rng.uniform(-a, a);
    std::fill(b.begin(), b.end(), 0.0);
  }

  Mat forward(const Mat& x, bool save) {
    if (x.cols != in_f) throw ArgumentError("Linear: input dimension mismatch");
    Mat y(x.rows, out_f);
    for (int r = 0; r < x.rows; ++r) {
      const double* xr = x.row(r);
      double* yr = y.row(r);
      for (int o = 0; o < out_f; ++o) {
        const double* wr = w.data() + static_cast<std::size_t>(o) * in_f;
        double acc = has_bias ? b[o] : 0.0;
        for (int i = 0; i < in_f; ++i) acc += wr[i] * xr[i];
        yr[o] = acc;
      }
    }
    if (save) x_saved = x;
    return y;
  }

  Mat backward(const Mat& dy) {
    if (dy.cols != out_f || x_saved.rows != dy.rows) {
      throw ArgumentError("Linear: backward without saved forward");
    }
    Mat dx(dy.rows, in_f);
    for (int r = 0; r < dy.rows; ++r) {
      const double* dyr = dy.row(r);
      const double* xr = x_saved.row(r);
      double* dxr = dx.row(r);
      for (int o = 0; o < out_f; ++o) {
        const double g = dyr[o];
        if (has_bias) gb[o] += g;
        double* gwr = gw.data() + static_cast<std::size_t>(o) * in_f;
        const double* wr = w.data() + static_cast<std::size_t>(o) * in_f;
        for (int i = 0; i < in_f; ++i) {
          gwr[i] += g * xr[i];
          dxr[i] += g * wr[i];
        }
      }
    }
    return dx;
  }

  void zero_grad() {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
  }
};

// Global average pooling (B, C, H, W) -> (B, C).
struct GlobalAvgPool {
  int h_saved = 0, w_saved = 0;

  Mat forward(const Tensor4& x, bool save) {
    Mat y(x.n, x.c);
    const std::size_t plane = x.plane_size();
    for (int n = 0; n < x.n; ++n) {
      for (int c = 0; c < x.c; ++c) {
        const double* xp = x.plane(n, c);
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += xp[i];
        y.at(n, c) = acc / plane;
      }
    }
    if (save) {
      h_saved = x.h;
      w_saved = x.w;
    }
    return y;
  }

  Tensor4 backward(const Mat& dy) {
    if (h_saved == 0) throw ArgumentError("GlobalAvgPool: backward without saved forward");
    Tensor4 dx(dy.rows, dy.cols, h_saved, w_saved);
    const double inv = 1.0 / (static_cast<double>(h_saved) * w_saved);
    for (int n = 0; n < dy.rows; ++n) {
      for (int c = 0; c < dy.cols; ++c) {
        double* xp = dx.plane(n, c);
        const double g = dy.at(n, c) * inv;
        const std::size_t plane = dx.plane_size();
        for (std::size_t i = 0; i < plane; ++i) xp[i] = g;
      }
    }
    return dx;
  }
};

}  // namespace vkd
