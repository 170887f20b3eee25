// Independent reference implementations used only by tests. Everything here
// is written the slow, obvious way on purpose so library results can be
// checked against code that shares none of their structure.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "vkd/losses.hpp"
#include "vkd/rng.hpp"
#include "vkd/tensor.hpp"

namespace oracle {

inline double dist(const std::vector<double>& a, const std::vector<double>& b, vkd::Metric m) {
  if (m == vkd::Metric::cosine) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += a[i] * b[i];
      aa += a[i] * a[i];
      bb += b[i] * b[i];
    }
    if (aa == 0 || bb == 0) return 1.0;
    // Grouped as ab / (|a|*|b|) so the rounding matches the library's distance
    // and comparisons against it can demand exact equality.
    return 1.0 - std::min(1.0, std::max(-1.0, ab / (std::sqrt(aa) * std::sqrt(bb))));
  }
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline std::vector<double> row_of(const vkd::Mat& m, int r) {
  return std::vector<double>(m.row(r), m.row(r) + m.cols);
}

// Soft-margin triplet loss by full triple enumeration: for each anchor the
// hardest positive/negative pair is found by scanning every (a, p, n) triple.
// The selection is structurally independent of the library's mining, but the
// final accumulation multiplies each anchor term by 1/b exactly as the
// library does, so the two results can be compared for exact equality.
inline double triplet_by_enumeration(const vkd::Mat& feats, const std::vector<int>& labels,
                                     vkd::Metric m) {
  const int b = feats.rows;
  const double inv_b = 1.0 / b;
  double total = 0;
  for (int a = 0; a < b; ++a) {
    double worst = -1e300;
    bool found = false;
    for (int p = 0; p < b; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      for (int n = 0; n < b; ++n) {
        if (labels[n] == labels[a]) continue;
        const double gap = dist(row_of(feats, a), row_of(feats, p), m) -
                           dist(row_of(feats, a), row_of(feats, n), m);
        worst = std::max(worst, gap);
        found = true;
      }
    }
    if (!found) return std::nan("");
    total += (std::log1p(std::exp(-std::abs(worst))) + std::max(worst, 0.0)) * inv_b;
  }
  return total;
}

// Central finite difference of a scalar function along one coordinate.
inline double central_diff(const std::function<double(const vkd::Mat&)>& f, vkd::Mat x, int r,
                           int c, double h) {
  const double orig = x.at(r, c);
  x.at(r, c) = orig + h;
  const double up = f(x);
  x.at(r, c) = orig - h;
  const double down = f(x);
  return (up - down) / (2 * h);
}

// Max relative error between an analytic gradient and finite differences,
// probing every coordinate (small inputs only).
inline double grad_rel_err(const std::function<double(const vkd::Mat&)>& f, const vkd::Mat& x,
                           const vkd::Mat& analytic, double h) {
  double worst = 0;
  for (int r = 0; r < x.rows; ++r) {
    for (int c = 0; c < x.cols; ++c) {
      const double fd = central_diff(f, x, r, c, h);
      const double an = analytic.at(r, c);
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

inline vkd::Mat random_mat(vkd::Rng& rng, int rows, int cols, double scale = 1.0) {
  vkd::Mat m(rows, cols);
  for (auto& v : m.v) v = rng.normal() * scale;
  return m;
}

// Ranking metrics the slow way: sort gallery by distance (ties by entity id),
// walk the list computing precision at every relevant hit.
struct RankedItem {
  double dist;
  int entity_id;
  bool relevant;
};

inline double ap_of(std::vector<RankedItem> items) {
  std::stable_sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.entity_id < b.entity_id;
  });
  int rel_seen = 0, total_rel = 0;
  for (const auto& it : items) total_rel += it.relevant ? 1 : 0;
  if (total_rel == 0) return std::nan("");
  double ap = 0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k].relevant) {
      ++rel_seen;
      ap += double(rel_seen) / double(k + 1);
    }
  }
  return ap / total_rel;
}

inline int first_rank_of(std::vector<RankedItem> items) {
  std::stable_sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.entity_id < b.entity_id;
  });
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (items[k].relevant) return static_cast<int>(k + 1);
  }
  return -1;
}

}  // namespace oracle
