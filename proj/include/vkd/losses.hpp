#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vkd/errors.hpp"
#include "vkd/tensor.hpp"

namespace vkd {

enum class Metric { euclidean, cosine };

inline Metric metric_from_string(const std::string& s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "cosine") return Metric::cosine;
  throw ConfigError("unknown metric '" + s + "'");
}

inline const char* to_string(Metric m) {
  return m == Metric::euclidean ? "euclidean" : "cosine";
}

namespace detail {

inline void require_finite(const Mat& m, const char* what) {
  for (double x : m.v) {
    if (!std::isfinite(x)) throw NumericError(std::string(what) + " contains non-finite values");
  }
}

inline double softplus(double x) {
  // log(1 + e^x) without overflow on either side
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Row-wise log-softmax into `out`, numerically stable.
inline void log_softmax_row(const double* x, int n, double* out) {
  double mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
  const double lse = mx + std::log(sum);
  for (int i = 0; i < n; ++i) out[i] = x[i] - lse;
}

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Adds coeff * ∂distance(a,b)/∂a to ga and coeff * ∂distance(a,b)/∂b to gb.
// Degenerate points (coincident pairs, zero-norm rows under cosine) get a
// zero subgradient.
inline void add_pair_dist_grad(const double* a, const double* b, int n, Metric m, double coeff,
                               double* ga, double* gb) {
  if (m == Metric::euclidean) {
    double sq = 0.0;
    for (int i = 0; i < n; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    const double d = std::sqrt(sq);
    if (d <= 0.0) return;
    const double s = coeff / d;
    for (int i = 0; i < n; ++i) {
      const double diff = a[i] - b[i];
      ga[i] += s * diff;
      gb[i] -= s * diff;
    }
  } else {
    const double na = std::sqrt(dot(a, a, n));
    const double nb = std::sqrt(dot(b, b, n));
    if (na <= 0.0 || nb <= 0.0) return;
    const double cos = dot(a, b, n) / (na * nb);
    for (int i = 0; i < n; ++i) {
      // d = 1 - cos -> ∂d/∂a = -(b/(na*nb) - cos*a/na^2)
      ga[i] += coeff * (cos * a[i] / (na * na) - b[i] / (na * nb));
      gb[i] += coeff * (cos * b[i] / (nb * nb) - a[i] / (na * nb));
    }
  }
}

}  // namespace detail

inline double distance(const double* a, const double* b, int dim, Metric m) {
  if (m == Metric::euclidean) {
    double sq = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double d = a[i] - b[i];
      sq += d * d;
    }
    return std::sqrt(std::max(sq, 0.0));
  }
  const double na = std::sqrt(detail::dot(a, a, dim));
  const double nb = std::sqrt(detail::dot(b, b, dim));
  if (na <= 0.0 || nb <= 0.0) return 1.0;  // zero vector: treat as orthogonal
  double cos = detail::dot(a, b, dim) / (na * nb);
  cos = std::min(1.0, std::max(-1.0, cos));
  return 1.0 - cos;
}

// All pairwise distances between rows of a and rows of b (e.g. query x gallery).
inline Mat pairwise_distance_matrix(const Mat& a, const Mat& b, Metric m = Metric::euclidean) {
  if (a.cols != b.cols) throw ArgumentError("pairwise_distance_matrix: dimension mismatch");
  if (a.rows == 0 || b.rows == 0) throw ArgumentError("pairwise_distance_matrix: empty input");
  detail::require_finite(a, "features");
  detail::require_finite(b, "features");
  Mat out(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.rows; ++j) {
      out.at(i, j) = distance(a.row(i), b.row(j), a.cols, m);
    }
  }
  return out;
}

// Self-distance variant: symmetric with an exactly zero diagonal.
inline Mat pairwise_distance_matrix(const Mat& a, Metric m = Metric::euclidean) {
  if (a.rows == 0) throw ArgumentError("pairwise_distance_matrix: empty input");
  detail::require_finite(a, "features");
  Mat out(a.rows, a.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = i + 1; j < a.rows; ++j) {
      const double d = distance(a.row(i), a.row(j), a.cols, m);
      out.at(i, j) = d;
      out.at(j, i) = d;
    }
  }
  return out;
}

// Loss value plus gradient with respect to the differentiated input
// (student-side input for the distillation losses).
struct LossOut {
  double value = 0.0;
  Mat grad;
};

// Mean negative log-likelihood of the labelled class under row softmax.
inline LossOut cross_entropy_loss(const Mat& logits, const std::vector<int>& labels) {
  if (logits.rows == 0 || logits.cols == 0) throw ArgumentError("cross_entropy_loss: empty batch");
  if (static_cast<int>(labels.size()) != logits.rows) {
    throw ArgumentError("cross_entropy_loss: labels/batch size mismatch");
  }
  detail::require_finite(logits, "logits");

  LossOut out;
  out.grad = Mat(logits.rows, logits.cols);
  std::vector<double> logp(logits.cols);
  const double inv_b = 1.0 / logits.rows;
  for (int i = 0; i < logits.rows; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= logits.cols) {
      throw ArgumentError("cross_entropy_loss: label " + std::to_string(y) + " out of range");
    }
    detail::log_softmax_row(logits.row(i), logits.cols, logp.data());
    out.value -= logp[y] * inv_b;
    double* g = out.grad.row(i);
    for (int c = 0; c < logits.cols; ++c) g[c] = std::exp(logp[c]) * inv_b;
    g[y] -= inv_b;
  }
  if (!std::isfinite(out.value)) throw NumericError("cross_entropy_loss: non-finite value");
  return out;
}

// Soft-margin batch-hard triplet loss: for every anchor, take its farthest
// same-label row and nearest different-label row, then average
// softplus(d_pos - d_neg). Ties resolve to the lowest row index.
inline LossOut batch_hard_triplet_loss(const Mat& feats, const std::vector<int>& labels,
                                       Metric metric = Metric::euclidean) {
  const int b = feats.rows;
  if (b == 0) throw ArgumentError("batch_hard_triplet_loss: empty batch");
  if (static_cast<int>(labels.size()) != b) {
    throw ArgumentError("batch_hard_triplet_loss: labels/batch size mismatch");
  }
  detail::require_finite(feats, "features");

  const Mat dist = pairwise_distance_matrix(feats, metric);
  LossOut out;
  out.grad = Mat(feats.rows, feats.cols);
  const double inv_b = 1.0 / b;

  for (int i = 0; i < b; ++i) {
    int hardest_pos = -1, hardest_neg = -1;
    for (int j = 0; j < b; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        if (hardest_pos < 0 || dist.at(i, j) > dist.at(i, hardest_pos)) hardest_pos = j;
      } else {
        if (hardest_neg < 0 || dist.at(i, j) < dist.at(i, hardest_neg)) hardest_neg = j;
      }
    }
    if (hardest_pos < 0) {
      throw BatchCompositionError("anchor row " + std::to_string(i) + " has no positive");
    }
    if (hardest_neg < 0) {
      throw BatchCompositionError("batch holds a single identity, no negatives");
    }
    const double margin = dist.at(i, hardest_pos) - dist.at(i, hardest_neg);
    out.value += detail::softplus(margin) * inv_b;

    // d softplus(d_ap - d_an) = sigmoid(margin) * (d d_ap - d d_an)
    const double s = detail::sigmoid(margin) * inv_b;
    detail::add_pair_dist_grad(feats.row(i), feats.row(hardest_pos), feats.cols, metric, s,
                               out.grad.row(i), out.grad.row(hardest_pos));
    detail::add_pair_dist_grad(feats.row(i), feats.row(hardest_neg), feats.cols, metric, -s,
                               out.grad.row(i), out.grad.row(hardest_neg));
  }
  if (!std::isfinite(out.value)) throw NumericError("batch_hard_triplet_loss: non-finite value");
  return out;
}

// tau^2-scaled mean KL divergence between teacher and student row softmaxes
// at temperature tau. Gradient flows to the student logits only.
inline LossOut knowledge_distillation_loss(const Mat& teacher_logits, const Mat& student_logits,
                                           double tau) {
  if (teacher_logits.rows != student_logits.rows ||
      teacher_logits.cols != student_logits.cols) {
    throw ArgumentError("knowledge_distillation_loss: teacher/student shape mismatch");
  }
  if (teacher_logits.rows == 0) throw ArgumentError("knowledge_distillation_loss: empty batch");
  if (!(tau > 0.0)) throw ArgumentError("knowledge_distillation_loss: tau must be > 0");
  detail::require_finite(teacher_logits, "teacher logits");
  detail::require_finite(student_logits, "student logits");

  const int b = teacher_logits.rows;
  const int c = teacher_logits.cols;
  LossOut out;
  out.grad = Mat(b, c);
  std::vector<double> tl(c), sl(c), logp(c), logq(c);
  const double inv_b = 1.0 / b;
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < c; ++j) {
      tl[j] = teacher_logits.at(i, j) / tau;
      sl[j] = student_logits.at(i, j) / tau;
    }
    detail::log_softmax_row(tl.data(), c, logp.data());
    detail::log_softmax_row(sl.data(), c, logq.data());
    double kl = 0.0;
    double* g = out.grad.row(i);
    for (int j = 0; j < c; ++j) {
      const double p = std::exp(logp[j]);
      kl += p * (logp[j] - logq[j]);
      g[j] = tau * inv_b * (std::exp(logq[j]) - p);
    }
    out.value += tau * tau * inv_b * kl;
  }
  if (!std::isfinite(out.value)) throw NumericError("knowledge_distillation_loss: non-finite value");
  return out;
}

// Unreduced sum over unordered row pairs of the squared gap between teacher
// and student pairwise distances. Teacher and student dimensions may differ.
// Gradient flows to the student features only.
inline LossOut distance_preservation_loss(const Mat& teacher_feats, const Mat& student_feats,
                                          Metric metric = Metric::euclidean) {
  if (teacher_feats.rows != student_feats.rows) {
    throw ArgumentError("distance_preservation_loss: row count mismatch");
  }
  if (teacher_feats.rows < 2) {
    throw ArgumentError("distance_preservation_loss: need at least 2 rows");
  }
  detail::require_finite(teacher_feats, "teacher features");
  detail::require_finite(student_feats, "student features");

  const int b = teacher_feats.rows;
  const Mat dt = pairwise_distance_matrix(teacher_feats, metric);
  const Mat ds = pairwise_distance_matrix(student_feats, metric);

  LossOut out;
  out.grad = Mat(student_feats.rows, student_feats.cols);
  for (int i = 0; i < b; ++i) {
    for (int j = i + 1; j < b; ++j) {
      const double gap = dt.at(i, j) - ds.at(i, j);
      out.value += gap * gap;
      detail::add_pair_dist_grad(student_feats.row(i), student_feats.row(j), student_feats.cols,
                                 metric, -2.0 * gap, out.grad.row(i), out.grad.row(j));
    }
  }
  if (!std::isfinite(out.value)) throw NumericError("distance_preservation_loss: non-finite value");
  return out;
}

struct LossWeights {
  double tau = 10.0;
  double alpha = 0.1;    // knowledge-distillation weight
  double beta = 1e-4;    // distance-preservation weight
  bool enable_ce = true;
  bool enable_tr = true;
  bool enable_kd = true;
  bool enable_dp = true;
  Metric metric = Metric::euclidean;

  void validate() const {
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    if (alpha < 0.0 || beta < 0.0) throw ConfigError("loss weights must be >= 0");
    if (!enable_ce && !enable_tr && !enable_kd && !enable_dp) {
      throw ConfigError("at least one loss term must be enabled");
    }
  }
};

// Per-term values are reported pre-weighting; the total applies weights and
// enable flags. Disabled terms contribute zero and report zero.
struct LossBreakdown {
  double ce = 0.0, tr = 0.0, kd = 0.0, dp = 0.0;
  double total = 0.0;
};

inline LossBreakdown vkd_objective(double ce, double tr, double kd, double dp,
                                   const LossWeights& w) {
  w.validate();
  LossBreakdown out;
  out.ce = w.enable_ce ? ce : 0.0;
  out.tr = w.enable_tr ? tr : 0.0;
  out.kd = w.enable_kd ? kd : 0.0;
  out.dp = w.enable_dp ? dp : 0.0;
  out.total = out.ce + out.tr + w.alpha * out.kd + w.beta * out.dp;
  if (!std::isfinite(out.total)) throw NumericError("objective is non-finite");
  return out;
}

}  // namespace vkd
