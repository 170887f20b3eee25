#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <vector>

#include "vkd/errors.hpp"
#include "vkd/evaluation.hpp"
#include "vkd/image.hpp"
#include "vkd/losses.hpp"
#include "vkd/model.hpp"
#include "vkd/rng.hpp"
#include "vkd/sampling.hpp"

namespace vkd {

struct ProbeReport {
  double accuracy = 0.0;
  double prior_accuracy = 0.0;
  int num_cameras = 0;
  int epochs_trained = 0;
};

// Expected accuracy of guessing by sampling the camera prior: sum of p_c^2.
inline double prior_classifier_accuracy(const std::vector<int>& histogram) {
  double total = 0.0;
  for (int c : histogram) {
    if (c < 0) throw ArgumentError("prior_classifier_accuracy: negative count");
    total += c;
  }
  if (total <= 0.0) throw ArgumentError("prior_classifier_accuracy: empty histogram");
  double acc = 0.0;
  for (int c : histogram) {
    const double p = c / total;
    acc += p * p;
  }
  return acc;
}

// How much camera identity leaks into frozen features: a linear classifier
// (zero init, full-batch gradient descent, lr halved every 50 epochs) is fit
// on the features and scored on the same rows — deliberately the fitting
// set, mirroring the diagnostic protocol this reproduces. The backbone is
// never touched; only the feature table is read.
inline ProbeReport fit_camera_probe(const FeatureTable& features, int epochs = 300,
                                    double lr = 1e-3) {
  if (features.rows.empty()) throw ArgumentError("fit_camera_probe: empty feature table");
  if (epochs < 0) throw ArgumentError("fit_camera_probe: epochs must be >= 0");

  std::set<int> cams;
  for (const auto& r : features.rows) cams.insert(r.camera);
  if (cams.size() < 2) throw ArgumentError("fit_camera_probe: need >= 2 distinct cameras");
  std::map<int, int> cam_label;
  int next = 0;
  for (int c : cams) cam_label[c] = next++;
  const int C = static_cast<int>(cams.size());
  const int B = static_cast<int>(features.rows.size());
  const int D = features.dim;

  const Mat x = features.matrix();
  std::vector<int> y(B);
  std::vector<int> hist(C, 0);
  for (int i = 0; i < B; ++i) {
    y[i] = cam_label[features.rows[i].camera];
    ++hist[y[i]];
  }

  Linear probe(D, C, /*bias=*/true);  // zero weights, zero bias
  double step = lr;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    if (epoch > 0 && epoch % 50 == 0) step *= 0.5;
    const Mat logits = probe.forward(x, /*save=*/true);
    const LossOut ce = cross_entropy_loss(logits, y);
    probe.zero_grad();
    probe.backward(ce.grad);
    for (std::size_t i = 0; i < probe.w.size(); ++i) probe.w[i] -= step * probe.gw[i];
    for (std::size_t i = 0; i < probe.b.size(); ++i) probe.b[i] -= step * probe.gb[i];
  }

  const Mat logits = probe.forward(x, /*save=*/false);
  int correct = 0;
  for (int i = 0; i < B; ++i) {
    int best = 0;
    for (int c = 1; c < C; ++c) {
      if (logits.at(i, c) > logits.at(i, best)) best = c;  // ties keep the lowest label
    }
    if (best == y[i]) ++correct;
  }

  ProbeReport report;
  report.accuracy = static_cast<double>(correct) / B;
  report.prior_accuracy = prior_classifier_accuracy(hist);
  report.num_cameras = C;
  report.epochs_trained = epochs;
  return report;
}

inline void write_probe_report(const ProbeReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << "{\"accuracy\":" << detail::json_num(r.accuracy)
      << ",\"prior_accuracy\":" << detail::json_num(r.prior_accuracy)
      << ",\"num_cameras\":" << r.num_cameras << ",\"epochs_trained\":" << r.epochs_trained
      << "}\n";
}

struct BlockReport {
  Mat matrix;               // (B,B) pairwise distances, rows grouped by identity
  std::vector<int> identities;  // identity per row
  double intra_mean = 0.0;  // same-identity off-diagonal mean
  double inter_mean = 0.0;  // cross-identity mean
  double ratio = 0.0;       // intra_mean / inter_mean
};

// Pairwise-distance block structure over per-identity bags: `ids` identities
// x `bags_per_id` bags, each bag `bag_size` frames aggregated to one
// inference feature. In tracklet mode the bags are the identity's first
// tracklets; in views mode they are freshly sampled multi-camera bags under
// `seed`. Tight same-identity blocks against a far field (low ratio) is the
// behaviour multi-view training is meant to amplify.
inline BlockReport distance_block_report(ModelBundle& model, const Dataset& ds, SetMode mode,
                                         int ids, int bags_per_id, int bag_size,
                                         std::uint64_t seed, Metric metric = Metric::euclidean) {
  if (ids < 2) throw ArgumentError("distance_block_report: need >= 2 identities");
  if (bags_per_id < 1 || bag_size < 1) {
    throw ArgumentError("distance_block_report: bags_per_id and bag_size must be >= 1");
  }

  // collect per-identity bag lists in the requested mode
  std::map<int, std::vector<const SetBag*>> by_id;
  const auto bags = group_sets(ds, mode);
  for (const auto& b : bags) by_id[b.identity].push_back(&b);

  Rng rng(mix_seed(seed, {stream::bags, 0xb10c}));
  std::vector<SetBag> chosen;
  std::vector<int> identities;
  int taken = 0;
  for (const auto& [id, list] : by_id) {
    if (taken == ids) break;
    if (mode == SetMode::tracklet) {
      if (static_cast<int>(list.size()) < bags_per_id) continue;  // identity lacks tracklets
      for (int k = 0; k < bags_per_id; ++k) {
        chosen.push_back(equally_spaced_bag(*list[k], bag_size));
        identities.push_back(id);
      }
    } else {
      for (int k = 0; k < bags_per_id; ++k) {
        chosen.push_back(sample_view_bag(ds, *list.front(), bag_size, rng));
        identities.push_back(id);
      }
    }
    ++taken;
  }
  if (taken < ids) {
    throw ArgumentError("distance_block_report: only " + std::to_string(taken) + " of " +
                        std::to_string(ids) + " identities have enough bags");
  }

  ImageCache cache(ds);
  std::vector<int> flat;
  for (const auto& b : chosen) flat.insert(flat.end(), b.members.begin(), b.members.end());
  const Mat raw = detail::embed_all(model, cache, flat);

  const int B = static_cast<int>(chosen.size());
  Mat set_raw(B, model.embed_dim);
  int at = 0;
  for (int b = 0; b < B; ++b) {
    const int n = static_cast<int>(chosen[b].members.size());
    std::vector<int> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = at + i;
    const auto mean = aggregate_set(raw, rows);
    std::copy(mean.begin(), mean.end(), set_raw.row(b));
    at += n;
  }
  const Mat inference = model.neck.forward(set_raw, RunMode::eval);

  BlockReport report;
  report.matrix = pairwise_distance_matrix(inference, metric);
  report.identities = identities;
  double intra = 0.0, inter = 0.0;
  int n_intra = 0, n_inter = 0;
  for (int i = 0; i < B; ++i) {
    for (int j = 0; j < B; ++j) {
      if (i == j) continue;
      if (identities[i] == identities[j]) {
        intra += report.matrix.at(i, j);
        ++n_intra;
      } else {
        inter += report.matrix.at(i, j);
        ++n_inter;
      }
    }
  }
  report.intra_mean = n_intra > 0 ? intra / n_intra : 0.0;
  report.inter_mean = n_inter > 0 ? inter / n_inter : 0.0;
  report.ratio = report.inter_mean > 0.0 ? report.intra_mean / report.inter_mean : 0.0;
  return report;
}

// Plain numeric grid: one row per line, space-separated.
inline void write_block_grid(const BlockReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write grid: " + path.string());
  for (int i = 0; i < r.matrix.rows; ++i) {
    for (int j = 0; j < r.matrix.cols; ++j) {
      if (j) out << ' ';
      out << detail::json_num(r.matrix.at(i, j));
    }
    out << '\n';
  }
}

// Grayscale heatmap, `scale` pixels per cell; darker = closer.
inline void write_block_heatmap(const BlockReport& r, const std::filesystem::path& path,
                                int scale = 8) {
  const int B = r.matrix.rows;
  if (B == 0 || scale < 1) throw ArgumentError("write_block_heatmap: empty report");
  double dmax = 0.0;
  for (double v : r.matrix.v) dmax = std::max(dmax, v);
  ImageU8 img;
  img.width = B * scale;
  img.height = B * scale;
  img.rgb.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
  for (int i = 0; i < B; ++i) {
    for (int j = 0; j < B; ++j) {
      const double rel = dmax > 0.0 ? r.matrix.at(i, j) / dmax : 0.0;
      const auto level = static_cast<unsigned char>(std::lround(rel * 255.0));
      for (int py = i * scale; py < (i + 1) * scale; ++py) {
        for (int px = j * scale; px < (j + 1) * scale; ++px) {
          unsigned char* p = img.px(py, px);
          p[0] = p[1] = p[2] = level;
        }
      }
    }
  }
  write_ppm(path, img);
}

inline void write_block_summary(const BlockReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << "{\"rows\":" << r.matrix.rows << ",\"intra_mean\":" << detail::json_num(r.intra_mean)
      << ",\"inter_mean\":" << detail::json_num(r.inter_mean)
      << ",\"ratio\":" << detail::json_num(r.ratio) << "}\n";
}

}  // namespace vkd
