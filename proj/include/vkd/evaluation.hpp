#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vkd/dataset.hpp"
#include "vkd/errors.hpp"
#include "vkd/losses.hpp"
#include "vkd/model.hpp"
#include "vkd/sampling.hpp"
#include "vkd/trainer.hpp"

namespace vkd {

enum class Protocol { I2I, I2V, V2V };
enum class Side { query, gallery };

inline const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::I2I: return "I2I";
    case Protocol::I2V: return "I2V";
    default: return "V2V";
  }
}

inline Protocol protocol_from_string(const std::string& s) {
  if (s == "I2I" || s == "i2i") return Protocol::I2I;
  if (s == "I2V" || s == "i2v") return Protocol::I2V;
  if (s == "V2V" || s == "v2v") return Protocol::V2V;
  throw ConfigError("unknown protocol '" + s + "' (expected I2I, I2V or V2V)");
}

// Cross-camera filtering applied to each query's gallery view:
//  same_id_camera — drop only same-identity entries seen by the query's
//                   camera (standard junk removal; the default);
//  same_camera    — drop every gallery entry from the query's camera.
enum class ExclusionRule { same_id_camera, same_camera };

inline const char* to_string(ExclusionRule r) {
  return r == ExclusionRule::same_id_camera ? "same-id-camera" : "same-camera";
}

inline ExclusionRule exclusion_from_string(const std::string& s) {
  if (s == "standard" || s == "same-id-camera") return ExclusionRule::same_id_camera;
  if (s == "same-camera") return ExclusionRule::same_camera;
  throw ConfigError("unknown exclusion rule '" + s +
                    "' (expected standard, same-id-camera or same-camera)");
}

// One retrieval entity: an image (I protocols) or a whole tracklet (V).
struct FeatureRow {
  int entity_id = 0;  // tracklet id: unique per entity on both sides
  int identity = 0;
  int camera = 0;
  std::vector<double> feature;
};

struct FeatureTable {
  std::vector<FeatureRow> rows;
  int dim = 0;

  Mat matrix() const {
    Mat m(static_cast<int>(rows.size()), dim);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy(rows[r].feature.begin(), rows[r].feature.end(), m.row(static_cast<int>(r)));
    }
    return m;
  }
};

namespace detail {

// Encoder forwards in bounded batches; returns per-image raw features.
inline Mat embed_all(ModelBundle& model, ImageCache& cache, const std::vector<int>& samples) {
  const int total = static_cast<int>(samples.size());
  Mat raw(total, model.embed_dim);
  const int chunk = 128;
  for (int at = 0; at < total; at += chunk) {
    const int b = std::min(chunk, total - at);
    Tensor4 x(b, 3, cache.height(), cache.width());
    for (int i = 0; i < b; ++i) cache.fill(samples[at + i], x, i);
    const Mat part = model.embed(x, RunMode::eval);
    for (int i = 0; i < b; ++i) {
      std::copy(part.row(i), part.row(i) + part.cols, raw.row(at + i));
    }
  }
  return raw;
}

}  // namespace detail

// Features for one side of a protocol. I entities are the first frame of
// each tracklet; V entities aggregate the tracklet's frames (all of them, or
// `gallery_frames` equally spaced ones on the gallery side when > 0).
// Features are the post-neck inference features, eval mode throughout.
inline FeatureTable extract_features(ModelBundle& model, const Dataset& ds, Side side,
                                     Protocol protocol, int gallery_frames = 0) {
  if (ds.samples.empty()) throw ArgumentError("extract_features: empty split");
  const bool video = (side == Side::gallery && protocol != Protocol::I2I) ||
                     (side == Side::query && protocol == Protocol::V2V);

  const auto bags = group_sets(ds, SetMode::tracklet);
  ImageCache cache(ds);

  // choose the member frames per entity
  std::vector<std::vector<int>> picked(bags.size());
  std::vector<int> flat;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    if (!video) {
      picked[b] = {bags[b].members.front()};  // first frame (members sorted by frame)
    } else if (side == Side::gallery && gallery_frames > 0) {
      picked[b] = equally_spaced_bag(bags[b], gallery_frames).members;
    } else {
      picked[b] = bags[b].members;
    }
    flat.insert(flat.end(), picked[b].begin(), picked[b].end());
  }

  const Mat raw = detail::embed_all(model, cache, flat);

  Mat set_raw(static_cast<int>(bags.size()), model.embed_dim);
  int at = 0;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const int n = static_cast<int>(picked[b].size());
    std::vector<int> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = at + i;
    const auto mean = aggregate_set(raw, rows);
    std::copy(mean.begin(), mean.end(), set_raw.row(static_cast<int>(b)));
    at += n;
  }

  const Mat inference = model.neck.forward(set_raw, RunMode::eval);

  FeatureTable table;
  table.dim = model.embed_dim;
  table.rows.resize(bags.size());
  for (std::size_t b = 0; b < bags.size(); ++b) {
    auto& row = table.rows[b];
    row.entity_id = bags[b].tracklet;
    row.identity = bags[b].identity;
    row.camera = bags[b].camera;
    row.feature.assign(inference.row(static_cast<int>(b)),
                       inference.row(static_cast<int>(b)) + table.dim);
  }
  return table;
}

struct QueryRanking {
  int query_row = 0;               // index into the query table
  std::vector<int> gallery_rows;   // kept gallery rows, ascending distance
  std::vector<char> relevant;      // same-identity flags, aligned with gallery_rows
};

struct RankingResult {
  std::vector<QueryRanking> queries;  // queries with >= 1 relevant item only
  int dropped = 0;                    // queries left without any relevant item
};

// Filter by the exclusion rule, sort ascending by distance with ties broken
// by ascending entity id, flag same-identity rows, drop hopeless queries.
inline RankingResult rank_queries(const FeatureTable& query, const FeatureTable& gallery,
                                  Metric metric, ExclusionRule rule) {
  if (gallery.rows.empty()) throw ArgumentError("rank_queries: empty gallery");
  if (query.dim != gallery.dim) throw ArgumentError("rank_queries: feature dimension mismatch");

  const Mat dist = pairwise_distance_matrix(query.matrix(), gallery.matrix(), metric);

  RankingResult out;
  for (std::size_t q = 0; q < query.rows.size(); ++q) {
    const auto& qr = query.rows[q];
    struct Entry {
      double d;
      int entity;
      int row;
    };
    std::vector<Entry> kept;
    for (std::size_t g = 0; g < gallery.rows.size(); ++g) {
      const auto& gr = gallery.rows[g];
      const bool same_cam = gr.camera == qr.camera;
      if (rule == ExclusionRule::same_camera ? same_cam : (same_cam && gr.identity == qr.identity)) {
        continue;
      }
      kept.push_back({dist.at(static_cast<int>(q), static_cast<int>(g)), gr.entity_id,
                      static_cast<int>(g)});
    }
    std::sort(kept.begin(), kept.end(), [](const Entry& a, const Entry& b) {
      if (a.d != b.d) return a.d < b.d;
      return a.entity < b.entity;
    });

    QueryRanking ranking;
    ranking.query_row = static_cast<int>(q);
    bool any_relevant = false;
    for (const auto& e : kept) {
      ranking.gallery_rows.push_back(e.row);
      const bool rel = gallery.rows[e.row].identity == qr.identity;
      ranking.relevant.push_back(rel ? 1 : 0);
      any_relevant = any_relevant || rel;
    }
    if (any_relevant) {
      out.queries.push_back(std::move(ranking));
    } else {
      ++out.dropped;
    }
  }
  return out;
}

// AP = (1/R) * sum over relevant positions k of precision@k.
inline double average_precision(const std::vector<char>& relevance) {
  int r_total = 0;
  for (char c : relevance) r_total += c ? 1 : 0;
  if (r_total == 0) throw ArgumentError("average_precision: no relevant items");
  double sum = 0.0;
  int hits = 0;
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    if (relevance[k]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / r_total;
}

inline int first_relevant_rank(const std::vector<char>& relevance) {
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    if (relevance[k]) return static_cast<int>(k + 1);
  }
  throw ArgumentError("first_relevant_rank: no relevant items");
}

// cmc[k-1] = fraction of queries whose first hit lands at rank <= k.
inline std::vector<double> cmc_curve(const std::vector<int>& first_ranks, int max_rank) {
  if (max_rank < 1) throw ArgumentError("cmc_curve: max_rank must be >= 1");
  std::vector<double> cmc(max_rank, 0.0);
  if (first_ranks.empty()) return cmc;
  for (int rank : first_ranks) {
    if (rank < 1) throw ArgumentError("cmc_curve: ranks are 1-based");
    if (rank <= max_rank) cmc[rank - 1] += 1.0;
  }
  double acc = 0.0;
  for (auto& v : cmc) {
    acc += v;
    v = acc / static_cast<double>(first_ranks.size());
  }
  return cmc;
}

struct EvalOptions {
  Metric metric = Metric::euclidean;
  ExclusionRule rule = ExclusionRule::same_id_camera;
  int gallery_frames = 0;  // 0 = every frame
  int max_rank = 10;
};

struct EvalReport {
  Protocol protocol = Protocol::I2V;
  ExclusionRule rule = ExclusionRule::same_id_camera;
  std::vector<double> cmc;  // cmc[k-1]
  double mAP = 0.0;
  int num_queries = 0;  // evaluated (kept) queries
  int dropped = 0;

  double cmc_at(int k) const {
    if (k < 1) throw ArgumentError("cmc_at: rank is 1-based");
    if (cmc.empty()) return 0.0;
    return cmc[std::min<std::size_t>(k, cmc.size()) - 1];
  }
};

inline EvalReport evaluate_tables(const FeatureTable& query, const FeatureTable& gallery,
                                  Protocol protocol, const EvalOptions& opt) {
  const RankingResult ranked = rank_queries(query, gallery, opt.metric, opt.rule);

  EvalReport report;
  report.protocol = protocol;
  report.rule = opt.rule;
  report.dropped = ranked.dropped;
  report.num_queries = static_cast<int>(ranked.queries.size());

  std::vector<int> first_ranks;
  double ap_sum = 0.0;
  for (const auto& q : ranked.queries) {
    ap_sum += average_precision(q.relevant);
    first_ranks.push_back(first_relevant_rank(q.relevant));
  }
  report.cmc = cmc_curve(first_ranks, opt.max_rank);
  report.mAP = report.num_queries > 0 ? ap_sum / report.num_queries : 0.0;
  return report;
}

inline EvalReport evaluate_protocol(ModelBundle& model, const Dataset& query_ds,
                                    const Dataset& gallery_ds, Protocol protocol,
                                    const EvalOptions& opt = {}) {
  check_query_gallery(query_ds, gallery_ds);
  const auto q = extract_features(model, query_ds, Side::query, protocol, 0);
  const auto g = extract_features(model, gallery_ds, Side::gallery, protocol, opt.gallery_frames);
  return evaluate_tables(q, g, protocol, opt);
}

struct SweepRow {
  int size = 0;
  double cmc1 = 0.0;
  double mAP = 0.0;
};

// One I2V evaluation per requested gallery tracklet length.
inline std::vector<SweepRow> gallery_size_sweep(ModelBundle& model, const Dataset& query_ds,
                                                const Dataset& gallery_ds,
                                                const std::vector<int>& sizes,
                                                EvalOptions opt = {}) {
  if (sizes.empty()) throw ArgumentError("gallery_size_sweep: no sizes given");
  check_query_gallery(query_ds, gallery_ds);
  const auto q = extract_features(model, query_ds, Side::query, Protocol::I2V, 0);
  std::vector<SweepRow> rows;
  for (int size : sizes) {
    if (size < 1) throw ArgumentError("gallery_size_sweep: sizes must be >= 1");
    const auto g = extract_features(model, gallery_ds, Side::gallery, Protocol::I2V, size);
    const auto rep = evaluate_tables(q, g, Protocol::I2V, opt);
    rows.push_back({size, rep.cmc_at(1), rep.mAP});
  }
  return rows;
}

namespace detail {

inline std::string json_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_eval_report(const EvalReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << "{\"protocol\":\"" << to_string(r.protocol) << "\",\"exclusion_rule\":\""
      << to_string(r.rule) << "\",\"cmc1\":" << detail::json_num(r.cmc_at(1))
      << ",\"cmc5\":" << detail::json_num(r.cmc_at(5))
      << ",\"cmc10\":" << detail::json_num(r.cmc_at(10))
      << ",\"mAP\":" << detail::json_num(r.mAP) << ",\"num_queries\":" << r.num_queries
      << ",\"dropped\":" << r.dropped << "}\n";
}

inline void write_sweep_report(const std::vector<SweepRow>& rows,
                               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path.string());
  for (const auto& row : rows) {
    out << "{\"gallery_frames\":" << row.size << ",\"cmc1\":" << detail::json_num(row.cmc1)
        << ",\"mAP\":" << detail::json_num(row.mAP) << "}\n";
  }
}

}  // namespace vkd
