#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "vkd/dataset.hpp"
#include "vkd/errors.hpp"
#include "vkd/log.hpp"
#include "vkd/rng.hpp"

namespace vkd {

enum class DistillSource { views, tracklet };

inline const char* to_string(DistillSource s) {
  return s == DistillSource::views ? "views" : "tracklet";
}

inline DistillSource distill_source_from_string(const std::string& s) {
  if (s == "views") return DistillSource::views;
  if (s == "tracklet") return DistillSource::tracklet;
  throw ConfigError("unknown distillation source '" + s + "' (expected views or tracklet)");
}

struct SamplerConfig {
  int P = 8;              // identities per batch
  int K = 4;              // bags per identity
  int frames_per_bag = 8; // frames drawn from each bag in stage one
  int N = 8;              // teacher bag size during distillation
  int M = 2;              // student bag size during distillation
  DistillSource distill_source = DistillSource::views;
  std::uint64_t seed = 0;

  void validate() const {
    if (P < 1 || K < 1 || frames_per_bag < 1) {
      throw ConfigError("sampler requires P, K, frames_per_bag >= 1");
    }
    if (N < 1 || M < 1) throw ConfigError("sampler requires N, M >= 1");
    if (M > N) throw ConfigError("student bag size M must not exceed teacher bag size N");
  }
};

// Indices of n frames spread evenly over a length-L sequence, repeating
// frames when n > L. Rounds half up, so ties lean late.
inline std::vector<int> equally_spaced_frames(int length, int n) {
  if (length < 1) throw ArgumentError("equally_spaced_frames: length must be >= 1");
  if (n < 1) throw ArgumentError("equally_spaced_frames: n must be >= 1");
  std::vector<int> idx(n);
  if (n == 1) {
    idx[0] = 0;
    return idx;
  }
  for (int i = 0; i < n; ++i) {
    idx[i] = static_cast<int>(std::floor(i * double(length - 1) / (n - 1) + 0.5));
  }
  return idx;
}

// Same, but materialized over a bag's members.
inline SetBag equally_spaced_bag(const SetBag& bag, int n) {
  auto take = equally_spaced_frames(static_cast<int>(bag.members.size()), n);
  SetBag out = bag;
  out.members.clear();
  out.members.reserve(take.size());
  for (int i : take) out.members.push_back(bag.members[i]);
  return out;
}

// One training batch: indices into the caller's bag list, plus dense labels.
struct BatchSpec {
  std::vector<int> bag_ids;
  std::vector<int> labels;
};

// Deterministic PK sampler: every identity appears in some batch each epoch,
// each chosen identity contributes exactly K bags (with replacement when it
// owns fewer than K). Identical (seed, epoch) => identical batches.
inline std::vector<BatchSpec> pk_batches(const std::vector<SetBag>& bags,
                                         const SamplerConfig& cfg, int epoch) {
  cfg.validate();
  std::map<int, std::vector<int>> by_label;  // dense label -> bag indices
  for (int i = 0; i < static_cast<int>(bags.size()); ++i) {
    by_label[bags[i].label].push_back(i);
  }
  const int num_ids = static_cast<int>(by_label.size());
  if (num_ids < cfg.P) {
    throw BatchCompositionError("need at least P=" + std::to_string(cfg.P) +
                                " identities, dataset has " + std::to_string(num_ids));
  }

  std::vector<int> ids;
  ids.reserve(num_ids);
  for (const auto& [label, _] : by_label) ids.push_back(label);

  Rng rng(mix_seed(cfg.seed, {stream::sampler, static_cast<std::uint64_t>(epoch)}));
  rng.shuffle(ids);

  const int num_batches = (num_ids + cfg.P - 1) / cfg.P;
  std::vector<BatchSpec> batches;
  batches.reserve(num_batches);
  for (int b = 0; b < num_batches; ++b) {
    std::vector<int> batch_ids(ids.begin() + b * cfg.P,
                               ids.begin() + std::min<std::size_t>((b + 1) * cfg.P, ids.size()));
    if (static_cast<int>(batch_ids.size()) < cfg.P) {
      // Top up the ragged tail with identities from earlier in the epoch.
      std::vector<int> others(ids.begin(), ids.begin() + b * cfg.P);
      rng.shuffle(others);
      batch_ids.insert(batch_ids.end(), others.begin(),
                       others.begin() + (cfg.P - batch_ids.size()));
    }
    BatchSpec spec;
    for (int label : batch_ids) {
      const auto& pool = by_label[label];
      if (static_cast<int>(pool.size()) >= cfg.K) {
        for (auto pick : rng.choose(pool.size(), cfg.K)) {
          spec.bag_ids.push_back(pool[pick]);
          spec.labels.push_back(label);
        }
      } else {
        for (int k = 0; k < cfg.K; ++k) {
          spec.bag_ids.push_back(pool[rng.below(pool.size())]);
          spec.labels.push_back(label);
        }
      }
    }
    batches.push_back(std::move(spec));
  }
  return batches;
}

inline std::vector<BatchSpec> pk_batches(const Dataset& ds, SetMode mode,
                                         const SamplerConfig& cfg, int epoch) {
  return pk_batches(group_sets(ds, mode), cfg, epoch);
}

// Draws n frames from an identity pool, spreading them over that identity's
// cameras: cameras are visited round-robin in a shuffled order, and within a
// camera frames come out of a shuffled queue (falling back to replacement
// once a queue empties). With c <= n cameras each camera contributes
// ceil(n/c) or floor(n/c) frames; with more cameras than n, n distinct
// cameras contribute one frame each.
inline SetBag sample_view_bag(const Dataset& ds, const SetBag& pool, int n, Rng& rng) {
  if (n < 1) throw ArgumentError("sample_view_bag: n must be >= 1");
  if (pool.members.empty()) throw ArgumentError("sample_view_bag: empty pool");

  std::map<int, std::vector<int>> by_cam;
  for (int idx : pool.members) by_cam[ds.samples[idx].camera].push_back(idx);

  std::vector<int> cams;
  for (const auto& [cam, _] : by_cam) cams.push_back(cam);
  if (cams.size() == 1) {
    log::warn("identity " + std::to_string(pool.identity) +
              ": single-camera pool, view bag cannot span cameras");
  }
  rng.shuffle(cams);

  std::map<int, std::vector<int>> queue;
  for (auto& [cam, members] : by_cam) {
    queue[cam] = members;
    rng.shuffle(queue[cam]);
  }

  SetBag out;
  out.identity = pool.identity;
  out.label = pool.label;
  out.mode = SetMode::views;
  out.camera = cams.size() == 1 ? cams[0] : -1;
  out.members.reserve(n);
  for (int t = 0; t < n; ++t) {
    const int cam = cams[t % cams.size()];
    auto& q = queue[cam];
    if (!q.empty()) {
      out.members.push_back(q.back());
      q.pop_back();
    } else {
      const auto& all = by_cam[cam];
      out.members.push_back(all[rng.below(all.size())]);
    }
  }
  return out;
}

// Uniform subset of size m, no duplicates, identity preserved.
inline SetBag subsample_bag(const SetBag& bag, int m, Rng& rng) {
  const int size = static_cast<int>(bag.members.size());
  if (m < 1) throw ArgumentError("subsample_bag: m must be >= 1");
  if (m > size) {
    throw ArgumentError("subsample_bag: m=" + std::to_string(m) + " exceeds bag size " +
                        std::to_string(size));
  }
  SetBag out = bag;
  out.members.clear();
  for (auto pick : rng.choose(size, m)) out.members.push_back(bag.members[pick]);
  return out;
}

}  // namespace vkd
