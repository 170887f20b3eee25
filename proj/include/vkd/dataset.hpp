#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vkd/errors.hpp"

namespace vkd {

// One image observation. `identity` is the annotated id as it appears in the
// manifest; dense training labels live in Dataset::label.
struct Sample {
  std::string path;  // relative to the dataset root
  int identity = 0;
  int camera = 0;
  int tracklet = 0;
  int frame = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::filesystem::path root;
  std::string split;            // "train", "query", "gallery", ...
  std::vector<int> label;       // per sample: dense index into orig_ids
  std::vector<int> orig_ids;    // dense label -> manifest identity
  int class_count = 0;

  std::filesystem::path image_path(int i) const { return root / samples[i].path; }
};

enum class SetMode { tracklet, views };

// A set of sample indices treated as one retrieval/training item.
struct SetBag {
  std::vector<int> members;  // indices into Dataset::samples
  int identity = 0;          // manifest identity
  int label = 0;             // dense label
  int camera = -1;           // camera if all members share one, else -1
  int tracklet = -1;         // tracklet id in tracklet mode, else -1
  SetMode mode = SetMode::tracklet;
};

namespace detail {

inline int parse_nonneg(std::string_view tok, const char* field, int line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || value < 0) {
    throw FormatError("line " + std::to_string(line_no) + ": bad " + field + " '" +
                      std::string(tok) + "'");
  }
  return value;
}

// Shared finalization: dense labels + integrity checks.
inline Dataset make_dataset(std::vector<Sample> samples, std::filesystem::path root,
                            std::string split, const std::string& origin) {
  if (samples.empty()) throw EmptyDatasetError(origin + " has no samples");

  std::set<std::pair<int, int>> seen;  // (tracklet, frame)
  std::map<int, std::pair<int, int>> tracklet_key;  // tracklet -> (identity, camera)
  for (const auto& s : samples) {
    if (!seen.insert({s.tracklet, s.frame}).second) {
      throw IntegrityError(origin + ": duplicate frame " + std::to_string(s.frame) +
                           " in tracklet " + std::to_string(s.tracklet));
    }
    auto [it, fresh] = tracklet_key.try_emplace(s.tracklet, s.identity, s.camera);
    if (!fresh && it->second != std::make_pair(s.identity, s.camera)) {
      throw IntegrityError(origin + ": tracklet " + std::to_string(s.tracklet) +
                           " seen with conflicting identity or camera");
    }
  }

  Dataset ds;
  ds.samples = std::move(samples);
  ds.root = std::move(root);
  ds.split = std::move(split);

  std::set<int> ids;
  for (const auto& s : ds.samples) ids.insert(s.identity);
  ds.orig_ids.assign(ids.begin(), ids.end());
  ds.class_count = static_cast<int>(ds.orig_ids.size());
  std::map<int, int> dense;
  for (int i = 0; i < ds.class_count; ++i) dense[ds.orig_ids[i]] = i;
  ds.label.reserve(ds.samples.size());
  for (const auto& s : ds.samples) ds.label.push_back(dense[s.identity]);
  return ds;
}

}  // namespace detail

// Manifest: one sample per line, `path identity camera tracklet frame`,
// whitespace separated. Blank lines and lines starting with '#' are skipped.
inline Dataset load_manifest(const std::filesystem::path& path,
                             const std::filesystem::path& root, std::string split = "") {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  if (split.empty()) split = path.stem().string();

  std::vector<Sample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::vector<std::string_view> tok;
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto b = rest.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) break;
      auto e = rest.find_first_of(" \t\r", b);
      if (e == std::string_view::npos) e = rest.size();
      tok.push_back(rest.substr(b, e - b));
      rest = rest.substr(e);
    }
    if (tok.size() != 5) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                        std::to_string(tok.size()));
    }
    Sample s;
    s.path = std::string(tok[0]);
    s.identity = detail::parse_nonneg(tok[1], "identity", line_no);
    s.camera = detail::parse_nonneg(tok[2], "camera", line_no);
    s.tracklet = detail::parse_nonneg(tok[3], "tracklet", line_no);
    s.frame = detail::parse_nonneg(tok[4], "frame", line_no);
    samples.push_back(std::move(s));
  }
  return detail::make_dataset(std::move(samples), root, split, path.filename().string());
}

inline void save_manifest(const std::filesystem::path& path, const std::vector<Sample>& samples,
                          const std::vector<std::string>& header_comments = {}) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  for (const auto& c : header_comments) out << "# " << c << "\n";
  for (const auto& s : samples) {
    out << s.path << " " << s.identity << " " << s.camera << " " << s.tracklet << " "
        << s.frame << "\n";
  }
  if (!out) throw IoError("short write: " + path.string());
}

// Every query identity must be retrievable from the gallery.
inline void check_query_gallery(const Dataset& query, const Dataset& gallery) {
  std::set<int> gids;
  for (const auto& s : gallery.samples) gids.insert(s.identity);
  for (const auto& s : query.samples) {
    if (!gids.count(s.identity)) {
      throw IntegrityError("query identity " + std::to_string(s.identity) +
                           " absent from gallery");
    }
  }
}

// tracklet mode: one bag per tracklet, members ordered by frame.
// views mode: one bag per identity pooling all of its tracklets, members
// ordered by (camera, tracklet, frame).
inline std::vector<SetBag> group_sets(const Dataset& ds, SetMode mode) {
  std::map<int, std::vector<int>> groups;  // key -> sample indices
  for (int i = 0; i < static_cast<int>(ds.samples.size()); ++i) {
    const auto& s = ds.samples[i];
    groups[mode == SetMode::tracklet ? s.tracklet : s.identity].push_back(i);
  }

  std::vector<SetBag> bags;
  bags.reserve(groups.size());
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end(), [&](int a, int b) {
      const auto& sa = ds.samples[a];
      const auto& sb = ds.samples[b];
      if (mode == SetMode::tracklet) return sa.frame < sb.frame;
      return std::tie(sa.camera, sa.tracklet, sa.frame) <
             std::tie(sb.camera, sb.tracklet, sb.frame);
    });
    SetBag bag;
    bag.members = std::move(members);
    bag.mode = mode;
    const auto& front = ds.samples[bag.members.front()];
    bag.identity = front.identity;
    bag.label = ds.label[bag.members.front()];
    bag.tracklet = mode == SetMode::tracklet ? key : -1;
    bag.camera = front.camera;
    for (int i : bag.members) {
      if (ds.samples[i].camera != bag.camera) {
        bag.camera = -1;
        break;
      }
    }
    bags.push_back(std::move(bag));
  }
  return bags;
}

}  // namespace vkd
