#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "vkd/dataset.hpp"
#include "vkd/errors.hpp"
#include "vkd/image.hpp"
#include "vkd/rng.hpp"

namespace vkd {

struct SynthConfig {
  int num_identities = 30;
  int num_cameras = 4;
  int tracklets_per_id_camera = 2;
  int frames_per_tracklet = 6;
  int image_size = 32;
  std::uint64_t seed = 7;

  void validate() const {
    if (num_identities < 1 || num_cameras < 1 || tracklets_per_id_camera < 1 ||
        frames_per_tracklet < 1) {
      throw ConfigError("synthetic counts must all be >= 1");
    }
    if (image_size < 8) throw ConfigError("synthetic image_size must be >= 8");
  }
};

struct SynthResult {
  std::filesystem::path train_manifest;
  std::filesystem::path query_manifest;
  std::filesystem::path gallery_manifest;
  int images_written = 0;
};

namespace detail {

inline double fract(double x) { return x - std::floor(x); }

inline std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  const double hh = fract(h) * 6.0;
  const int i = static_cast<int>(hh);
  const double f = hh - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (i % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

// Identity decides what is rendered (shape, hue, stripe phase); camera
// decides the backdrop; tracklet and frame only jitter the view of it.
struct SynthPalette {
  std::array<double, 3> fg, bg;
  int shape;           // 0 disc, 1 square, 2 diamond, 3 ring
  double fg_angle, fg_period, fg_phase;
  double bg_angle, bg_period, bg_phase;

  SynthPalette(int id, int cam) {
    constexpr double phi = 0.6180339887498949;
    // Hue is a coarse cue shared by several identities; the stripe pattern
    // (angle, period, phase) is what tells same-hue identities apart.
    fg = hsv_to_rgb(0.11 + (id % 6) * phi, 0.85, 0.95);
    shape = id % 4;
    fg_angle = 3.1 * fract(id * 0.41421356237309515);
    fg_period = 3.0 + (id * 7 % 4);
    fg_phase = 6.283185307179586 * fract(id * 0.7548776662466927);
    bg = hsv_to_rgb(0.53 + cam * 0.23, 0.45, 0.55);
    bg_angle = 0.9 * cam;
    bg_period = 4.0 + cam % 5;
    bg_phase = 6.283185307179586 * fract(cam * 0.3183098861837907);
  }
};

inline bool inside_shape(int shape, double u, double v, double r) {
  const double d2 = u * u + v * v;
  switch (shape) {
    case 0: return d2 <= r * r;
    case 1: return std::max(std::abs(u), std::abs(v)) <= 0.85 * r;
    case 2: return std::abs(u) + std::abs(v) <= 1.2 * r;
    default: return d2 >= 0.55 * 0.55 * r * r && d2 <= r * r;
  }
}

inline ImageU8 render_frame(const SynthConfig& cfg, int id, int cam, int tracklet, int frame) {
  const int S = cfg.image_size;
  const SynthPalette pal(id, cam);

  // Tracklet-level conditions carry most of the nuisance: lighting, apparent
  // size, and a framing offset large enough that a tracklet usually keeps
  // part of the pattern outside the image. Consecutive frames only wobble
  // slightly around them, like neighbouring frames of real footage, so every
  // tracklet observes the same partial crop of its identity.
  Rng tr(mix_seed(cfg.seed, {stream::jitter, static_cast<std::uint64_t>(tracklet), 0x7261}));
  const double bright_t = tr.uniform(0.75, 1.25);
  const double base_dx = tr.uniform(-S * 0.28, S * 0.28);
  const double base_dy = tr.uniform(-S * 0.28, S * 0.28);
  const double radius_t = S * 0.38 * tr.uniform(0.90, 1.10);

  Rng fr(mix_seed(cfg.seed, {stream::jitter, static_cast<std::uint64_t>(tracklet),
                             static_cast<std::uint64_t>(frame)}));
  const double dx = base_dx + fr.uniform(-S / 40.0, S / 40.0);
  const double dy = base_dy + fr.uniform(-S / 40.0, S / 40.0);
  const double bright = bright_t * fr.uniform(0.98, 1.02);
  const double radius = radius_t * fr.uniform(0.99, 1.01);

  const double ca = std::cos(pal.bg_angle), sa = std::sin(pal.bg_angle);
  constexpr double tau = 6.283185307179586;

  ImageU8 img(S, S);
  for (int y = 0; y < S; ++y) {
    for (int x = 0; x < S; ++x) {
      const double u = x + 0.5 - (S / 2.0 + dx);
      const double v = y + 0.5 - (S / 2.0 + dy);
      std::array<double, 3> col;
      if (inside_shape(pal.shape, u, v, radius)) {
        const double fw = u * std::cos(pal.fg_angle) + v * std::sin(pal.fg_angle);
        const double tex = 1.0 + 0.35 * std::sin(tau * fw / pal.fg_period + pal.fg_phase);
        col = {pal.fg[0] * tex, pal.fg[1] * tex, pal.fg[2] * tex};
      } else {
        const double w = x * ca + y * sa;
        const double tex = 1.0 + 0.25 * std::sin(tau * w / pal.bg_period + pal.bg_phase);
        col = {pal.bg[0] * tex, pal.bg[1] * tex, pal.bg[2] * tex};
      }
      std::uint8_t* px = img.px(y, x);
      for (int c = 0; c < 3; ++c) {
        double val = col[c] * bright + fr.uniform(-0.02, 0.02);
        val = std::min(1.0, std::max(0.0, val));
        px[c] = static_cast<std::uint8_t>(std::lround(val * 255.0));
      }
    }
  }
  return img;
}

}  // namespace detail

// Renders the full corpus under out_dir/images and splits tracklets into
// train/query/gallery manifests with a seeded rule:
//   - per (identity, camera): one tracklet goes to the gallery,
//   - per identity: one remaining single-camera tracklet becomes the query,
//   - everything else trains.
// When every tracklet is claimed by the gallery (tracklets_per_id_camera == 1)
// the query re-uses one of the gallery tracklets; the standard evaluation
// exclusion rule then removes the self-match.
inline SynthResult generate_synthetic(const SynthConfig& cfg,
                                      const std::filesystem::path& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");

  struct TrackletRec {
    int id, cam, tracklet;
  };
  std::vector<TrackletRec> all;
  int next_tracklet = 0;
  for (int id = 0; id < cfg.num_identities; ++id) {
    for (int cam = 0; cam < cfg.num_cameras; ++cam) {
      for (int k = 0; k < cfg.tracklets_per_id_camera; ++k) {
        all.push_back({id, cam, next_tracklet++});
      }
    }
  }

  SynthResult res;
  res.train_manifest = out_dir / "train.manifest";
  res.query_manifest = out_dir / "query.manifest";
  res.gallery_manifest = out_dir / "gallery.manifest";

  char name[64];
  std::vector<std::vector<Sample>> tracklet_frames(next_tracklet);
  for (const auto& t : all) {
    for (int f = 0; f < cfg.frames_per_tracklet; ++f) {
      std::snprintf(name, sizeof(name), "images/id%03d_c%02d_t%05d_f%03d.ppm", t.id, t.cam,
                    t.tracklet, f);
      const auto img = detail::render_frame(cfg, t.id, t.cam, t.tracklet, f);
      write_ppm(out_dir / name, img);
      ++res.images_written;
      tracklet_frames[t.tracklet].push_back({name, t.id, t.cam, t.tracklet, f});
    }
  }

  Rng sr(mix_seed(cfg.seed, {stream::split}));
  std::vector<Sample> train, query, gallery;
  const int T = cfg.tracklets_per_id_camera;
  for (int id = 0; id < cfg.num_identities; ++id) {
    std::vector<int> gal_pick(cfg.num_cameras);
    std::vector<int> remaining;  // tracklet ids not claimed by the gallery
    for (int cam = 0; cam < cfg.num_cameras; ++cam) {
      gal_pick[cam] = static_cast<int>(sr.below(T));
      const int base = (id * cfg.num_cameras + cam) * T;
      for (int k = 0; k < T; ++k) {
        if (k != gal_pick[cam]) remaining.push_back(base + k);
      }
    }
    int query_tracklet;
    if (!remaining.empty()) {
      const auto qi = sr.below(remaining.size());
      query_tracklet = remaining[qi];
      remaining.erase(remaining.begin() + static_cast<long>(qi));
    } else {
      const int cam = static_cast<int>(sr.below(cfg.num_cameras));
      query_tracklet = (id * cfg.num_cameras + cam) * T + gal_pick[cam];
    }
    for (int cam = 0; cam < cfg.num_cameras; ++cam) {
      const int t = (id * cfg.num_cameras + cam) * T + gal_pick[cam];
      for (const auto& s : tracklet_frames[t]) gallery.push_back(s);
    }
    for (const auto& s : tracklet_frames[query_tracklet]) query.push_back(s);
    for (int t : remaining) {
      for (const auto& s : tracklet_frames[t]) train.push_back(s);
    }
  }

  const std::vector<std::string> header = {
      "synthetic re-id corpus: ids=" + std::to_string(cfg.num_identities) +
      " cameras=" + std::to_string(cfg.num_cameras) +
      " tracklets_per_id_camera=" + std::to_string(T) +
      " frames=" + std::to_string(cfg.frames_per_tracklet) +
      " size=" + std::to_string(cfg.image_size) + " seed=" + std::to_string(cfg.seed)};
  save_manifest(res.train_manifest, train, header);
  save_manifest(res.query_manifest, query, header);
  save_manifest(res.gallery_manifest, gallery, header);
  return res;
}

}  // namespace vkd
