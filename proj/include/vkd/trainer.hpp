#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vkd/augment.hpp"
#include "vkd/checkpoint.hpp"
#include "vkd/dataset.hpp"
#include "vkd/errors.hpp"
#include "vkd/image.hpp"
#include "vkd/log.hpp"
#include "vkd/losses.hpp"
#include "vkd/model.hpp"
#include "vkd/optim.hpp"
#include "vkd/rng.hpp"
#include "vkd/sampling.hpp"

namespace vkd {

struct TrainConfig {
  std::string stage = "teacher";  // "teacher" | "distill"
  int epochs = 300;
  double base_lr = 1e-4;
  std::vector<int> milestones{100, 200};
  double lr_decay = 0.1;
  SamplerConfig sampler;
  LossWeights loss;
  std::string arch = "tinyconv";
  int embed_dim = 0;  // 0 = architecture default
  std::uint64_t seed = 0;
  AugmentConfig augmentation;
  int snapshot_every = 0;  // write a resumable snapshot every k epochs (0 = off)

  void validate() const {
    if (stage != "teacher" && stage != "distill") {
      throw ConfigError("stage must be 'teacher' or 'distill'");
    }
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(base_lr > 0.0)) throw ConfigError("base_lr must be > 0");
    if (!(lr_decay > 0.0)) throw ConfigError("lr_decay must be > 0");
    for (std::size_t i = 0; i < milestones.size(); ++i) {
      if (milestones[i] < 0 || milestones[i] >= epochs) {
        throw ConfigError("milestones must lie in [0, epochs)");
      }
      if (i > 0 && milestones[i] <= milestones[i - 1]) {
        throw ConfigError("milestones must be strictly increasing");
      }
    }
    if (snapshot_every < 0) throw ConfigError("snapshot_every must be >= 0");
    sampler.validate();
    loss.validate();
  }

  static TrainConfig teacher_defaults() {
    TrainConfig cfg;
    cfg.stage = "teacher";
    cfg.epochs = 300;
    cfg.milestones = {100, 200};
    cfg.loss.enable_kd = false;
    cfg.loss.enable_dp = false;
    return cfg;
  }

  static TrainConfig distill_defaults() {
    TrainConfig cfg;
    cfg.stage = "distill";
    cfg.epochs = 500;
    cfg.milestones = {300, 450};
    return cfg;
  }
};

// base_lr scaled down once per milestone already reached.
inline double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  int passed = 0;
  for (int m : cfg.milestones) {
    if (m <= epoch) ++passed;
  }
  double lr = cfg.base_lr;
  for (int i = 0; i < passed; ++i) lr *= cfg.lr_decay;
  return lr;
}

namespace detail {

inline void put_kv(std::string& s, const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  s += '"';
  s += key;
  s += "\":";
  s += buf;
}

}  // namespace detail

// Canonical flat rendering of a TrainConfig; its hash ties checkpoints, logs
// and run manifests to the exact configuration that produced them.
inline std::string canonical_config_string(const TrainConfig& cfg) {
  std::string s;
  auto kv = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
  auto num = [&kv](const std::string& k, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    kv(k, buf);
  };
  kv("stage", cfg.stage);
  kv("epochs", std::to_string(cfg.epochs));
  num("base_lr", cfg.base_lr);
  std::string ms;
  for (int m : cfg.milestones) ms += std::to_string(m) + ",";
  kv("milestones", ms);
  num("lr_decay", cfg.lr_decay);
  kv("sampler.P", std::to_string(cfg.sampler.P));
  kv("sampler.K", std::to_string(cfg.sampler.K));
  kv("sampler.frames_per_bag", std::to_string(cfg.sampler.frames_per_bag));
  kv("sampler.N", std::to_string(cfg.sampler.N));
  kv("sampler.M", std::to_string(cfg.sampler.M));
  kv("sampler.distill_source",
     cfg.sampler.distill_source == DistillSource::views ? "views" : "tracklet");
  num("loss.tau", cfg.loss.tau);
  num("loss.alpha", cfg.loss.alpha);
  num("loss.beta", cfg.loss.beta);
  kv("loss.enable_ce", cfg.loss.enable_ce ? "1" : "0");
  kv("loss.enable_tr", cfg.loss.enable_tr ? "1" : "0");
  kv("loss.enable_kd", cfg.loss.enable_kd ? "1" : "0");
  kv("loss.enable_dp", cfg.loss.enable_dp ? "1" : "0");
  kv("loss.metric", to_string(cfg.loss.metric));
  kv("arch", cfg.arch);
  kv("embed_dim", std::to_string(cfg.embed_dim));
  kv("seed", std::to_string(cfg.seed));
  kv("augment.flip", cfg.augmentation.flip ? "1" : "0");
  kv("augment.random_erase", cfg.augmentation.random_erase ? "1" : "0");
  return s;
}

inline std::string config_hash(const TrainConfig& cfg) {
  const std::string s = canonical_config_string(cfg);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(s.data(), s.size())));
  return buf;
}

// Loads every image of a dataset once, as planar [0,1] doubles. All images
// must share one geometry.
class ImageCache {
 public:
  explicit ImageCache(const Dataset& ds)
      : ds_(&ds), planar_(ds.samples.size()), have_(ds.samples.size(), 0) {}

  int height() { return ensure_geometry(), h_; }
  int width() { return ensure_geometry(), w_; }

  void fill(int idx, Tensor4& batch, int slot) {
    const auto& img = image(idx);
    std::copy(img.begin(), img.end(), batch.item(slot));
  }

  const std::vector<double>& image(int idx) {
    if (!have_[idx]) {
      ImageU8 img = read_ppm(ds_->image_path(idx));
      if (h_ == 0) {
        h_ = img.height;
        w_ = img.width;
      } else if (img.height != h_ || img.width != w_) {
        throw IntegrityError("image size mismatch at " + ds_->image_path(idx).string());
      }
      Tensor4 tmp(1, 3, h_, w_);
      to_planar01(img, tmp, 0);
      planar_[idx] = std::move(tmp.v);
      have_[idx] = 1;
    }
    return planar_[idx];
  }

  const Dataset& dataset() const { return *ds_; }

 private:
  void ensure_geometry() {
    if (h_ == 0 && !ds_->samples.empty()) image(0);
  }

  const Dataset* ds_;
  int h_ = 0, w_ = 0;
  std::vector<std::vector<double>> planar_;
  std::vector<char> have_;
};

struct NormStats {
  std::array<double, 3> mean{0.5, 0.5, 0.5};
  std::array<double, 3> stdev{0.25, 0.25, 0.25};
};

// Per-channel mean/std over every pixel of the split behind `cache`.
inline NormStats compute_norm_stats(ImageCache& cache) {
  const int n = static_cast<int>(cache.dataset().samples.size());
  if (n == 0) throw EmptyDatasetError("cannot compute normalization statistics");
  const std::size_t plane = static_cast<std::size_t>(cache.height()) * cache.width();
  std::array<double, 3> sum{}, sq{};
  for (int i = 0; i < n; ++i) {
    const auto& img = cache.image(i);
    for (int c = 0; c < 3; ++c) {
      const double* p = img.data() + c * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        sum[c] += p[k];
        sq[c] += p[k] * p[k];
      }
    }
  }
  NormStats out;
  const double cnt = static_cast<double>(n) * plane;
  for (int c = 0; c < 3; ++c) {
    out.mean[c] = sum[c] / cnt;
    const double var = std::max(sq[c] / cnt - out.mean[c] * out.mean[c], 0.0);
    out.stdev[c] = std::max(std::sqrt(var), 1e-6);
  }
  return out;
}

struct TrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  std::vector<LossBreakdown> epoch_means;  // this run's epochs only
  std::uint64_t model_hash = 0;
};

namespace detail {

inline void log_epoch(std::ofstream& log, int epoch, double lr, const LossBreakdown& b) {
  std::string line = "{\"epoch\":" + std::to_string(epoch) + ",";
  put_kv(line, "lr", lr);
  line += ',';
  put_kv(line, "ce", b.ce);
  line += ',';
  put_kv(line, "tr", b.tr);
  line += ',';
  put_kv(line, "kd", b.kd);
  line += ',';
  put_kv(line, "dp", b.dp);
  line += ',';
  put_kv(line, "total", b.total);
  line += "}\n";
  log << line;
  log.flush();
}

inline void add_into(Mat& dst, const Mat& src) {
  for (std::size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
}

inline void save_snapshot(ModelBundle& model, const Adam& opt, const std::string& stage,
                          const std::string& cfg_hash, int epoch_next,
                          const std::filesystem::path& path) {
  Checkpoint ck = model_to_checkpoint(model, stage, cfg_hash);
  opt.write_to(ck);
  ck.meta["epoch_next"] = std::to_string(epoch_next);
  ck.save(path);
}

inline int load_snapshot(const std::filesystem::path& path, const std::string& cfg_hash,
                         ModelBundle& model, Adam& opt) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.meta_at("config_hash") != cfg_hash) {
    throw ConfigError("resume checkpoint was written under a different config");
  }
  model = model_from_checkpoint(ck);
  opt.read_from(ck);
  return std::stoi(ck.meta_at("epoch_next"));
}

}  // namespace detail

// Stage one: CE + batch-hard triplet on tracklet bags of equally spaced
// frames, set-level through temporal average pooling and the BNNeck.
// KD/DP terms are ignored in this stage regardless of the flags.
inline TrainResult train_teacher(const Dataset& ds, const TrainConfig& cfg_in,
                                 const std::filesystem::path& out_dir,
                                 const std::filesystem::path& resume = {}) {
  TrainConfig cfg = cfg_in;
  if (cfg.stage != "teacher") throw ConfigError("train_teacher requires stage=teacher");
  cfg.loss.enable_kd = false;
  cfg.loss.enable_dp = false;
  cfg.sampler.seed = cfg.seed;
  cfg.validate();
  if (cfg.loss.enable_tr && cfg.sampler.K < 2) {
    throw ConfigError("triplet loss needs K >= 2 bags per identity");
  }
  std::filesystem::create_directories(out_dir);
  const std::string cfg_hash = config_hash(cfg);

  const auto bags = group_sets(ds, SetMode::tracklet);
  ImageCache cache(ds);

  ModelBundle model = make_model(cfg.arch, cfg.embed_dim, ds.class_count, cfg.seed);
  const NormStats stats = compute_norm_stats(cache);
  model.norm_mean = stats.mean;
  model.norm_std = stats.stdev;

  Adam opt;
  int start_epoch = 0;
  if (!resume.empty()) start_epoch = detail::load_snapshot(resume, cfg_hash, model, opt);

  TrainResult res;
  res.log = out_dir / "train_log.jsonl";
  std::ofstream log(res.log, resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw IoError("cannot open training log: " + res.log.string());

  const int n = cfg.sampler.frames_per_bag;
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    const auto batches = pk_batches(bags, cfg.sampler, epoch);
    Rng aug_rng(mix_seed(cfg.seed, {stream::augment, static_cast<std::uint64_t>(epoch)}));

    LossBreakdown mean{};
    for (const auto& batch : batches) {
      const int B = static_cast<int>(batch.bag_ids.size());
      Tensor4 x(B * n, 3, cache.height(), cache.width());
      for (int i = 0; i < B; ++i) {
        const SetBag picked = equally_spaced_bag(bags[batch.bag_ids[i]], n);
        for (int k = 0; k < n; ++k) {
          cache.fill(picked.members[k], x, i * n + k);
          augment_image(x, i * n + k, cfg.augmentation, model.norm_mean.data(), aug_rng);
        }
      }

      model.zero_grad();
      const Mat raw_img = model.embed(x, RunMode::train);
      const Mat raw_set = mean_pool_groups(raw_img, n);
      const auto head = model.head(raw_set, RunMode::train);

      LossOut ce, tr;
      Mat dlogits(B, model.class_count);
      if (cfg.loss.enable_ce) {
        ce = cross_entropy_loss(head.logits, batch.labels);
        dlogits = ce.grad;
      }
      if (cfg.loss.enable_tr) tr = batch_hard_triplet_loss(raw_set, batch.labels, cfg.loss.metric);

      Mat draw = model.head_backward(Mat(), dlogits);
      if (cfg.loss.enable_tr) detail::add_into(draw, tr.grad);
      model.encoder.backward(mean_pool_groups_backward(draw, n));
      opt.step(model.params(), lr);

      const auto bd = vkd_objective(ce.value, tr.value, 0.0, 0.0, cfg.loss);
      mean.ce += bd.ce;
      mean.tr += bd.tr;
      mean.total += bd.total;
    }
    const double inv = 1.0 / static_cast<double>(batches.size());
    mean.ce *= inv;
    mean.tr *= inv;
    mean.total *= inv;
    detail::log_epoch(log, epoch, lr, mean);
    res.epoch_means.push_back(mean);

    if (cfg.snapshot_every > 0 && (epoch + 1) % cfg.snapshot_every == 0 &&
        epoch + 1 < cfg.epochs) {
      detail::save_snapshot(model, opt, "teacher", cfg_hash, epoch + 1, out_dir / "last.ckpt");
    }
  }

  res.checkpoint = out_dir / "teacher.ckpt";
  detail::save_snapshot(model, opt, "teacher", cfg_hash, cfg.epochs, res.checkpoint);
  res.model_hash = model.param_hash();
  log::info("teacher training done: " + res.checkpoint.string());
  return res;
}

// Stage two: the teacher observes N-frame bags (multi-view by default) with
// batch statistics but no updates; the student observes an M-frame subset and
// minimizes CE + TR + alpha*KD + beta*DP against the teacher's set-level
// outputs.
inline TrainResult distill_student(const Dataset& ds, const std::filesystem::path& teacher_ckpt,
                                   const TrainConfig& cfg_in, const std::filesystem::path& out_dir,
                                   const std::filesystem::path& resume = {}) {
  TrainConfig cfg = cfg_in;
  if (cfg.stage != "distill") throw ConfigError("distill_student requires stage=distill");
  cfg.sampler.seed = cfg.seed;
  cfg.validate();
  if (cfg.sampler.N <= cfg.sampler.M) {
    throw ConfigError("distillation needs teacher bag size N > student bag size M");
  }
  if (cfg.loss.enable_tr && cfg.sampler.K < 2) {
    throw ConfigError("triplet loss needs K >= 2 bags per identity");
  }
  std::filesystem::create_directories(out_dir);
  const std::string cfg_hash = config_hash(cfg);

  ModelBundle teacher = model_from_checkpoint(Checkpoint::load(teacher_ckpt));
  if (teacher.class_count != ds.class_count) {
    throw ConfigError("teacher was trained with " + std::to_string(teacher.class_count) +
                      " classes, dataset has " + std::to_string(ds.class_count));
  }
  const std::uint64_t teacher_hash = teacher.param_hash();

  const bool from_views = cfg.sampler.distill_source == DistillSource::views;
  const auto bags = group_sets(ds, from_views ? SetMode::views : SetMode::tracklet);
  ImageCache cache(ds);

  ModelBundle student = init_student_from_teacher(teacher, cfg.arch, cfg.seed, cfg.embed_dim);

  Adam opt;
  int start_epoch = 0;
  if (!resume.empty()) start_epoch = detail::load_snapshot(resume, cfg_hash, student, opt);

  TrainResult res;
  res.log = out_dir / "train_log.jsonl";
  std::ofstream log(res.log, resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw IoError("cannot open training log: " + res.log.string());

  const int N = cfg.sampler.N, M = cfg.sampler.M;
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    const auto batches = pk_batches(bags, cfg.sampler, epoch);
    Rng bag_rng(mix_seed(cfg.seed, {stream::bags, static_cast<std::uint64_t>(epoch)}));
    Rng aug_rng(mix_seed(cfg.seed, {stream::augment, static_cast<std::uint64_t>(epoch)}));

    LossBreakdown mean{};
    for (const auto& batch : batches) {
      const int B = static_cast<int>(batch.bag_ids.size());
      std::vector<SetBag> t_bags(B), s_bags(B);
      for (int i = 0; i < B; ++i) {
        const SetBag& src = bags[batch.bag_ids[i]];
        t_bags[i] = from_views ? sample_view_bag(ds, src, N, bag_rng) : equally_spaced_bag(src, N);
        s_bags[i] = subsample_bag(t_bags[i], M, bag_rng);
      }

      Tensor4 xt(B * N, 3, cache.height(), cache.width());
      for (int i = 0; i < B; ++i) {
        for (int k = 0; k < N; ++k) {
          cache.fill(t_bags[i].members[k], xt, i * N + k);
          augment_image(xt, i * N + k, cfg.augmentation, teacher.norm_mean.data(), aug_rng);
        }
      }
      Tensor4 xs(B * M, 3, cache.height(), cache.width());
      for (int i = 0; i < B; ++i) {
        for (int k = 0; k < M; ++k) {
          cache.fill(s_bags[i].members[k], xs, i * M + k);
          augment_image(xs, i * M + k, cfg.augmentation, student.norm_mean.data(), aug_rng);
        }
      }

      // teacher: batch statistics, no running update, no gradient
      const Mat t_set = mean_pool_groups(teacher.embed(xt, RunMode::frozen_stats), N);
      const auto t_head = teacher.head(t_set, RunMode::frozen_stats);

      student.zero_grad();
      const Mat s_raw_img = student.embed(xs, RunMode::train);
      const Mat s_set = mean_pool_groups(s_raw_img, M);
      const auto s_head = student.head(s_set, RunMode::train);

      LossOut ce, tr, kd, dp;
      Mat dlogits(B, student.class_count);
      if (cfg.loss.enable_ce) {
        ce = cross_entropy_loss(s_head.logits, batch.labels);
        dlogits = ce.grad;
      }
      if (cfg.loss.enable_tr) tr = batch_hard_triplet_loss(s_set, batch.labels, cfg.loss.metric);
      if (cfg.loss.enable_kd) {
        kd = knowledge_distillation_loss(t_head.logits, s_head.logits, cfg.loss.tau);
        for (std::size_t i = 0; i < dlogits.v.size(); ++i) {
          dlogits.v[i] += cfg.loss.alpha * kd.grad.v[i];
        }
      }
      Mat dinf;
      if (cfg.loss.enable_dp) {
        dp = distance_preservation_loss(t_head.inference, s_head.inference, cfg.loss.metric);
        dinf = Mat(B, student.embed_dim);
        for (std::size_t i = 0; i < dinf.v.size(); ++i) dinf.v[i] = cfg.loss.beta * dp.grad.v[i];
      }

      Mat draw = student.head_backward(dinf, dlogits);
      if (cfg.loss.enable_tr) detail::add_into(draw, tr.grad);
      student.encoder.backward(mean_pool_groups_backward(draw, M));
      opt.step(student.params(), lr);

      const auto bd = vkd_objective(ce.value, tr.value, kd.value, dp.value, cfg.loss);
      mean.ce += bd.ce;
      mean.tr += bd.tr;
      mean.kd += bd.kd;
      mean.dp += bd.dp;
      mean.total += bd.total;
    }
    const double inv = 1.0 / static_cast<double>(batches.size());
    mean.ce *= inv;
    mean.tr *= inv;
    mean.kd *= inv;
    mean.dp *= inv;
    mean.total *= inv;
    detail::log_epoch(log, epoch, lr, mean);
    res.epoch_means.push_back(mean);

    if (teacher.param_hash() != teacher_hash) {
      throw IntegrityError("teacher parameters changed during distillation");
    }
    if (cfg.snapshot_every > 0 && (epoch + 1) % cfg.snapshot_every == 0 &&
        epoch + 1 < cfg.epochs) {
      detail::save_snapshot(student, opt, "student", cfg_hash, epoch + 1, out_dir / "last.ckpt");
    }
  }

  res.checkpoint = out_dir / "student.ckpt";
  detail::save_snapshot(student, opt, "student", cfg_hash, cfg.epochs, res.checkpoint);
  res.model_hash = student.param_hash();
  log::info("distillation done: " + res.checkpoint.string());
  return res;
}

}  // namespace vkd
