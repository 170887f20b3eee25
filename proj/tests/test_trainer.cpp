#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "vkd/image.hpp"
#include "vkd/synthetic.hpp"
#include "vkd/trainer.hpp"

using namespace vkd;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// tiny corpus shared by the training tests, generated once
const Dataset& tiny_train() {
  static const Dataset ds = [] {
    SynthConfig cfg;
    cfg.num_identities = 6;
    cfg.num_cameras = 2;
    cfg.tracklets_per_id_camera = 2;
    cfg.frames_per_tracklet = 4;
    cfg.image_size = 16;
    cfg.seed = 7;
    auto dir = temp_dir("vkd_trainer_synth");
    auto res = generate_synthetic(cfg, dir);
    return load_manifest(res.train_manifest, dir, "train");
  }();
  return ds;
}

TrainConfig tiny_teacher_cfg() {
  TrainConfig cfg = TrainConfig::teacher_defaults();
  cfg.arch = "microconv";
  cfg.epochs = 4;
  cfg.base_lr = 3e-3;
  cfg.milestones = {3};
  cfg.sampler.P = 4;
  cfg.sampler.K = 2;
  cfg.sampler.frames_per_bag = 3;
  cfg.seed = 1;
  return cfg;
}

TrainConfig tiny_distill_cfg() {
  TrainConfig cfg = TrainConfig::distill_defaults();
  cfg.arch = "microconv";
  cfg.epochs = 2;
  cfg.base_lr = 3e-3;
  cfg.milestones = {};
  cfg.sampler.P = 4;
  cfg.sampler.K = 2;
  cfg.sampler.N = 4;
  cfg.sampler.M = 2;
  cfg.seed = 2;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("lr schedule follows the milestone rule") {
  auto t = TrainConfig::teacher_defaults();
  REQUIRE(lr_at_epoch(t, 0) == 1e-4);
  REQUIRE(lr_at_epoch(t, 99) == 1e-4);
  REQUIRE(lr_at_epoch(t, 100) == Catch::Approx(1e-5));  // milestone epoch itself decays
  REQUIRE(lr_at_epoch(t, 150) == Catch::Approx(1e-5));
  REQUIRE(lr_at_epoch(t, 299) == Catch::Approx(1e-6));

  auto s = TrainConfig::distill_defaults();
  REQUIRE(s.epochs == 500);
  REQUIRE(lr_at_epoch(s, 0) == 1e-4);
  REQUIRE(lr_at_epoch(s, 460) == Catch::Approx(1e-6));
}

TEST_CASE("train config validation") {
  auto cfg = TrainConfig::teacher_defaults();
  cfg.milestones = {200, 100};
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
  cfg.milestones = {100, 300};
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);  // milestone >= epochs
  cfg.milestones = {100, 200};
  REQUIRE_NOTHROW(cfg.validate());
  cfg.stage = "warmup";
  REQUIRE_THROWS_AS(cfg.validate(), ConfigError);

  // config hash is sensitive to any field
  auto a = TrainConfig::teacher_defaults();
  auto b = a;
  REQUIRE(config_hash(a) == config_hash(b));
  b.sampler.K = 3;
  REQUIRE(config_hash(a) != config_hash(b));
  b = a;
  b.loss.alpha += 1e-9;
  REQUIRE(config_hash(a) != config_hash(b));
}

TEST_CASE("norm stats match a hand computation") {
  auto dir = temp_dir("vkd_norm_stats");
  ImageU8 img;
  img.width = 2;
  img.height = 1;
  img.rgb = {10, 20, 30, 30, 60, 90};  // two pixels
  write_ppm(dir / "a.ppm", img);
  std::ofstream(dir / "train.txt") << "a.ppm 0 0 0 0\n";
  auto ds = load_manifest(dir / "train.txt", dir, "train");
  ImageCache cache(ds);
  auto st = compute_norm_stats(cache);
  REQUIRE(st.mean[0] == Catch::Approx(20.0 / 255.0));
  REQUIRE(st.mean[1] == Catch::Approx(40.0 / 255.0));
  REQUIRE(st.mean[2] == Catch::Approx(60.0 / 255.0));
  REQUIRE(st.stdev[0] == Catch::Approx(10.0 / 255.0));
  REQUIRE(st.stdev[2] == Catch::Approx(30.0 / 255.0));
}

TEST_CASE("teacher training: artifacts, determinism, resume") {
  const auto& ds = tiny_train();
  auto cfg = tiny_teacher_cfg();

  auto dir_a = temp_dir("vkd_teacher_a");
  cfg.snapshot_every = 2;
  auto a = train_teacher(ds, cfg, dir_a);
  REQUIRE(fs::exists(a.checkpoint));
  REQUIRE(fs::exists(a.log));
  REQUIRE(count_lines(a.log) == cfg.epochs);
  REQUIRE(static_cast<int>(a.epoch_means.size()) == cfg.epochs);
  for (const auto& m : a.epoch_means) {
    REQUIRE(std::isfinite(m.total));
    REQUIRE(m.kd == 0.0);  // stage one never reports distillation terms
    REQUIRE(m.dp == 0.0);
  }

  // loss drops on this tiny run (lr tuned for it)
  REQUIRE(a.epoch_means.back().total < a.epoch_means.front().total);

  // determinism: same seed, same bits
  auto b = train_teacher(ds, cfg, temp_dir("vkd_teacher_b"));
  REQUIRE(b.model_hash == a.model_hash);
  REQUIRE(slurp(b.checkpoint) == slurp(a.checkpoint));

  // a different seed diverges
  auto cfg2 = cfg;
  cfg2.seed = 9;
  auto c = train_teacher(ds, cfg2, temp_dir("vkd_teacher_c"));
  REQUIRE(c.model_hash != a.model_hash);

  // resume from the epoch-2 snapshot reproduces the uninterrupted run
  REQUIRE(fs::exists(dir_a / "last.ckpt"));
  auto r = train_teacher(ds, cfg, temp_dir("vkd_teacher_r"), dir_a / "last.ckpt");
  REQUIRE(r.model_hash == a.model_hash);
  REQUIRE(slurp(r.checkpoint) == slurp(a.checkpoint));
  REQUIRE(static_cast<int>(r.epoch_means.size()) == 2);  // epochs 2 and 3 only

  // checkpoint carries stage, config hash, optimizer metadata
  auto ck = Checkpoint::load(a.checkpoint);
  REQUIRE(ck.meta_at("stage") == "teacher");
  REQUIRE(ck.meta_at("config_hash") == config_hash(cfg));
  REQUIRE(ck.meta_at("optim.kind") == "adam");

  // wrong-config resume is refused
  auto cfg3 = cfg;
  cfg3.base_lr *= 2;
  REQUIRE_THROWS_AS(train_teacher(ds, cfg3, temp_dir("vkd_teacher_x"), dir_a / "last.ckpt"),
                    ConfigError);
}

TEST_CASE("teacher training rejects infeasible configs up front") {
  const auto& ds = tiny_train();
  auto cfg = tiny_teacher_cfg();
  cfg.sampler.K = 1;
  REQUIRE_THROWS_AS(train_teacher(ds, cfg, temp_dir("vkd_teacher_k1")), ConfigError);
  cfg.sampler.K = 1;
  cfg.loss.enable_tr = false;
  REQUIRE_NOTHROW(train_teacher(ds, cfg, temp_dir("vkd_teacher_k1_ce")));

  auto bad = tiny_distill_cfg();
  REQUIRE_THROWS_AS(train_teacher(ds, bad, temp_dir("vkd_teacher_ww")), ConfigError);
}

TEST_CASE("distillation: teacher frozen, losses logged, deterministic") {
  const auto& ds = tiny_train();
  auto tdir = temp_dir("vkd_distteacher");
  auto teacher = train_teacher(ds, tiny_teacher_cfg(), tdir);
  const auto teacher_bytes = slurp(teacher.checkpoint);

  auto cfg = tiny_distill_cfg();
  auto a = distill_student(ds, teacher.checkpoint, cfg, temp_dir("vkd_student_a"));
  REQUIRE(fs::exists(a.checkpoint));
  REQUIRE(count_lines(a.log) == cfg.epochs);
  for (const auto& m : a.epoch_means) {
    REQUIRE(m.kd > 0.0);
    REQUIRE(m.dp > 0.0);
    REQUIRE(std::isfinite(m.total));
  }

  // the teacher checkpoint itself is untouched
  REQUIRE(slurp(teacher.checkpoint) == teacher_bytes);

  auto ck = Checkpoint::load(a.checkpoint);
  REQUIRE(ck.meta_at("stage") == "student");

  // determinism + resume
  cfg.snapshot_every = 1;
  auto dir_b = temp_dir("vkd_student_b");
  auto b = distill_student(ds, teacher.checkpoint, cfg, dir_b);
  auto c = distill_student(ds, teacher.checkpoint, cfg, temp_dir("vkd_student_c"),
                           dir_b / "last.ckpt");
  REQUIRE(c.model_hash == b.model_hash);
  REQUIRE(slurp(c.checkpoint) == slurp(b.checkpoint));

  // tracklet-source distillation (the time-only baseline) runs too
  auto cfg_t = tiny_distill_cfg();
  cfg_t.sampler.distill_source = DistillSource::tracklet;
  cfg_t.epochs = 1;
  auto t = distill_student(ds, teacher.checkpoint, cfg_t, temp_dir("vkd_student_t"));
  REQUIRE(t.epoch_means.size() == 1);

  // cross-architecture student
  auto cfg_x = tiny_distill_cfg();
  cfg_x.arch = "tinyconv";
  cfg_x.embed_dim = 16;
  cfg_x.epochs = 1;
  auto x = distill_student(ds, teacher.checkpoint, cfg_x, temp_dir("vkd_student_x"));
  auto xck = Checkpoint::load(x.checkpoint);
  REQUIRE(xck.meta_at("arch") == "tinyconv");
  REQUIRE(xck.meta_at("embed_dim") == "16");

  // loss toggles: disabling KD/DP zeroes their reported terms
  auto cfg_ct = tiny_distill_cfg();
  cfg_ct.loss.enable_kd = false;
  cfg_ct.loss.enable_dp = false;
  cfg_ct.epochs = 1;
  auto ct = distill_student(ds, teacher.checkpoint, cfg_ct, temp_dir("vkd_student_ct"));
  REQUIRE(ct.epoch_means[0].kd == 0.0);
  REQUIRE(ct.epoch_means[0].dp == 0.0);
  REQUIRE(ct.epoch_means[0].ce > 0.0);
}

TEST_CASE("distillation config errors") {
  const auto& ds = tiny_train();
  auto teacher = train_teacher(ds, tiny_teacher_cfg(), temp_dir("vkd_disterr_teacher"));

  auto cfg = tiny_distill_cfg();
  cfg.sampler.N = 2;
  cfg.sampler.M = 2;  // N <= M
  REQUIRE_THROWS_AS(distill_student(ds, teacher.checkpoint, cfg, temp_dir("vkd_disterr_nm")),
                    ConfigError);

  cfg = tiny_distill_cfg();
  cfg.stage = "teacher";
  REQUIRE_THROWS_AS(distill_student(ds, teacher.checkpoint, cfg, temp_dir("vkd_disterr_st")),
                    ConfigError);

  // class-count mismatch: teacher trained on 6 ids, dataset with 4
  SynthConfig other;
  other.num_identities = 4;
  other.num_cameras = 2;
  other.tracklets_per_id_camera = 2;
  other.frames_per_tracklet = 4;
  other.image_size = 16;
  other.seed = 11;
  auto odir = temp_dir("vkd_disterr_synth");
  auto res = generate_synthetic(other, odir);
  auto ds4 = load_manifest(res.train_manifest, odir, "train");
  cfg = tiny_distill_cfg();
  REQUIRE_THROWS_AS(distill_student(ds4, teacher.checkpoint, cfg, temp_dir("vkd_disterr_cc")),
                    ConfigError);
}
