#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "vkd/analysis.hpp"
#include "vkd/config.hpp"
#include "vkd/evaluation.hpp"
#include "vkd/synthetic.hpp"
#include "vkd/trainer.hpp"
#include "vkd/version.hpp"

namespace vkd::cli {

namespace fs = std::filesystem;

inline std::string short_hash(const std::string& s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(s.data(), s.size())));
  return buf;
}

// Every run leaves exactly one run_manifest.json next to its outputs: what
// ran, under which settings hash and seed, and which files it produced.
inline void write_run_manifest(const fs::path& dir, const std::string& command,
                               const std::string& config_hash, std::uint64_t seed,
                               const std::vector<fs::path>& outputs,
                               const std::vector<std::string>& argv) {
  Json j;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["version"] = kVersion;
  std::vector<std::string> outs;
  outs.reserve(outputs.size());
  for (const auto& p : outputs) outs.push_back(p.string());
  j["outputs"] = outs;
  j["argv"] = argv;
  const fs::path target = dir.empty() ? fs::path(".") : dir;
  fs::create_directories(target);
  std::ofstream out(target / "run_manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write manifest in " + target.string());
  out << j.dump() << "\n";
}

inline fs::path manifest_dir_for(const fs::path& output_file) {
  const auto parent = output_file.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

inline Dataset load_split(const fs::path& root, const std::string& split) {
  return load_manifest(root / (split + ".manifest"), root, split);
}

inline ModelBundle load_model(const fs::path& ckpt) {
  return model_from_checkpoint(Checkpoint::load(ckpt));
}

inline SetMode set_mode_from_string(const std::string& s) {
  if (s == "tracklet") return SetMode::tracklet;
  if (s == "views") return SetMode::views;
  throw ConfigError("unknown bag mode '" + s + "' (expected tracklet or views)");
}

// --out accepts either a directory or a final .ckpt filename inside one.
struct OutSpec {
  fs::path dir;
  fs::path file;  // empty = keep the trainer's default name
};

inline OutSpec split_out(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  fs::path p(out);
  if (p.extension() == ".ckpt") {
    auto dir = p.parent_path();
    if (dir.empty()) dir = ".";
    return {dir, p};
  }
  return {p, {}};
}

// The config file must be read before options are bound so that --help
// shows the effective defaults; scan for it ahead of the real parse.
inline std::string find_config_arg(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return "";
}

inline std::string canonical_settings(
    const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string s;
  for (const auto& [k, v] : kv) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  }
  return s;
}

inline int dispatch(std::vector<std::string> args) {
  const std::vector<std::string> argv_record = args;  // parse() consumes `args`
  CLI::App app{"re-identification training with views knowledge distillation"};
  app.name("vkd");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.footer("Environment: VKD_LOG_LEVEL=error|warn|info|debug");

  try {
    const std::string config_path = find_config_arg(args);
    Json file_cfg = Json::object();
    if (!config_path.empty()) file_cfg = load_config_file(config_path);

    // ---- gen-synth ----------------------------------------------------
    SynthConfig synth;
    std::string synth_out;
    auto* gen = app.add_subcommand(
        "gen-synth", "write a deterministic synthetic corpus with train/query/gallery manifests");
    gen->add_option("--out", synth_out, "output directory")->required();
    gen->add_option("--ids", synth.num_identities, "identities")->capture_default_str();
    gen->add_option("--cameras", synth.num_cameras, "cameras")->capture_default_str();
    gen->add_option("--tracklets", synth.tracklets_per_id_camera,
                    "tracklets per identity per camera")
        ->capture_default_str();
    gen->add_option("--frames", synth.frames_per_tracklet, "frames per tracklet")
        ->capture_default_str();
    gen->add_option("--size", synth.image_size, "square image edge in pixels")
        ->capture_default_str();
    gen->add_option("--seed", synth.seed, "RNG seed")->capture_default_str();
    gen->callback([&] {
      const auto res = generate_synthetic(synth, synth_out);
      const auto settings = canonical_settings(
          {{"command", "gen-synth"},
           {"ids", std::to_string(synth.num_identities)},
           {"cameras", std::to_string(synth.num_cameras)},
           {"tracklets", std::to_string(synth.tracklets_per_id_camera)},
           {"frames", std::to_string(synth.frames_per_tracklet)},
           {"size", std::to_string(synth.image_size)},
           {"seed", std::to_string(synth.seed)}});
      write_run_manifest(synth_out, "gen-synth", short_hash(settings), synth.seed,
                         {res.train_manifest, res.query_manifest, res.gallery_manifest}, argv_record);
      std::cout << "wrote " << res.images_written << " images under " << synth_out << "\n";
    });

    // ---- shared training options ---------------------------------------
    std::string dummy_config;  // value handled by the pre-scan above
    auto add_schedule_flags = [&dummy_config](CLI::App* sub, TrainConfig& cfg,
                                              std::string& metric) {
      sub->add_option("--config", dummy_config, "JSON experiment config file");
      sub->add_option("--arch", cfg.arch, "encoder architecture")->capture_default_str();
      sub->add_option("--embed-dim", cfg.embed_dim, "embedding dimension (0 = architecture default)")
          ->capture_default_str();
      sub->add_option("--epochs", cfg.epochs, "training epochs")->capture_default_str();
      sub->add_option("--lr", cfg.base_lr, "base learning rate")->capture_default_str();
      sub->add_option("--milestones", cfg.milestones, "epochs at which the lr decays")
          ->delimiter(',')
          ->capture_default_str();
      sub->add_option("--lr-decay", cfg.lr_decay, "lr multiplier at each milestone")
          ->capture_default_str();
      sub->add_option("--P", cfg.sampler.P, "identities per batch")->capture_default_str();
      sub->add_option("--K", cfg.sampler.K, "bags per identity per batch")->capture_default_str();
      sub->add_option("--metric", metric, "distance metric (euclidean|cosine)")
          ->capture_default_str();
      sub->add_option("--seed", cfg.seed, "seed for all run randomness")->capture_default_str();
      sub->add_option("--snapshot-every", cfg.snapshot_every,
                      "write a resumable snapshot every k epochs (0 = off)")
          ->capture_default_str();
      sub->add_flag("--flip,!--no-flip", cfg.augmentation.flip, "horizontal flip augmentation")
          ->capture_default_str();
      sub->add_flag("--erase,!--no-erase", cfg.augmentation.random_erase,
                    "random erasing augmentation")
          ->capture_default_str();
    };

    // ---- train-teacher --------------------------------------------------
    TrainConfig tcfg = TrainConfig::teacher_defaults();
    if (!config_path.empty()) apply_config(file_cfg, tcfg);
    std::string t_data = config_data_root(file_cfg);
    std::string t_out, t_resume;
    std::string t_metric = to_string(tcfg.loss.metric);
    auto* teach = app.add_subcommand("train-teacher",
                                     "stage one: identity + triplet training on tracklet bags");
    teach->add_option("--data", t_data, "dataset root (expects train.manifest)");
    teach->add_option("--out", t_out, "output directory or .ckpt path")->required();
    teach->add_option("--resume", t_resume, "resume from a snapshot checkpoint");
    teach->add_option("--frames-per-bag", tcfg.sampler.frames_per_bag,
                      "equally spaced frames per tracklet bag")
        ->capture_default_str();
    add_schedule_flags(teach, tcfg, t_metric);
    teach->callback([&] {
      if (t_data.empty()) throw ConfigError("train-teacher needs --data or config data.root");
      tcfg.loss.metric = metric_from_string(t_metric);
      const auto ds = load_split(t_data, "train");
      const auto spec = split_out(t_out);
      auto res = train_teacher(ds, tcfg, spec.dir, t_resume.empty() ? fs::path{} : fs::path(t_resume));
      fs::path final_ckpt = res.checkpoint;
      if (!spec.file.empty() && spec.file != res.checkpoint) {
        fs::rename(res.checkpoint, spec.file);
        final_ckpt = spec.file;
      }
      const auto hash = Checkpoint::load(final_ckpt).meta_at("config_hash");
      write_run_manifest(spec.dir, "train-teacher", hash, tcfg.seed, {final_ckpt, res.log}, argv_record);
      std::cout << "teacher checkpoint: " << final_ckpt.string() << "\n";
    });

    // ---- distill ----------------------------------------------------------
    TrainConfig dcfg = TrainConfig::distill_defaults();
    if (!config_path.empty()) apply_config(file_cfg, dcfg);
    std::string d_data = config_data_root(file_cfg);
    std::string d_out, d_resume, d_teacher;
    std::string d_metric = to_string(dcfg.loss.metric);
    std::string d_source = to_string(dcfg.sampler.distill_source);
    auto* dist = app.add_subcommand(
        "distill", "stage two: train a few-frame student against a frozen many-view teacher");
    dist->add_option("--teacher", d_teacher, "teacher checkpoint")->required();
    dist->add_option("--data", d_data, "dataset root (expects train.manifest)");
    dist->add_option("--out", d_out, "output directory or .ckpt path")->required();
    dist->add_option("--resume", d_resume, "resume from a snapshot checkpoint");
    dist->add_option("--source", d_source, "teacher bag source (views|tracklet)")
        ->capture_default_str();
    dist->add_option("--N", dcfg.sampler.N, "teacher frames per bag")->capture_default_str();
    dist->add_option("--M", dcfg.sampler.M, "student frames per bag")->capture_default_str();
    dist->add_option("--tau", dcfg.loss.tau, "distillation temperature")->capture_default_str();
    dist->add_option("--alpha", dcfg.loss.alpha, "weight of the distillation term")
        ->capture_default_str();
    dist->add_option("--beta", dcfg.loss.beta, "weight of the distance-preservation term")
        ->capture_default_str();
    dist->add_flag("--ce,!--no-ce", dcfg.loss.enable_ce, "identity cross-entropy term")
        ->capture_default_str();
    dist->add_flag("--tr,!--no-tr", dcfg.loss.enable_tr, "batch-hard triplet term")
        ->capture_default_str();
    dist->add_flag("--kd,!--no-kd", dcfg.loss.enable_kd, "logit distillation term")
        ->capture_default_str();
    dist->add_flag("--dp,!--no-dp", dcfg.loss.enable_dp, "distance preservation term")
        ->capture_default_str();
    add_schedule_flags(dist, dcfg, d_metric);
    dist->callback([&] {
      if (d_data.empty()) throw ConfigError("distill needs --data or config data.root");
      dcfg.loss.metric = metric_from_string(d_metric);
      dcfg.sampler.distill_source = distill_source_from_string(d_source);
      const auto ds = load_split(d_data, "train");
      const auto spec = split_out(d_out);
      auto res = distill_student(ds, d_teacher, dcfg, spec.dir,
                                 d_resume.empty() ? fs::path{} : fs::path(d_resume));
      fs::path final_ckpt = res.checkpoint;
      if (!spec.file.empty() && spec.file != res.checkpoint) {
        fs::rename(res.checkpoint, spec.file);
        final_ckpt = spec.file;
      }
      const auto hash = Checkpoint::load(final_ckpt).meta_at("config_hash");
      write_run_manifest(spec.dir, "distill", hash, dcfg.seed, {final_ckpt, res.log}, argv_record);
      std::cout << "student checkpoint: " << final_ckpt.string() << "\n";
    });

    // ---- eval ---------------------------------------------------------------
    EvalSettings es;
    if (!config_path.empty()) apply_config(file_cfg, es);
    std::string e_ckpt, e_data = config_data_root(file_cfg);
    std::string e_out = "eval_report.json";
    auto* ev = app.add_subcommand("eval", "rank query entities against the gallery and score");
    ev->add_option("--config", dummy_config, "JSON experiment config file");
    ev->add_option("--ckpt", e_ckpt, "model checkpoint")->required();
    ev->add_option("--data", e_data, "dataset root (expects query/gallery manifests)");
    ev->add_option("--protocol", es.protocol, "i2i, i2v or v2v")->capture_default_str();
    ev->add_option("--exclusion", es.exclusion, "standard (same-id-camera) or same-camera")
        ->capture_default_str();
    ev->add_option("--metric", es.metric, "distance metric (euclidean|cosine)")
        ->capture_default_str();
    ev->add_option("--gallery-frames", es.gallery_frames,
                   "frames aggregated per gallery tracklet (0 = all)")
        ->capture_default_str();
    ev->add_option("--max-rank", es.max_rank, "CMC curve length")->capture_default_str();
    ev->add_option("--out", e_out, "report file")->capture_default_str();
    ev->callback([&] {
      if (e_data.empty()) throw ConfigError("eval needs --data or config data.root");
      auto model = load_model(e_ckpt);
      const auto query = load_split(e_data, "query");
      const auto gallery = load_split(e_data, "gallery");
      const auto protocol = protocol_from_string(es.protocol);
      const auto rep = evaluate_protocol(model, query, gallery, protocol, es.options());
      write_eval_report(rep, e_out);
      const auto settings = canonical_settings({{"command", "eval"},
                                                {"ckpt", e_ckpt},
                                                {"data", e_data},
                                                {"protocol", es.protocol},
                                                {"exclusion", es.exclusion},
                                                {"metric", es.metric},
                                                {"gallery_frames", std::to_string(es.gallery_frames)},
                                                {"max_rank", std::to_string(es.max_rank)}});
      write_run_manifest(manifest_dir_for(e_out), "eval", short_hash(settings), 0, {e_out}, argv_record);
      std::cout << to_string(protocol) << " mAP " << rep.mAP << " cmc1 " << rep.cmc_at(1)
                << " cmc5 " << rep.cmc_at(5) << " (queries " << rep.num_queries << ", dropped "
                << rep.dropped << ")\n";
    });

    // ---- probe-camera -----------------------------------------------------
    std::string p_ckpt, p_data = config_data_root(file_cfg);
    std::string p_split = "gallery";
    std::string p_out = "probe_report.json";
    int p_epochs = 300;
    double p_lr = 1e-3;
    auto* probe = app.add_subcommand(
        "probe-camera", "fit a linear camera classifier on frozen features (bias diagnostic)");
    probe->add_option("--config", dummy_config, "JSON experiment config file");
    probe->add_option("--ckpt", p_ckpt, "model checkpoint")->required();
    probe->add_option("--data", p_data, "dataset root");
    probe->add_option("--split", p_split, "split whose features are probed")
        ->capture_default_str();
    probe->add_option("--epochs", p_epochs, "probe training epochs")->capture_default_str();
    probe->add_option("--lr", p_lr, "probe learning rate (halved every 50 epochs)")
        ->capture_default_str();
    probe->add_option("--out", p_out, "report file")->capture_default_str();
    probe->callback([&] {
      if (p_data.empty()) throw ConfigError("probe-camera needs --data or config data.root");
      auto model = load_model(p_ckpt);
      const auto ds = load_split(p_data, p_split);
      const auto feats = extract_features(model, ds, Side::gallery, Protocol::V2V, 0);
      const auto rep = fit_camera_probe(feats, p_epochs, p_lr);
      write_probe_report(rep, p_out);
      const auto settings = canonical_settings({{"command", "probe-camera"},
                                                {"ckpt", p_ckpt},
                                                {"data", p_data},
                                                {"split", p_split},
                                                {"epochs", std::to_string(p_epochs)},
                                                {"lr", std::to_string(p_lr)}});
      write_run_manifest(manifest_dir_for(p_out), "probe-camera", short_hash(settings), 0, {p_out},
                         argv_record);
      std::cout << "probe accuracy " << rep.accuracy << " (prior " << rep.prior_accuracy << ", "
                << rep.num_cameras << " cameras)\n";
    });

    // ---- distmat ------------------------------------------------------------
    std::string m_ckpt, m_data = config_data_root(file_cfg);
    std::string m_split = "train";
    std::string m_mode = "tracklet";
    std::string m_metric = "euclidean";
    std::string m_prefix = "distmat";
    int m_ids = 4, m_bags = 2, m_bag_size = 4;
    std::uint64_t m_seed = 0;
    auto* dm = app.add_subcommand(
        "distmat", "pairwise distance blocks over per-identity bags (grid, heatmap, summary)");
    dm->add_option("--config", dummy_config, "JSON experiment config file");
    dm->add_option("--ckpt", m_ckpt, "model checkpoint")->required();
    dm->add_option("--data", m_data, "dataset root");
    dm->add_option("--split", m_split, "split to draw bags from")->capture_default_str();
    dm->add_option("--mode", m_mode, "bag mode (tracklet|views)")->capture_default_str();
    dm->add_option("--ids", m_ids, "identities shown")->capture_default_str();
    dm->add_option("--bags-per-id", m_bags, "bags per identity")->capture_default_str();
    dm->add_option("--bag-size", m_bag_size, "frames per bag")->capture_default_str();
    dm->add_option("--metric", m_metric, "distance metric (euclidean|cosine)")
        ->capture_default_str();
    dm->add_option("--seed", m_seed, "seed for views-mode bag draws")->capture_default_str();
    dm->add_option("--out-prefix", m_prefix, "output prefix for .grid.txt/.ppm/.json")
        ->capture_default_str();
    dm->callback([&] {
      if (m_data.empty()) throw ConfigError("distmat needs --data or config data.root");
      auto model = load_model(m_ckpt);
      const auto ds = load_split(m_data, m_split);
      const auto rep = distance_block_report(model, ds, set_mode_from_string(m_mode), m_ids,
                                             m_bags, m_bag_size, m_seed,
                                             metric_from_string(m_metric));
      const fs::path grid = m_prefix + ".grid.txt";
      const fs::path heat = m_prefix + ".ppm";
      const fs::path summary = m_prefix + ".json";
      write_block_grid(rep, grid);
      write_block_heatmap(rep, heat);
      write_block_summary(rep, summary);
      const auto settings = canonical_settings({{"command", "distmat"},
                                                {"ckpt", m_ckpt},
                                                {"data", m_data},
                                                {"split", m_split},
                                                {"mode", m_mode},
                                                {"ids", std::to_string(m_ids)},
                                                {"bags_per_id", std::to_string(m_bags)},
                                                {"bag_size", std::to_string(m_bag_size)},
                                                {"metric", m_metric},
                                                {"seed", std::to_string(m_seed)}});
      write_run_manifest(manifest_dir_for(grid), "distmat", short_hash(settings), m_seed,
                         {grid, heat, summary}, argv_record);
      std::cout << "intra " << rep.intra_mean << " inter " << rep.inter_mean << " ratio "
                << rep.ratio << "\n";
    });

    // ---- sweep-gallery -----------------------------------------------------
    EvalSettings ss;
    if (!config_path.empty()) apply_config(file_cfg, ss);
    std::string s_ckpt, s_data = config_data_root(file_cfg);
    std::string s_out = "gallery_sweep.jsonl";
    auto* sweep = app.add_subcommand(
        "sweep-gallery", "I2V accuracy as a function of gallery tracklet length");
    sweep->add_option("--config", dummy_config, "JSON experiment config file");
    sweep->add_option("--ckpt", s_ckpt, "model checkpoint")->required();
    sweep->add_option("--data", s_data, "dataset root");
    sweep->add_option("--sizes", ss.sweep_sizes, "gallery tracklet lengths to test")
        ->delimiter(',')
        ->capture_default_str();
    sweep->add_option("--exclusion", ss.exclusion, "standard (same-id-camera) or same-camera")
        ->capture_default_str();
    sweep->add_option("--metric", ss.metric, "distance metric (euclidean|cosine)")
        ->capture_default_str();
    sweep->add_option("--out", s_out, "report file (one JSON line per size)")
        ->capture_default_str();
    sweep->callback([&] {
      if (s_data.empty()) throw ConfigError("sweep-gallery needs --data or config data.root");
      auto model = load_model(s_ckpt);
      const auto query = load_split(s_data, "query");
      const auto gallery = load_split(s_data, "gallery");
      const auto rows = gallery_size_sweep(model, query, gallery, ss.sweep_sizes, ss.options());
      write_sweep_report(rows, s_out);
      std::string sizes;
      for (int v : ss.sweep_sizes) sizes += std::to_string(v) + ",";
      const auto settings = canonical_settings({{"command", "sweep-gallery"},
                                                {"ckpt", s_ckpt},
                                                {"data", s_data},
                                                {"sizes", sizes},
                                                {"exclusion", ss.exclusion},
                                                {"metric", ss.metric}});
      write_run_manifest(manifest_dir_for(s_out), "sweep-gallery", short_hash(settings), 0,
                         {s_out}, argv_record);
      for (const auto& row : rows) {
        std::cout << "gallery_frames " << row.size << " cmc1 " << row.cmc1 << " mAP " << row.mAP
                  << "\n";
      }
    });

    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit 0; usage errors exit 2
  } catch (const Error& e) {
    std::cerr << "vkd: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "vkd: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace vkd::cli
