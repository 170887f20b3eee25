#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"
#include "vkd/errors.hpp"
#include "vkd/evaluation.hpp"
#include "vkd/trainer.hpp"

namespace vkd {

using Json = nlohmann::json;

// Experiment config file: a JSON object with the sections
// {data, model, sampler, loss, schedule, eval} plus a top-level "seed".
// Every section and key is optional; command-line flags override whatever
// the file sets. Unknown sections or keys are rejected outright — silently
// ignoring a typo like "epochz" would corrupt an experiment.
inline Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  Json j;
  try {
    j = Json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw FormatError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError("config " + path.string() + ": root must be an object");
  return j;
}

namespace detail {

inline void check_keys(const Json& j, const char* where,
                       std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) {
      throw ConfigError("unknown key '" + it.key() + "' in config section '" + where + "'");
    }
  }
}

template <typename T>
void read_if(const Json& j, const char* where, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    it->get_to(out);
  } catch (const Json::exception&) {
    throw ConfigError("config key '" + std::string(where) + "." + key + "' has the wrong type");
  }
}

inline const Json* section(const Json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) return nullptr;
  if (!it->is_object()) throw ConfigError("config section '" + std::string(name) + "' must be an object");
  return &*it;
}

}  // namespace detail

inline void check_config_sections(const Json& j) {
  detail::check_keys(j, "<root>", {"data", "model", "sampler", "loss", "schedule", "eval", "seed"});
}

// Fold the file's training-related sections into `cfg` (which should carry
// the stage's defaults already).
inline void apply_config(const Json& j, TrainConfig& cfg) {
  check_config_sections(j);
  detail::read_if(j, "<root>", "seed", cfg.seed);

  if (const Json* data = detail::section(j, "data")) {
    detail::check_keys(*data, "data", {"root", "flip", "random_erase"});
    detail::read_if(*data, "data", "flip", cfg.augmentation.flip);
    detail::read_if(*data, "data", "random_erase", cfg.augmentation.random_erase);
  }
  if (const Json* model = detail::section(j, "model")) {
    detail::check_keys(*model, "model", {"arch", "embed_dim"});
    detail::read_if(*model, "model", "arch", cfg.arch);
    detail::read_if(*model, "model", "embed_dim", cfg.embed_dim);
  }
  if (const Json* sampler = detail::section(j, "sampler")) {
    detail::check_keys(*sampler, "sampler", {"P", "K", "frames_per_bag", "N", "M", "source"});
    detail::read_if(*sampler, "sampler", "P", cfg.sampler.P);
    detail::read_if(*sampler, "sampler", "K", cfg.sampler.K);
    detail::read_if(*sampler, "sampler", "frames_per_bag", cfg.sampler.frames_per_bag);
    detail::read_if(*sampler, "sampler", "N", cfg.sampler.N);
    detail::read_if(*sampler, "sampler", "M", cfg.sampler.M);
    std::string source;
    detail::read_if(*sampler, "sampler", "source", source);
    if (!source.empty()) cfg.sampler.distill_source = distill_source_from_string(source);
  }
  if (const Json* loss = detail::section(j, "loss")) {
    detail::check_keys(*loss, "loss", {"tau", "alpha", "beta", "ce", "tr", "kd", "dp", "metric"});
    detail::read_if(*loss, "loss", "tau", cfg.loss.tau);
    detail::read_if(*loss, "loss", "alpha", cfg.loss.alpha);
    detail::read_if(*loss, "loss", "beta", cfg.loss.beta);
    detail::read_if(*loss, "loss", "ce", cfg.loss.enable_ce);
    detail::read_if(*loss, "loss", "tr", cfg.loss.enable_tr);
    detail::read_if(*loss, "loss", "kd", cfg.loss.enable_kd);
    detail::read_if(*loss, "loss", "dp", cfg.loss.enable_dp);
    std::string metric;
    detail::read_if(*loss, "loss", "metric", metric);
    if (!metric.empty()) cfg.loss.metric = metric_from_string(metric);
  }
  if (const Json* schedule = detail::section(j, "schedule")) {
    detail::check_keys(*schedule, "schedule",
                       {"epochs", "base_lr", "milestones", "lr_decay", "snapshot_every"});
    detail::read_if(*schedule, "schedule", "epochs", cfg.epochs);
    detail::read_if(*schedule, "schedule", "base_lr", cfg.base_lr);
    detail::read_if(*schedule, "schedule", "milestones", cfg.milestones);
    detail::read_if(*schedule, "schedule", "lr_decay", cfg.lr_decay);
    detail::read_if(*schedule, "schedule", "snapshot_every", cfg.snapshot_every);
  }
}

// Evaluation-side settings as strings, resolved to enums on demand so the
// CLI can report bad values as config errors.
struct EvalSettings {
  std::string protocol = "i2v";
  std::string exclusion = "standard";
  std::string metric = "euclidean";
  int gallery_frames = 0;
  int max_rank = 10;
  std::vector<int> sweep_sizes{1, 2, 4, 8};

  EvalOptions options() const {
    EvalOptions opt;
    opt.metric = metric_from_string(metric);
    opt.rule = exclusion_from_string(exclusion);
    opt.gallery_frames = gallery_frames;
    opt.max_rank = max_rank;
    if (max_rank < 1) throw ConfigError("eval.max_rank must be >= 1");
    if (gallery_frames < 0) throw ConfigError("eval.gallery_frames must be >= 0");
    return opt;
  }
};

inline void apply_config(const Json& j, EvalSettings& s) {
  check_config_sections(j);
  if (const Json* eval = detail::section(j, "eval")) {
    detail::check_keys(*eval, "eval",
                       {"protocol", "exclusion", "metric", "gallery_frames", "max_rank",
                        "sweep_sizes"});
    detail::read_if(*eval, "eval", "protocol", s.protocol);
    detail::read_if(*eval, "eval", "exclusion", s.exclusion);
    detail::read_if(*eval, "eval", "metric", s.metric);
    detail::read_if(*eval, "eval", "gallery_frames", s.gallery_frames);
    detail::read_if(*eval, "eval", "max_rank", s.max_rank);
    detail::read_if(*eval, "eval", "sweep_sizes", s.sweep_sizes);
  }
}

// Optional dataset root recorded in the file ("data.root"); flags override.
inline std::string config_data_root(const Json& j) {
  std::string root;
  if (const Json* data = detail::section(j, "data")) {
    detail::read_if(*data, "data", "root", root);
  }
  return root;
}

}  // namespace vkd
