#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vkd/errors.hpp"
#include "vkd/layers.hpp"
#include "vkd/rng.hpp"
#include "vkd/tensor.hpp"

namespace vkd {

struct NamedParam {
  std::string name;
  std::vector<double>* value;
  std::vector<double>* grad;
};

struct NamedState {
  std::string name;
  std::vector<double>* value;
};

struct EncoderBlock {
  Conv2d conv;
  BatchNorm2d bn;
  bool relu = true;  // the final block drops its ReLU
  ReLU4 act;
};

struct Encoder {
  std::vector<EncoderBlock> blocks;
  GlobalAvgPool gap;

  Mat forward(const Tensor4& x, RunMode mode) {
    const bool save = mode == RunMode::train;
    Tensor4 cur = x;
    for (auto& blk : blocks) {
      cur = blk.conv.forward(cur, save);
      cur = blk.bn.forward(cur, mode);
      if (blk.relu) cur = blk.act.forward(cur, save);
    }
    return gap.forward(cur, save);
  }

  Tensor4 backward(const Mat& dfeat) {
    Tensor4 cur = gap.backward(dfeat);
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
      if (it->relu) cur = it->act.backward(cur);
      cur = it->bn.backward(cur);
      cur = it->conv.backward(cur);
    }
    return cur;
  }
};

// An architecture owns its block layout and knows which block counts as the
// final convolutional block (everything else is copyable teacher state).
struct ArchInfo {
  std::string name;
  int default_dim;
  int width_divisor;  // embed_dim must divide evenly into the block widths
  std::function<void(Encoder&, int)> build;
};

inline const std::map<std::string, ArchInfo>& arch_registry() {
  static const std::map<std::string, ArchInfo> reg = [] {
    std::map<std::string, ArchInfo> r;
    // tinyconv: 3x3 conv blocks at strides 2, 2, 1 (the final stride stays
    // at 1), channels D/4 -> D/2 -> D, ReLU after the first two blocks only,
    // then global average pooling.
    r["tinyconv"] = ArchInfo{
        "tinyconv", 64, 4, [](Encoder& e, int d) {
          e.blocks.clear();
          e.blocks.push_back({Conv2d(3, d / 4, 2), BatchNorm2d(d / 4), true, {}});
          e.blocks.push_back({Conv2d(d / 4, d / 2, 2), BatchNorm2d(d / 2), true, {}});
          e.blocks.push_back({Conv2d(d / 2, d, 1), BatchNorm2d(d), false, {}});
        }};
    // microconv: a two-block sibling used for cross-architecture
    // distillation experiments.
    r["microconv"] = ArchInfo{
        "microconv", 32, 2, [](Encoder& e, int d) {
          e.blocks.clear();
          e.blocks.push_back({Conv2d(3, d / 2, 2), BatchNorm2d(d / 2), true, {}});
          e.blocks.push_back({Conv2d(d / 2, d, 2), BatchNorm2d(d), false, {}});
        }};
    return r;
  }();
  return reg;
}

inline const ArchInfo& arch_info(const std::string& name) {
  auto it = arch_registry().find(name);
  if (it == arch_registry().end()) throw ConfigError("unknown arch '" + name + "'");
  return it->second;
}

// Encoder + BNNeck head (batch norm into a bias-free linear classifier).
// Raw features feed the triplet loss; post-neck inference features feed
// distance preservation and every evaluation distance; logits feed CE/KD.
struct ModelBundle {
  std::string arch;
  int embed_dim = 0;
  int class_count = 0;
  std::array<double, 3> norm_mean{0.5, 0.5, 0.5};
  std::array<double, 3> norm_std{0.25, 0.25, 0.25};

  Encoder encoder;
  BatchNorm1d neck;
  Linear fc;  // bias-free by convention

  struct HeadOut {
    Mat inference;
    Mat logits;
  };

  Mat embed(const Tensor4& images01, RunMode mode) {
    if (images01.n == 0) throw ArgumentError("embed_images: empty batch");
    if (images01.c != 3) throw ArgumentError("embed_images: expected 3 channels");
    if (images01.h < 8 || images01.w < 8) {
      throw ArgumentError("embed_images: images must be at least 8x8");
    }
    Tensor4 x = images01;
    const std::size_t plane = x.plane_size();
    for (int n = 0; n < x.n; ++n) {
      for (int c = 0; c < 3; ++c) {
        double* p = x.plane(n, c);
        const double m = norm_mean[c], inv = 1.0 / norm_std[c];
        for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - m) * inv;
      }
    }
    return encoder.forward(x, mode);
  }

  HeadOut head(const Mat& raw, RunMode mode) {
    HeadOut out;
    out.inference = neck.forward(raw, mode);
    out.logits = fc.forward(out.inference, mode == RunMode::train);
    return out;
  }

  // dinference_extra: gradient arriving directly at the inference feature
  // (distance preservation); dlogits: gradient at the logits. Returns the
  // gradient at the raw feature.
  Mat head_backward(const Mat& dinference_extra, const Mat& dlogits) {
    Mat dinf = fc.backward(dlogits);
    if (dinference_extra.rows > 0) {
      if (dinference_extra.rows != dinf.rows || dinference_extra.cols != dinf.cols) {
        throw ArgumentError("head_backward: gradient shape mismatch");
      }
      for (std::size_t i = 0; i < dinf.v.size(); ++i) dinf.v[i] += dinference_extra.v[i];
    }
    return neck.backward(dinf);
  }

  std::vector<NamedParam> params() {
    std::vector<NamedParam> out;
    for (std::size_t i = 0; i < encoder.blocks.size(); ++i) {
      auto& blk = encoder.blocks[i];
      const std::string tag = std::to_string(i + 1);
      out.push_back({"encoder.conv" + tag + ".w", &blk.conv.w, &blk.conv.gw});
      out.push_back({"encoder.conv" + tag + ".b", &blk.conv.b, &blk.conv.gb});
      out.push_back({"encoder.bn" + tag + ".gamma", &blk.bn.gamma, &blk.bn.ggamma});
      out.push_back({"encoder.bn" + tag + ".beta", &blk.bn.beta, &blk.bn.gbeta});
    }
    out.push_back({"neck.gamma", &neck.gamma, &neck.ggamma});
    out.push_back({"neck.beta", &neck.beta, &neck.gbeta});
    out.push_back({"fc.w", &fc.w, &fc.gw});
    return out;
  }

  std::vector<NamedState> state() {
    std::vector<NamedState> out;
    for (auto& p : params()) out.push_back({p.name, p.value});
    for (std::size_t i = 0; i < encoder.blocks.size(); ++i) {
      auto& blk = encoder.blocks[i];
      const std::string tag = std::to_string(i + 1);
      out.push_back({"encoder.bn" + tag + ".running_mean", &blk.bn.running_mean});
      out.push_back({"encoder.bn" + tag + ".running_var", &blk.bn.running_var});
    }
    out.push_back({"neck.running_mean", &neck.running_mean});
    out.push_back({"neck.running_var", &neck.running_var});
    return out;
  }

  void zero_grad() {
    for (auto& blk : encoder.blocks) {
      blk.conv.zero_grad();
      blk.bn.zero_grad();
    }
    neck.zero_grad();
    fc.zero_grad();
  }

  std::size_t param_count() {
    std::size_t n = 0;
    for (auto& p : params()) n += p.value->size();
    return n;
  }

  // Covers parameters and normalization running statistics.
  std::uint64_t param_hash() {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(arch.data(), arch.size(), h);
    h = fnv1a(&embed_dim, sizeof(embed_dim), h);
    h = fnv1a(&class_count, sizeof(class_count), h);
    for (const auto& s : state()) {
      h = fnv1a(s.name.data(), s.name.size(), h);
      h = fnv1a(*s.value, h);
    }
    return h;
  }
};

inline ModelBundle make_model(const std::string& arch, int embed_dim, int class_count,
                              std::uint64_t seed) {
  const ArchInfo& info = arch_info(arch);
  if (embed_dim <= 0) embed_dim = info.default_dim;
  if (embed_dim % info.width_divisor != 0) {
    throw ConfigError("arch '" + arch + "' needs embed_dim divisible by " +
                      std::to_string(info.width_divisor));
  }
  if (class_count < 1) throw ConfigError("class_count must be >= 1");

  ModelBundle m;
  m.arch = arch;
  m.embed_dim = embed_dim;
  m.class_count = class_count;
  info.build(m.encoder, embed_dim);
  m.neck = BatchNorm1d(embed_dim);
  m.fc = Linear(embed_dim, class_count, /*bias=*/false);

  Rng rng(mix_seed(seed, {stream::init}));
  for (auto& blk : m.encoder.blocks) {
    blk.conv.init(rng);
    blk.bn.reset();
  }
  m.neck.reset();
  m.fc.init(rng);
  return m;
}

// Spec-facing free functions over the bundle.
inline Mat embed_images(ModelBundle& m, const Tensor4& images01, RunMode mode) {
  return m.embed(images01, mode);
}

inline ModelBundle::HeadOut head_forward(ModelBundle& m, const Mat& raw, RunMode mode) {
  return m.head(raw, mode);
}

// Arithmetic mean of a non-empty list of equal-length vectors.
inline std::vector<double> aggregate_set(const std::vector<std::vector<double>>& feats) {
  if (feats.empty()) throw ArgumentError("aggregate_set: empty set");
  const std::size_t dim = feats.front().size();
  std::vector<double> out(dim, 0.0);
  for (const auto& f : feats) {
    if (f.size() != dim) throw ArgumentError("aggregate_set: ragged dimensions");
    for (std::size_t i = 0; i < dim; ++i) out[i] += f[i];
  }
  const double inv = 1.0 / feats.size();
  for (auto& v : out) v *= inv;
  return out;
}

// Mean over selected rows of a feature matrix.
inline std::vector<double> aggregate_set(const Mat& feats, const std::vector<int>& rows) {
  if (rows.empty()) throw ArgumentError("aggregate_set: empty set");
  std::vector<double> out(feats.cols, 0.0);
  for (int r : rows) {
    const double* p = feats.row(r);
    for (int i = 0; i < feats.cols; ++i) out[i] += p[i];
  }
  const double inv = 1.0 / rows.size();
  for (auto& v : out) v *= inv;
  return out;
}

// Mean-pools consecutive groups of `group_size` rows: (G*n, D) -> (G, D).
inline Mat mean_pool_groups(const Mat& x, int group_size) {
  if (group_size < 1 || x.rows % group_size != 0) {
    throw ArgumentError("mean_pool_groups: rows not divisible by group size");
  }
  const int groups = x.rows / group_size;
  Mat out(groups, x.cols);
  const double inv = 1.0 / group_size;
  for (int g = 0; g < groups; ++g) {
    double* o = out.row(g);
    for (int k = 0; k < group_size; ++k) {
      const double* p = x.row(g * group_size + k);
      for (int i = 0; i < x.cols; ++i) o[i] += p[i];
    }
    for (int i = 0; i < x.cols; ++i) o[i] *= inv;
  }
  return out;
}

// Backward of mean_pool_groups: spreads each group gradient evenly.
inline Mat mean_pool_groups_backward(const Mat& dpooled, int group_size) {
  Mat dx(dpooled.rows * group_size, dpooled.cols);
  const double inv = 1.0 / group_size;
  for (int g = 0; g < dpooled.rows; ++g) {
    const double* dp = dpooled.row(g);
    for (int k = 0; k < group_size; ++k) {
      double* d = dx.row(g * group_size + k);
      for (int i = 0; i < dpooled.cols; ++i) d[i] = dp[i] * inv;
    }
  }
  return dx;
}

// Same architecture and width: copy everything except the final conv block
// and the classifier, which are freshly initialized under `seed`. Anything
// else (different arch or width): an entirely fresh student. Normalization
// constants always come from the teacher (same input pipeline).
inline ModelBundle init_student_from_teacher(ModelBundle& teacher, const std::string& student_arch,
                                             std::uint64_t seed, int embed_dim = 0) {
  const ArchInfo& info = arch_info(student_arch);
  const int dim = embed_dim > 0 ? embed_dim
                  : student_arch == teacher.arch ? teacher.embed_dim
                                                 : info.default_dim;
  ModelBundle student = make_model(student_arch, dim, teacher.class_count, seed);
  student.norm_mean = teacher.norm_mean;
  student.norm_std = teacher.norm_std;

  if (student_arch == teacher.arch && dim == teacher.embed_dim) {
    const std::size_t last = student.encoder.blocks.size() - 1;
    for (std::size_t i = 0; i < last; ++i) {
      auto& src = teacher.encoder.blocks[i];
      auto& dst = student.encoder.blocks[i];
      dst.conv.w = src.conv.w;
      dst.conv.b = src.conv.b;
      dst.bn.gamma = src.bn.gamma;
      dst.bn.beta = src.bn.beta;
      dst.bn.running_mean = src.bn.running_mean;
      dst.bn.running_var = src.bn.running_var;
    }
    student.neck.gamma = teacher.neck.gamma;
    student.neck.beta = teacher.neck.beta;
    student.neck.running_mean = teacher.neck.running_mean;
    student.neck.running_var = teacher.neck.running_var;
  }
  return student;
}

}  // namespace vkd
