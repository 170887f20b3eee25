#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vkd/errors.hpp"
#include "vkd/model.hpp"

namespace vkd {

// Single-file container for model/optimizer state: a small string-keyed meta
// section plus named double tensors, all little-endian, round-tripping
// bit-exactly.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::map<std::string, std::vector<double>> tensors;

  static constexpr char kMagic[9] = "VKDCKPT1";

  bool has(const std::string& name) const { return tensors.count(name) > 0; }

  const std::vector<double>& tensor(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw IntegrityError("checkpoint missing tensor '" + name + "'");
    return it->second;
  }

  std::string meta_at(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw IntegrityError("checkpoint missing meta key '" + key + "'");
    return it->second;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + path.string());
    out.write(kMagic, 8);
    write_u64(out, meta.size());
    for (const auto& [k, v] : meta) {
      write_str(out, k);
      write_str(out, v);
    }
    write_u64(out, tensors.size());
    for (const auto& [name, data] : tensors) {
      write_str(out, name);
      write_u64(out, data.size());
      for (double d : data) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        write_u64(out, bits);
      }
    }
    if (!out) throw IoError("short write: " + path.string());
  }

  static Checkpoint load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) {
      throw FormatError("not a checkpoint file: " + path.string());
    }
    Checkpoint ck;
    const std::uint64_t n_meta = read_u64(in, path);
    for (std::uint64_t i = 0; i < n_meta; ++i) {
      auto k = read_str(in, path);
      auto v = read_str(in, path);
      ck.meta[k] = v;
    }
    const std::uint64_t n_tensors = read_u64(in, path);
    for (std::uint64_t i = 0; i < n_tensors; ++i) {
      auto name = read_str(in, path);
      const std::uint64_t len = read_u64(in, path);
      std::vector<double> data(len);
      for (auto& d : data) {
        const std::uint64_t bits = read_u64(in, path);
        std::memcpy(&d, &bits, 8);
      }
      ck.tensors[name] = std::move(data);
    }
    return ck;
  }

 private:
  static void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
  }

  static void write_str(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  static std::uint64_t read_u64(std::istream& in, const std::filesystem::path& path) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (in.gcount() != 8) throw FormatError("truncated checkpoint: " + path.string());
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }

  static std::string read_str(std::istream& in, const std::filesystem::path& path) {
    const std::uint64_t len = read_u64(in, path);
    if (len > (1ull << 32)) throw FormatError("implausible string length: " + path.string());
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint64_t>(in.gcount()) != len) {
      throw FormatError("truncated checkpoint: " + path.string());
    }
    return s;
  }
};

inline Checkpoint model_to_checkpoint(ModelBundle& m, const std::string& stage,
                                      const std::string& config_hash) {
  Checkpoint ck;
  ck.meta["format"] = "1";
  ck.meta["arch"] = m.arch;
  ck.meta["embed_dim"] = std::to_string(m.embed_dim);
  ck.meta["class_count"] = std::to_string(m.class_count);
  ck.meta["stage"] = stage;
  ck.meta["config_hash"] = config_hash;
  ck.tensors["norm.mean"] = {m.norm_mean[0], m.norm_mean[1], m.norm_mean[2]};
  ck.tensors["norm.std"] = {m.norm_std[0], m.norm_std[1], m.norm_std[2]};
  for (const auto& s : m.state()) ck.tensors[s.name] = *s.value;
  return ck;
}

inline ModelBundle model_from_checkpoint(const Checkpoint& ck) {
  ModelBundle m = make_model(ck.meta_at("arch"), std::stoi(ck.meta_at("embed_dim")),
                             std::stoi(ck.meta_at("class_count")), /*seed=*/0);
  const auto& mean = ck.tensor("norm.mean");
  const auto& stdv = ck.tensor("norm.std");
  if (mean.size() != 3 || stdv.size() != 3) throw IntegrityError("bad normalization tensors");
  for (int c = 0; c < 3; ++c) {
    m.norm_mean[c] = mean[c];
    m.norm_std[c] = stdv[c];
  }
  for (auto& s : m.state()) {
    const auto& data = ck.tensor(s.name);
    if (data.size() != s.value->size()) {
      throw IntegrityError("tensor '" + s.name + "' has size " + std::to_string(data.size()) +
                           ", model expects " + std::to_string(s.value->size()));
    }
    *s.value = data;
  }
  return m;
}

}  // namespace vkd
