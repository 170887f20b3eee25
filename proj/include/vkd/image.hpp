#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vkd/errors.hpp"
#include "vkd/tensor.hpp"

namespace vkd {

// Interleaved 8-bit RGB.
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // height * width * 3

  ImageU8() = default;
  ImageU8(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* px(int y, int x) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* px(int y, int x) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

// Binary PPM (P6), maxval 255. Lossless and trivially byte-reproducible.
inline void write_ppm(const std::filesystem::path& path, const ImageU8& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
  if (!out) throw IoError("short write: " + path.string());
}

namespace detail {
// PPM header token reader: skips whitespace and '#' comments.
inline std::string ppm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}
}  // namespace detail

inline ImageU8 read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  if (detail::ppm_token(in) != "P6") throw FormatError("not a P6 ppm: " + path.string());
  int w = 0, h = 0, maxv = 0;
  try {
    w = std::stoi(detail::ppm_token(in));
    h = std::stoi(detail::ppm_token(in));
    maxv = std::stoi(detail::ppm_token(in));
  } catch (const std::exception&) {
    throw FormatError("bad ppm header: " + path.string());
  }
  if (w <= 0 || h <= 0 || maxv != 255) throw FormatError("bad ppm header: " + path.string());
  ImageU8 img(w, h);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) {
    throw FormatError("truncated ppm payload: " + path.string());
  }
  return img;
}

// Writes one image into NCHW slot `slot` of `dst`, scaled to [0, 1].
inline void to_planar01(const ImageU8& img, Tensor4& dst, int slot) {
  if (dst.c != 3 || dst.h != img.height || dst.w != img.width) {
    throw ArgumentError("to_planar01: tensor/image shape mismatch");
  }
  for (int c = 0; c < 3; ++c) {
    double* plane = dst.plane(slot, c);
    const std::uint8_t* src = img.rgb.data() + c;
    const std::size_t count = dst.plane_size();
    for (std::size_t i = 0; i < count; ++i) plane[i] = src[i * 3] / 255.0;
  }
}

}  // namespace vkd
