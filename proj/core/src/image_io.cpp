// Copyright 2026 The OBIC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "obic/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "obic/error.hpp"

namespace obic {
namespace {

struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;  // 1 or 3
  std::vector<std::uint8_t> samples;
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw FormatError(std::string("png: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

Raster read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  Raster r;
  try {
    png_init_io(png, f.get());
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    r.width = png_get_image_width(png, info);
    r.height = png_get_image_height(png, info);
    r.channels = png_get_channels(png, info);
    if (r.channels != 1 && r.channels != 3) throw FormatError("png: unsupported channel layout");
    r.samples.resize(r.width * r.height * r.channels);
    std::vector<png_bytep> rows(r.height);
    for (std::size_t y = 0; y < r.height; ++y) rows[y] = r.samples.data() + y * r.width * r.channels;
    png_read_image(png, rows.data());
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return r;
}

void write_png(const std::filesystem::path& path, const Raster& r) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  try {
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height), 8,
                 r.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < r.height; ++y) {
      png_write_row(png, const_cast<png_bytep>(r.samples.data() + y * r.width * r.channels));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

std::string next_token(std::istream& in) {
  std::string tok;
  while (in >> tok) {
    if (tok[0] != '#') return tok;
    std::string rest;
    std::getline(in, rest);
  }
  throw FormatError("pnm: truncated header");
}

Raster read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P6") throw FormatError("pnm: only binary P5/P6 supported");
  Raster r;
  r.channels = magic == "P5" ? 1 : 3;
  r.width = std::stoul(next_token(in));
  r.height = std::stoul(next_token(in));
  const unsigned long maxval = std::stoul(next_token(in));
  if (maxval != 255) throw FormatError("pnm: only maxval 255 supported");
  in.get();
  r.samples.resize(r.width * r.height * r.channels);
  in.read(reinterpret_cast<char*>(r.samples.data()), static_cast<std::streamsize>(r.samples.size()));
  if (in.gcount() != static_cast<std::streamsize>(r.samples.size())) {
    throw TruncationError("pnm pixels", r.samples.size(), static_cast<std::size_t>(in.gcount()));
  }
  return r;
}

void write_pnm(const std::filesystem::path& path, const Raster& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << (r.channels == 1 ? "P5" : "P6") << "\n" << r.width << " " << r.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(r.samples.data()), static_cast<std::streamsize>(r.samples.size()));
}

bool is_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

Raster read_raster(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("no such file: " + path.string());
  return is_png(path) ? read_png(path) : read_pnm(path);
}

void write_raster(const std::filesystem::path& path, const Raster& r) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    write_pnm(path, r);
  } else {
    write_png(path, r);
  }
}

}  // namespace

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

Tensor load_image(const std::filesystem::path& path) {
  const Raster r = read_raster(path);
  Tensor t({3, r.height, r.width});
  for (std::size_t c = 0; c < 3; ++c) {
    const std::size_t src = r.channels == 1 ? 0 : c;
    for (std::size_t i = 0; i < r.width * r.height; ++i) {
      t[c * r.width * r.height + i] = r.samples[i * r.channels + src] / 255.0;
    }
  }
  return t;
}

void save_image(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("save_image: expected 3×H×W, got " + shape_string(image.shape()));
  }
  Raster r{image.dim(2), image.dim(1), 3, {}};
  r.samples.resize(r.width * r.height * 3);
  const std::size_t plane = r.width * r.height;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) r.samples[i * 3 + c] = to_byte(image[c * plane + i]);
  }
  write_raster(path, r);
}

PixelMask load_mask(const std::filesystem::path& path) {
  const Raster r = read_raster(path);
  PixelMask m(r.width, r.height);
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = r.samples[i * r.channels] != 0;
  return m;
}

void save_mask(const std::filesystem::path& path, const PixelMask& mask) {
  Raster r{mask.width, mask.height, 1, {}};
  r.samples.resize(mask.bits.size());
  for (std::size_t i = 0; i < mask.bits.size(); ++i) r.samples[i] = mask.bits[i] ? 255 : 0;
  write_raster(path, r);
}

}  // namespace obic
