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

#include "obic/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "obic/error.hpp"
#include "obic/image_io.hpp"

namespace obic {
namespace {

struct Shape2D {
  int kind;  // 0 ellipse, 1 rectangle, 2 triangle
  double cx, cy, rx, ry, angle;

  bool contains(double x, double y) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (c * (x - cx) + s * (y - cy)) / rx;
    const double v = (-s * (x - cx) + c * (y - cy)) / ry;
    switch (kind) {
      case 0: return u * u + v * v <= 1.0;
      case 1: return std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
      default: return v <= 1.0 && v >= 2.0 * std::abs(u) - 1.0;
    }
  }
};

}  // namespace

Sample synthesize_sample(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  const double n = static_cast<double>(size);

  double base[3], gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = uni(0.25, 0.75);
    gx[c] = uni(-0.3, 0.3);
    gy[c] = uni(-0.3, 0.3);
  }
  const double wave_f = uni(0.5, 1.5), wave_a = uni(0.0, 0.06), wave_p = uni(0, 2 * std::numbers::pi);

  const int shapes = 1 + static_cast<int>(rng() % 2);
  std::vector<Shape2D> objs;
  double fill[2][3];
  double freq[2], phase[2], contrast[2];
  int pattern[2];
  for (int k = 0; k < shapes; ++k) {
    objs.push_back({static_cast<int>(rng() % 3), uni(0.3, 0.7) * n, uni(0.3, 0.7) * n,
                    uni(0.2, 0.38) * n, uni(0.2, 0.38) * n, uni(0, std::numbers::pi)});
    for (int c = 0; c < 3; ++c) fill[k][c] = uni(0.1, 0.9);
    freq[k] = uni(0.5, 1.2);
    phase[k] = uni(0, 2 * std::numbers::pi);
    contrast[k] = uni(0.15, 0.3);
    pattern[k] = static_cast<int>(rng() % 2);
  }

  Sample out{Tensor({3, size, size}), PixelMask(size, size)};
  std::normal_distribution<double> grain(0.0, 0.02);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double fx = x / n - 0.5, fy = y / n - 0.5;
      int hit = -1;
      for (int k = shapes - 1; k >= 0 && hit < 0; --k) {
        if (objs[k].contains(x + 0.5, y + 0.5)) hit = k;
      }
      double rgb[3];
      if (hit < 0) {
        const double wave = wave_a * std::sin(2 * std::numbers::pi * wave_f * (fx + fy) + wave_p);
        for (int c = 0; c < 3; ++c) rgb[c] = base[c] + gx[c] * fx + gy[c] * fy + wave;
      } else {
        const double t = pattern[hit] == 0
                             ? std::sin(freq[hit] * (x + 0.7 * y) + phase[hit])
                             : std::sin(freq[hit] * x + phase[hit]) * std::sin(freq[hit] * y);
        const double g = grain(rng);
        for (int c = 0; c < 3; ++c) rgb[c] = fill[hit][c] + contrast[hit] * t + g;
        out.mask.at(y, x) = 1;
      }
      for (int c = 0; c < 3; ++c) {
        out.image[(c * size + y) * size + x] = to_byte(rgb[c]) / 255.0;
      }
    }
  }
  return out;
}

void write_corpus(const std::filesystem::path& dir, std::size_t count, std::size_t size,
                  std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < count; ++i) {
    const Sample s = synthesize_sample(size, seed + i);
    char stem[32];
    std::snprintf(stem, sizeof stem, "%03zu", i);
    save_image(dir / (std::string(stem) + ".png"), s.image);
    save_mask(dir / (std::string(stem) + "_mask.png"), s.mask);
  }
}

std::vector<CorpusEntry> list_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("corpus directory not found: " + dir.string());
  std::vector<CorpusEntry> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto& p = e.path();
    const std::string stem = p.stem().string();
    const std::string ext = p.extension().string();
    if ((ext != ".png" && ext != ".ppm") || stem.ends_with("_mask")) continue;
    for (const char* mext : {".png", ".pgm"}) {
      const auto m = dir / (stem + "_mask" + mext);
      if (std::filesystem::exists(m)) {
        out.push_back({p, m});
        break;
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.image < b.image; });
  return out;
}

std::vector<Sample> load_corpus(const std::filesystem::path& dir) {
  std::vector<Sample> out;
  for (const auto& e : list_corpus(dir)) {
    Sample s{load_image(e.image), load_mask(e.mask)};
    if (s.mask.width != s.image.dim(2) || s.mask.height != s.image.dim(1)) {
      throw ShapeError("corpus: mask size differs from image " + e.image.string());
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error("corpus is empty: " + dir.string());
  return out;
}

}  // namespace obic
