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

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "obic/masking.hpp"
#include "obic/tensor.hpp"

namespace obic {

struct Sample {
  Tensor image;  // 3×H×W in [0, 1]
  PixelMask mask;
};

// Deterministic synthetic scene: smooth gradient background with one or two
// textured foreground shapes; the mask marks the shapes.
Sample synthesize_sample(std::size_t size, std::uint64_t seed);

// Writes `count` samples as NNN.png + NNN_mask.png.
void write_corpus(const std::filesystem::path& dir, std::size_t count, std::size_t size,
                  std::uint64_t seed);

struct CorpusEntry {
  std::filesystem::path image;
  std::filesystem::path mask;
};

// Pairs every X.png / X.ppm with X_mask.png / X_mask.pgm, sorted by name.
std::vector<CorpusEntry> list_corpus(const std::filesystem::path& dir);
std::vector<Sample> load_corpus(const std::filesystem::path& dir);

}  // namespace obic
