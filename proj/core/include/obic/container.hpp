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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "obic/checkpoint.hpp"
#include "obic/masking.hpp"

namespace obic {

constexpr std::uint8_t kContainerVersion = 1;
constexpr std::uint8_t kLayerCount = 2;

struct ContainerHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t latent_channels = 0;
  std::uint16_t hyper_channels = 0;
  ModelId model_id{};
  MaskingDomain domain = MaskingDomain::feature;
  bool autoregressive = true;

  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

// Segment order is fixed by the format.
enum class Segment : std::size_t { obj_hyper = 0, obj_latent = 1, bkg_hyper = 2, bkg_latent = 3 };
constexpr std::size_t kSegmentCount = 4;

const char* segment_name(Segment s);
Segment hyper_segment(Layer layer);
Segment latent_segment(Layer layer);

struct Container {
  ContainerHeader header;
  LatentMask mask;
  std::array<std::vector<std::uint8_t>, kSegmentCount> segments;

  std::vector<std::uint8_t>& segment(Segment s) { return segments[static_cast<std::size_t>(s)]; }
  const std::vector<std::uint8_t>& segment(Segment s) const {
    return segments[static_cast<std::size_t>(s)];
  }
  friend bool operator==(const Container&, const Container&) = default;
};

std::vector<std::uint8_t> encode_mask_rle(const LatentMask& mask);
LatentMask decode_mask_rle(std::span<const std::uint8_t> bytes, std::size_t height,
                           std::size_t width);

std::vector<std::uint8_t> write_container(const Container& c);
Container read_container(std::span<const std::uint8_t> bytes);

// A standalone container holding only `layer`; the other layer's segments
// are emptied.
std::vector<std::uint8_t> extract_substream(std::span<const std::uint8_t> bytes, Layer layer);

struct SizeBreakdown {
  std::size_t total = 0;
  std::size_t overhead = 0;  // header + mask + index
  std::size_t obj = 0;
  std::size_t bkg = 0;
};

SizeBreakdown size_breakdown(const Container& c);

}  // namespace obic
