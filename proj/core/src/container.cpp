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

#include "obic/container.hpp"

#include <algorithm>
#include <string>

#include "obic/bytes.hpp"
#include "obic/error.hpp"

namespace obic {
namespace {

constexpr char kMagic[4] = {'O', 'B', 'I', 'C'};
constexpr std::uint8_t kFlagPixelDomain = 1;
constexpr std::uint8_t kFlagAutoregressive = 2;
// magic, version, width, height, C, C_h, model id, flags, layer count, rle length
constexpr std::size_t kFixedHeaderBytes = 4 + 1 + 4 + 4 + 2 + 2 + 8 + 1 + 1 + 4;
constexpr std::size_t kIndexBytes = kSegmentCount * 8;

void check_geometry(const ContainerHeader& h) {
  if (h.width == 0 || h.height == 0 || h.width % 16 != 0 || h.height % 16 != 0) {
    throw FormatError("container: image size " + std::to_string(h.width) + "x" +
                      std::to_string(h.height) + " is not a positive multiple of 16");
  }
}

}  // namespace

const char* segment_name(Segment s) {
  switch (s) {
    case Segment::obj_hyper: return "obj-hyper";
    case Segment::obj_latent: return "obj-latent";
    case Segment::bkg_hyper: return "bkg-hyper";
    case Segment::bkg_latent: return "bkg-latent";
  }
  return "?";
}

Segment hyper_segment(Layer layer) {
  return layer == Layer::object ? Segment::obj_hyper : Segment::bkg_hyper;
}

Segment latent_segment(Layer layer) {
  return layer == Layer::object ? Segment::obj_latent : Segment::bkg_latent;
}

std::vector<std::uint8_t> encode_mask_rle(const LatentMask& mask) {
  if (mask.bits.size() != mask.height * mask.width) throw ShapeError("mask: bit count mismatch");
  ByteWriter w;
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (std::uint8_t b : mask.bits) {
    if (b > 1) throw FormatError("mask: non-binary value");
    if (b != current) {
      w.leb128(run);
      current = b;
      run = 0;
    }
    ++run;
  }
  w.leb128(run);
  return std::move(w).take();
}

LatentMask decode_mask_rle(std::span<const std::uint8_t> bytes, std::size_t height,
                           std::size_t width) {
  LatentMask m(height, width);
  const std::size_t total = height * width;
  ByteReader r(bytes);
  std::size_t filled = 0;
  std::uint8_t current = 0;
  bool first = true;
  while (r.remaining() > 0) {
    const std::uint64_t run = r.leb128("mask");
    if (run == 0 && !first) throw FormatError("mask: zero-length run");
    if (run > total - filled) throw FormatError("mask: run overflows the latent grid");
    std::fill_n(m.bits.begin() + static_cast<std::ptrdiff_t>(filled), run, current);
    filled += run;
    current ^= 1;
    first = false;
  }
  if (filled != total) {
    throw FormatError("mask: runs cover " + std::to_string(filled) + " of " +
                      std::to_string(total) + " cells");
  }
  return m;
}

std::vector<std::uint8_t> write_container(const Container& c) {
  const ContainerHeader& h = c.header;
  check_geometry(h);
  if (c.mask.height != h.height / 16 || c.mask.width != h.width / 16) {
    throw FormatError("container: mask extent does not match image size");
  }
  const std::vector<std::uint8_t> rle = encode_mask_rle(c.mask);
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.u8(kContainerVersion);
  w.u32(h.width);
  w.u32(h.height);
  w.u16(h.latent_channels);
  w.u16(h.hyper_channels);
  w.bytes(h.model_id);
  w.u8((h.domain == MaskingDomain::pixel ? kFlagPixelDomain : 0) |
       (h.autoregressive ? kFlagAutoregressive : 0));
  w.u8(kLayerCount);
  w.u32(static_cast<std::uint32_t>(rle.size()));
  w.bytes(rle);
  std::uint64_t offset = kFixedHeaderBytes + rle.size() + kIndexBytes;
  for (const auto& seg : c.segments) {
    if (offset + seg.size() > 0xFFFFFFFFull) throw FormatError("container: exceeds 4 GiB");
    w.u32(static_cast<std::uint32_t>(offset));
    w.u32(static_cast<std::uint32_t>(seg.size()));
    offset += seg.size();
  }
  for (const auto& seg : c.segments) w.bytes(seg);
  return std::move(w).take();
}

Container read_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("container: bad magic");
  const std::uint8_t version = r.u8("version");
  if (version != kContainerVersion) {
    throw FormatError("container: unsupported version " + std::to_string(version));
  }
  Container c;
  ContainerHeader& h = c.header;
  h.width = r.u32("width");
  h.height = r.u32("height");
  h.latent_channels = r.u16("latent channels");
  h.hyper_channels = r.u16("hyper channels");
  const auto id = r.bytes(8, "model id");
  std::copy(id.begin(), id.end(), h.model_id.begin());
  const std::uint8_t flags = r.u8("flags");
  if ((flags & ~(kFlagPixelDomain | kFlagAutoregressive)) != 0) {
    throw FormatError("container: unknown flag bits");
  }
  h.domain = (flags & kFlagPixelDomain) ? MaskingDomain::pixel : MaskingDomain::feature;
  h.autoregressive = (flags & kFlagAutoregressive) != 0;
  const std::uint8_t layers = r.u8("layer count");
  if (layers != kLayerCount) {
    throw FormatError("container: layer count " + std::to_string(layers) + " unsupported");
  }
  check_geometry(h);
  const std::uint32_t rle_len = r.u32("mask length");
  c.mask = decode_mask_rle(r.bytes(rle_len, "mask"), h.height / 16, h.width / 16);

  std::array<std::uint32_t, kSegmentCount> offsets{}, lengths{};
  for (std::size_t i = 0; i < kSegmentCount; ++i) {
    offsets[i] = r.u32("index");
    lengths[i] = r.u32("index");
  }
  std::uint64_t expected = r.position();
  for (std::size_t i = 0; i < kSegmentCount; ++i) {
    const char* name = segment_name(static_cast<Segment>(i));
    if (offsets[i] != expected) {
      throw FormatError(std::string("container: segment ") + name + " is not contiguous");
    }
    c.segments[i] = [&] {
      const auto s = r.bytes(lengths[i], name);
      return std::vector<std::uint8_t>(s.begin(), s.end());
    }();
    expected += lengths[i];
  }
  if (r.remaining() != 0) throw FormatError("container: trailing bytes after last segment");
  return c;
}

std::vector<std::uint8_t> extract_substream(std::span<const std::uint8_t> bytes, Layer layer) {
  Container c = read_container(bytes);
  const Layer other = layer == Layer::object ? Layer::background : Layer::object;
  c.segment(hyper_segment(other)).clear();
  c.segment(latent_segment(other)).clear();
  return write_container(c);
}

SizeBreakdown size_breakdown(const Container& c) {
  SizeBreakdown b;
  b.overhead = kFixedHeaderBytes + encode_mask_rle(c.mask).size() + kIndexBytes;
  b.obj = c.segment(Segment::obj_hyper).size() + c.segment(Segment::obj_latent).size();
  b.bkg = c.segment(Segment::bkg_hyper).size() + c.segment(Segment::bkg_latent).size();
  b.total = b.overhead + b.obj + b.bkg;
  return b;
}

}  // namespace obic
