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

#include "obic/bytes.hpp"

#include <bit>
#include <cstring>

#include "obic/error.hpp"

namespace obic {

void ByteWriter::u16(std::uint16_t v) {
  u8(static_cast<std::uint8_t>(v));
  u8(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::leb128(std::uint64_t v) {
  do {
    std::uint8_t b = v & 0x7f;
    v >>= 7;
    if (v) b |= 0x80;
    u8(b);
  } while (v);
}

void ByteReader::need(std::size_t n, std::string_view part) const {
  if (remaining() < n) throw TruncationError(std::string(part), n, remaining());
}

std::uint8_t ByteReader::u8(std::string_view part) {
  need(1, part);
  return in_[pos_++];
}

std::uint16_t ByteReader::u16(std::string_view part) {
  need(2, part);
  const std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32(std::string_view part) {
  need(4, part);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64(std::string_view part) {
  need(8, part);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

float ByteReader::f32(std::string_view part) { return std::bit_cast<float>(u32(part)); }

double ByteReader::f64(std::string_view part) { return std::bit_cast<double>(u64(part)); }

std::uint64_t ByteReader::leb128(std::string_view part) {
  std::uint64_t v = 0;
  for (int shift = 0;; shift += 7) {
    if (shift > 63) throw FormatError(std::string(part) + ": LEB128 value overflows 64 bits");
    const std::uint8_t b = u8(part);
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80)) {
      // Reject non-minimal encodings so parsing stays a bijection.
      if (b == 0 && shift > 0) throw FormatError(std::string(part) + ": non-minimal LEB128");
      return v;
    }
  }
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n, std::string_view part) {
  need(n, part);
  auto out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace obic
