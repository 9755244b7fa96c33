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
#include <functional>
#include <span>
#include <vector>

namespace obic {

constexpr std::uint32_t kCdfPrecisionBits = 16;
constexpr std::uint32_t kCdfTotal = 1u << kCdfPrecisionBits;

// Cumulative frequency table: cumulative()[i] is the total mass of symbols
// 0..i. Strictly increasing, ending at kCdfTotal.
class CdfTable {
 public:
  CdfTable() = default;
  // Throws obic::Error if the table is not strictly increasing or does not
  // end at kCdfTotal.
  explicit CdfTable(std::vector<std::uint32_t> cumulative);

  std::size_t size() const noexcept { return cum_.size(); }
  std::uint32_t low(std::size_t s) const noexcept { return s == 0 ? 0 : cum_[s - 1]; }
  std::uint32_t high(std::size_t s) const noexcept { return cum_[s]; }
  std::uint32_t frequency(std::size_t s) const noexcept { return high(s) - low(s); }
  // Symbol whose [low, high) interval contains `target` (< kCdfTotal).
  std::size_t find(std::uint32_t target) const noexcept;
  const std::vector<std::uint32_t>& cumulative() const noexcept { return cum_; }
  std::uint64_t hash() const;

  friend bool operator==(const CdfTable&, const CdfTable&) = default;

 private:
  std::vector<std::uint32_t> cum_;
};

// Byte-oriented range encoder (64-bit low, 32-bit range, carry propagation
// through a cached byte). Integer-only, so output is identical everywhere.
class RangeEncoder {
 public:
  void encode(std::size_t symbol, const CdfTable& table);
  // Flushes and returns the stream. The encoder is spent afterwards.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  bool first_ = true;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  // Throws CorruptStreamError / TruncationError on malformed input.
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  std::size_t decode(const CdfTable& table);
  // True once every input byte has been consumed by renormalization.
  bool exhausted() const noexcept { return pos_ == in_.size(); }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

// Convenience wrappers over a whole symbol sequence.
std::vector<std::uint8_t> encode_symbols(std::span<const std::size_t> symbols,
                                         std::span<const CdfTable* const> tables);

// `provider(i, decoded_so_far)` returns the table for symbol i; it may depend
// on the symbols already decoded.
using CdfProvider =
    std::function<const CdfTable&(std::size_t index, std::span<const std::size_t> decoded)>;
std::vector<std::size_t> decode_symbols(std::span<const std::uint8_t> bytes,
                                        const CdfProvider& provider, std::size_t count);

}  // namespace obic
