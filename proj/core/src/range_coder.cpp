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

#include "obic/range_coder.hpp"

#include <algorithm>

#include "obic/bytes.hpp"
#include "obic/error.hpp"

namespace obic {
namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

CdfTable::CdfTable(std::vector<std::uint32_t> cumulative) : cum_(std::move(cumulative)) {
  if (cum_.empty()) throw Error("degenerate CDF table: no symbols");
  if (cum_.back() != kCdfTotal) throw Error("degenerate CDF table: total is not 2^16");
  std::uint32_t prev = 0;
  for (std::uint32_t c : cum_) {
    if (c <= prev) throw Error("degenerate CDF table: not strictly increasing");
    prev = c;
  }
}

std::size_t CdfTable::find(std::uint32_t target) const noexcept {
  return static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), target) - cum_.begin());
}

std::uint64_t CdfTable::hash() const {
  ByteWriter w;
  for (std::uint32_t c : cum_) w.u32(c);
  return fnv1a64(w.data());
}

void RangeEncoder::encode(std::size_t symbol, const CdfTable& table) {
  if (symbol >= table.size()) {
    throw Error("symbol " + std::to_string(symbol) + " outside table of size " +
                std::to_string(table.size()));
  }
  const std::uint32_t r = range_ >> kCdfPrecisionBits;
  low_ += static_cast<std::uint64_t>(r) * table.low(symbol);
  range_ = r * table.frequency(symbol);
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      // The very first cached byte is always zero; it is not emitted.
      if (!first_) out_.push_back(static_cast<std::uint8_t>(temp + carry));
      first_ = false;
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= in_.size()) throw TruncationError("range-coded segment", pos_ + 1, in_.size());
  return in_[pos_++];
}

std::size_t RangeDecoder::decode(const CdfTable& table) {
  const std::uint32_t r = range_ >> kCdfPrecisionBits;
  const std::uint32_t target = code_ / r;
  if (target >= kCdfTotal) throw CorruptStreamError("range decoder: code outside range");
  const std::size_t s = table.find(target);
  code_ -= r * table.low(s);
  range_ = r * table.frequency(s);
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
  if (code_ >= range_) throw CorruptStreamError("range decoder: invariant code < range violated");
  return s;
}

std::vector<std::uint8_t> encode_symbols(std::span<const std::size_t> symbols,
                                         std::span<const CdfTable* const> tables) {
  if (symbols.size() != tables.size()) throw Error("encode_symbols: one table per symbol required");
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) enc.encode(symbols[i], *tables[i]);
  return enc.finish();
}

std::vector<std::size_t> decode_symbols(std::span<const std::uint8_t> bytes,
                                        const CdfProvider& provider, std::size_t count) {
  RangeDecoder dec(bytes);
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const CdfTable& t = provider(i, out);
    out.push_back(dec.decode(t));
  }
  return out;
}

}  // namespace obic
