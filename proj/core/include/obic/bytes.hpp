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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace obic {

// Little-endian byte sink.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void leb128(std::uint64_t v);
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void text(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }

  std::size_t size() const noexcept { return out_.size(); }
  const std::vector<std::uint8_t>& data() const& noexcept { return out_; }
  std::vector<std::uint8_t> take() && { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

// Little-endian byte source. Every read names the structure being read so a
// short buffer raises TruncationError("<part>").
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8(std::string_view part);
  std::uint16_t u16(std::string_view part);
  std::uint32_t u32(std::string_view part);
  std::uint64_t u64(std::string_view part);
  float f32(std::string_view part);
  double f64(std::string_view part);
  std::uint64_t leb128(std::string_view part);
  std::span<const std::uint8_t> bytes(std::size_t n, std::string_view part);

  std::size_t position() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  void need(std::size_t n, std::string_view part) const;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> data,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace obic
