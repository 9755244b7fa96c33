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

#include "obic/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "obic/bytes.hpp"
#include "obic/error.hpp"

namespace obic {
namespace {

constexpr std::string_view kMagic = "OBICW";
constexpr std::uint32_t kVersion = 1;

void write_params(ByteWriter& w, const ParameterSet& params) {
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, p] : params) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.text(name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t e : p.value.shape()) w.u32(static_cast<std::uint32_t>(e));
    for (double v : p.value.values()) w.f32(static_cast<float>(v));
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ParameterSet& params,
                                               const CheckpointInfo& info) {
  ByteWriter w;
  w.text(kMagic);
  w.u32(kVersion);
  w.u32(info.latent_channels);
  w.u32(info.hyper_channels);
  w.f64(info.lambda);
  w.f64(info.a1);
  w.f64(info.a2);
  w.u32(info.lambda_id);
  write_params(w, params);
  return std::move(w).take();
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.bytes(kMagic.size(), "checkpoint magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.u32("checkpoint version");
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.info.latent_channels = r.u32("checkpoint header");
  ck.info.hyper_channels = r.u32("checkpoint header");
  ck.info.lambda = r.f64("checkpoint header");
  ck.info.a1 = r.f64("checkpoint header");
  ck.info.a2 = r.f64("checkpoint header");
  ck.info.lambda_id = r.u32("checkpoint header");
  const std::uint32_t count = r.u32("checkpoint header");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = r.u32("parameter name");
    const auto nb = r.bytes(len, "parameter name");
    std::string name(nb.begin(), nb.end());
    const std::uint32_t rank = r.u32("parameter shape");
    if (rank > 4) throw FormatError("parameter " + name + " has rank " + std::to_string(rank));
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(r.u32("parameter shape"));
    Tensor t(shape);
    for (double& v : t.values()) v = r.f32("parameter values");
    ck.params.add(name, std::move(t));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after checkpoint");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const CheckpointInfo& info) {
  write_file(path, serialize_checkpoint(params, info));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

ModelId model_id(const ParameterSet& params, std::uint32_t latent_channels,
                 std::uint32_t hyper_channels) {
  ByteWriter w;
  w.u32(latent_channels);
  w.u32(hyper_channels);
  write_params(w, params);
  const std::uint64_t h = fnv1a64(w.data());
  ModelId id{};
  for (int i = 0; i < 8; ++i) id[i] = static_cast<std::uint8_t>(h >> (8 * i));
  return id;
}

void round_to_float(ParameterSet& params) {
  for (auto& [name, p] : params) {
    for (double& v : p.value.values()) v = static_cast<float>(v);
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace obic
