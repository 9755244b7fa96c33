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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "obic/corpus.hpp"
#include "obic/entropy.hpp"
#include "obic/graph.hpp"
#include "obic/ops.hpp"
#include "obic/pipeline.hpp"
#include "obic/range_coder.hpp"

namespace {

using namespace obic;

void BM_RangeCoderEncode(benchmark::State& state) {
  const CdfTable table = gaussian_table(0.0, 3.0);
  std::mt19937_64 rng(1);
  std::vector<std::size_t> symbols(static_cast<std::size_t>(state.range(0)));
  for (auto& s : symbols) s = table.find(static_cast<std::uint32_t>(rng() % kCdfTotal));
  const std::vector<const CdfTable*> tables(symbols.size(), &table);
  for (auto _ : state) benchmark::DoNotOptimize(encode_symbols(symbols, tables));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RangeCoderEncode)->Arg(1 << 16);

void BM_RangeCoderDecode(benchmark::State& state) {
  const CdfTable table = gaussian_table(0.0, 3.0);
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> symbols(n);
  for (auto& s : symbols) s = table.find(static_cast<std::uint32_t>(rng() % kCdfTotal));
  const std::vector<const CdfTable*> tables(n, &table);
  const auto bytes = encode_symbols(symbols, tables);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        decode_symbols(bytes, [&](std::size_t, auto) -> const CdfTable& { return table; }, n));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RangeCoderDecode)->Arg(1 << 16);

void BM_GaussianTable(benchmark::State& state) {
  double scale = 0.2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gaussian_table(0.3, scale));
    scale = scale > 20.0 ? 0.2 : scale * 1.01;
  }
}
BENCHMARK(BM_GaussianTable);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const Tensor x = uniform_tensor({4, c, 32, 32}, 1.0, rng);
  const Parameter w{uniform_tensor({c, c, 5, 5}, 0.1, rng)};
  const Parameter b{Tensor({c})};
  for (auto _ : state) {
    Graph g;
    const Var y = ops::conv2d(g, g.constant(x), g.parameter("w", w), g.parameter("b", b), {2, 2});
    g.backward(y, Tensor(g.value(y).shape(), 1.0));
    benchmark::DoNotOptimize(g.grad(y));
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(16)->Arg(32);

void BM_EncodeImage(benchmark::State& state) {
  const Model model(CodecConfig{}, 1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Sample s = synthesize_sample(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(encode_image(model, s.image, s.mask));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(3 * n * n));
}
BENCHMARK(BM_EncodeImage)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DecodeImage(benchmark::State& state) {
  const Model model(CodecConfig{}, 1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Sample s = synthesize_sample(n, 3);
  const auto bytes = encode_image(model, s.image, s.mask).bytes;
  for (auto _ : state) benchmark::DoNotOptimize(decode_image(model, bytes));
}
BENCHMARK(BM_DecodeImage)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
