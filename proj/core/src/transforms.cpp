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

#include "obic/transforms.hpp"

#include <cmath>
#include <utility>

#include "obic/error.hpp"
#include "obic/ops.hpp"

namespace obic {
namespace {

constexpr std::size_t kKernel = 5;
constexpr std::size_t kStages = 4;
constexpr double kSlope = 0.01;
constexpr ops::ConvSpec kDown{2, 2};
constexpr ops::ConvTransposeSpec kUp{2, 2, 1};

std::string weight_name(const std::string& stage, std::size_t i) {
  return stage + "." + std::to_string(i) + ".weight";
}
std::string bias_name(const std::string& stage, std::size_t i) {
  return stage + "." + std::to_string(i) + ".bias";
}

// gain 2 before a rectifier, 1 for a linear output.
void add_conv(ParameterSet& ps, std::mt19937_64& rng, const std::string& stage, std::size_t i,
              std::size_t in, std::size_t out, double gain) {
  const double bound = std::sqrt(3.0 * gain / static_cast<double>(in * kKernel * kKernel));
  ps.add(weight_name(stage, i), uniform_tensor({out, in, kKernel, kKernel}, bound, rng));
  ps.add(bias_name(stage, i), Tensor({out}, 0.0));
}

// A stride-2 transposed conv sees a quarter of its taps per output pixel.
void add_tconv(ParameterSet& ps, std::mt19937_64& rng, const std::string& stage, std::size_t i,
               std::size_t in, std::size_t out, double gain, double bias = 0.0) {
  const double fan_in = static_cast<double>(in * kKernel * kKernel) / 4.0;
  const double bound = std::sqrt(3.0 * gain / fan_in);
  ps.add(weight_name(stage, i), uniform_tensor({in, out, kKernel, kKernel}, bound, rng));
  ps.add(bias_name(stage, i), Tensor({out}, bias));
}

Var down(Graph& g, const ParameterSet& ps, const std::string& stage, std::size_t i, Var x) {
  return ops::conv2d(g, x, g.parameter(ps, weight_name(stage, i)), g.parameter(ps, bias_name(stage, i)),
                     kDown);
}

Var up(Graph& g, const ParameterSet& ps, const std::string& stage, std::size_t i, Var x) {
  return ops::conv_transpose2d(g, x, g.parameter(ps, weight_name(stage, i)),
                               g.parameter(ps, bias_name(stage, i)), kUp);
}

std::string hyper_stage(Layer layer, const char* part) {
  return CodecNetworks::layer_prefix(layer) + "." + part;
}

void expect(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <typename F>
Tensor run(const Tensor& input, F&& f) {
  Graph g;
  const bool batched = input.rank() == 4;
  const Var out = f(g, g.constant(batched ? input : as_batch(input)));
  Tensor v = g.value(out);
  if (!batched) v = v.reshaped({v.dim(1), v.dim(2), v.dim(3)});
  return v;
}

}  // namespace

CodecNetworks::CodecNetworks(CodecConfig cfg) : cfg_(cfg) {
  if (cfg_.latent_channels == 0 || cfg_.hyper_channels == 0) {
    throw ShapeError("codec: channel counts must be positive");
  }
}

void CodecNetworks::register_parameters(ParameterSet& ps, std::mt19937_64& rng) const {
  const std::size_t c = cfg_.latent_channels, ch = cfg_.hyper_channels;
  for (std::size_t i = 0; i < kStages; ++i) {
    add_conv(ps, rng, "analysis", i, i == 0 ? 3 : c, c, i + 1 < kStages ? 2.0 : 1.0);
  }
  for (std::size_t i = 0; i < kStages; ++i) {
    const bool last = i + 1 == kStages;
    add_tconv(ps, rng, "synthesis", i, c, last ? 3 : c, last ? 1.0 : 2.0, last ? 0.5 : 0.0);
  }
  for (Layer layer : {Layer::object, Layer::background}) {
    add_conv(ps, rng, hyper_stage(layer, "hyper_analysis"), 0, c, ch, 2.0);
    add_conv(ps, rng, hyper_stage(layer, "hyper_analysis"), 1, ch, ch, 1.0);
    add_tconv(ps, rng, hyper_stage(layer, "hyper_synthesis"), 0, ch, ch, 2.0);
    add_tconv(ps, rng, hyper_stage(layer, "hyper_synthesis"), 1, ch, 2 * c, 1.0);
  }
}

Var CodecNetworks::analyze(Graph& g, const ParameterSet& ps, Var image) const {
  const Tensor& v = g.value(image);
  expect(v.rank() == 4 && v.dim(1) == 3, "analyze: expected N×3×H×W, got " + shape_string(v.shape()));
  expect(v.dim(2) % kLatentStride == 0 && v.dim(3) % kLatentStride == 0 && v.dim(2) > 0 && v.dim(3) > 0,
         "analyze: image size " + std::to_string(v.dim(3)) + "x" + std::to_string(v.dim(2)) +
             " is not divisible by 16");
  Var x = image;
  for (std::size_t i = 0; i < kStages; ++i) {
    x = down(g, ps, "analysis", i, x);
    if (i + 1 < kStages) x = ops::leaky_relu(g, x, kSlope);
  }
  return x;
}

Var CodecNetworks::synthesize(Graph& g, const ParameterSet& ps, Var latents) const {
  const Tensor& v = g.value(latents);
  expect(v.rank() == 4 && v.dim(1) == cfg_.latent_channels,
         "synthesize: expected N×" + std::to_string(cfg_.latent_channels) + "×h×w, got " +
             shape_string(v.shape()));
  Var x = latents;
  for (std::size_t i = 0; i < kStages; ++i) {
    x = up(g, ps, "synthesis", i, x);
    if (i + 1 < kStages) x = ops::leaky_relu(g, x, kSlope);
  }
  return ops::clamp(g, x, 0.0, 1.0);
}

Var CodecNetworks::hyper_analyze(Graph& g, const ParameterSet& ps, Var latents, Layer layer) const {
  const Tensor& v = g.value(latents);
  expect(v.rank() == 4 && v.dim(1) == cfg_.latent_channels,
         "hyper_analyze: unexpected latent shape " + shape_string(v.shape()));
  expect(v.dim(2) % kHyperStride == 0 && v.dim(3) % kHyperStride == 0,
         "hyper_analyze: latent extent " + std::to_string(v.dim(3)) + "x" +
             std::to_string(v.dim(2)) + " is not divisible by 4");
  const std::string stage = hyper_stage(layer, "hyper_analysis");
  return down(g, ps, stage, 1, ops::leaky_relu(g, down(g, ps, stage, 0, latents), kSlope));
}

Var CodecNetworks::hyper_synthesize(Graph& g, const ParameterSet& ps, Var hyper, Layer layer) const {
  const Tensor& v = g.value(hyper);
  expect(v.rank() == 4 && v.dim(1) == cfg_.hyper_channels,
         "hyper_synthesize: unexpected hyper shape " + shape_string(v.shape()));
  const std::string stage = hyper_stage(layer, "hyper_synthesis");
  return up(g, ps, stage, 1, ops::leaky_relu(g, up(g, ps, stage, 0, hyper), kSlope));
}

Tensor CodecNetworks::analyze(const ParameterSet& ps, const Tensor& image) const {
  return run(image, [&](Graph& g, Var x) { return analyze(g, ps, x); });
}

Tensor CodecNetworks::synthesize(const ParameterSet& ps, const Tensor& latents) const {
  return run(latents, [&](Graph& g, Var x) { return synthesize(g, ps, x); });
}

Tensor CodecNetworks::hyper_analyze(const ParameterSet& ps, const Tensor& latents, Layer layer) const {
  return run(latents, [&](Graph& g, Var x) { return hyper_analyze(g, ps, x, layer); });
}

Tensor CodecNetworks::hyper_synthesize(const ParameterSet& ps, const Tensor& hyper, Layer layer) const {
  return run(hyper, [&](Graph& g, Var x) { return hyper_synthesize(g, ps, x, layer); });
}

}  // namespace obic
