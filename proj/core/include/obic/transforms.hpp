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

#include <cstddef>
#include <random>
#include <string>

#include "obic/graph.hpp"
#include "obic/masking.hpp"

namespace obic {

struct CodecConfig {
  std::size_t latent_channels = 32;
  std::size_t hyper_channels = 16;
};

constexpr std::size_t kLatentStride = 16;
constexpr std::size_t kHyperStride = 4;

// Shared analysis/synthesis transforms plus one hyper analysis/synthesis pair
// per layer. Parameters live in a ParameterSet; the networks only hold
// geometry and naming.
class CodecNetworks {
 public:
  explicit CodecNetworks(CodecConfig cfg = {});

  void register_parameters(ParameterSet& params, std::mt19937_64& rng) const;

  // image: N×3×H×W with H, W divisible by 16 -> N×C×H/16×W/16.
  Var analyze(Graph& g, const ParameterSet& params, Var image) const;
  // latents: N×C×h×w -> N×3×16h×16w, clamped to [0, 1].
  Var synthesize(Graph& g, const ParameterSet& params, Var latents) const;
  // layer latents: N×C×h×w with h, w divisible by 4 -> N×C_h×h/4×w/4.
  Var hyper_analyze(Graph& g, const ParameterSet& params, Var latents, Layer layer) const;
  // N×C_h×a×b -> N×2C×4a×4b.
  Var hyper_synthesize(Graph& g, const ParameterSet& params, Var hyper, Layer layer) const;

  // Graph-free conveniences for inference.
  Tensor analyze(const ParameterSet& params, const Tensor& image) const;
  Tensor synthesize(const ParameterSet& params, const Tensor& latents) const;
  Tensor hyper_analyze(const ParameterSet& params, const Tensor& latents, Layer layer) const;
  Tensor hyper_synthesize(const ParameterSet& params, const Tensor& hyper, Layer layer) const;

  const CodecConfig& config() const noexcept { return cfg_; }

  static std::string layer_prefix(Layer layer) { return layer_name(layer); }

 private:
  CodecConfig cfg_;
};

}  // namespace obic
