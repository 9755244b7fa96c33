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
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "obic/checkpoint.hpp"
#include "obic/container.hpp"
#include "obic/corpus.hpp"
#include "obic/entropy.hpp"
#include "obic/masking.hpp"
#include "obic/transforms.hpp"

namespace obic {

// Networks, entropy models and their parameters. Parameter values are kept
// float-representable so a saved checkpoint reproduces the model bit-exactly.
class Model {
 public:
  explicit Model(CodecConfig cfg = {}, std::uint64_t seed = 1);
  explicit Model(Checkpoint checkpoint);

  static Model load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  const CodecNetworks& networks() const noexcept { return networks_; }
  const FactorizedModel& factorized(Layer layer) const { return factorized_[index(layer)]; }
  const ConditionalModel& conditional(Layer layer) const { return conditional_[index(layer)]; }
  const CodecConfig& config() const noexcept { return networks_.config(); }
  CheckpointInfo& info() noexcept { return info_; }
  const CheckpointInfo& info() const noexcept { return info_; }
  ModelId id() const;

 private:
  static std::size_t index(Layer layer) { return layer == Layer::object ? 0 : 1; }
  void build_models();

  CodecNetworks networks_;
  std::array<FactorizedModel, 2> factorized_;
  std::array<ConditionalModel, 2> conditional_;
  ParameterSet params_;
  CheckpointInfo info_;
};

struct EncodeOptions {
  MaskingDomain domain = MaskingDomain::feature;
  bool autoregressive = true;
  bool parallel = true;
  bool record_tables = false;
};

struct LayerCode {
  std::vector<std::uint8_t> hyper;
  std::vector<std::uint8_t> latent;
  double hyper_bits_estimate = 0.0;
  double latent_bits_estimate = 0.0;
  Tensor hyper_latents;  // 1×C_h×h/4×w/4 rounded; empty when the layer is absent
  Tensor latents;        // 1×C×h×w rounded, zero at inactive positions
  std::size_t clip_count = 0;
  std::vector<std::uint64_t> table_hashes;  // latent tables in coding order
};

struct EncodeResult {
  std::vector<std::uint8_t> bytes;
  Container container;
  LayerCode object;
  LayerCode background;
  std::size_t clip_count = 0;

  const LayerCode& layer(Layer l) const { return l == Layer::object ? object : background; }
};

// image: 3×H×W in [0,1] with H, W divisible by 64; mask: W×H.
EncodeResult encode_image(const Model& model, const Tensor& image, const PixelMask& mask,
                          const EncodeOptions& options = {});

// Number of latent and hyper-latent values encode_image would clip.
std::size_t count_clipping(const Model& model, const Tensor& image, const PixelMask& mask,
                           MaskingDomain domain);

struct DecodedLatents {
  Container container;
  Tensor object;      // 1×C×h×w, zero where absent or inactive
  Tensor background;  // 1×C×h×w
  bool object_present = false;
  bool background_present = false;
  std::array<std::vector<std::uint64_t>, 2> table_hashes;  // [obj, bkg]

  Tensor merged() const;
};

// Throws ModelMismatchError when the container was produced by another model.
DecodedLatents decode_latents(const Model& model, std::span<const std::uint8_t> bytes,
                              bool record_tables = false);
// Returns a 3×H×W image in [0,1].
Tensor decode_image(const Model& model, std::span<const std::uint8_t> bytes);
Tensor decode_layer(const Model& model, std::span<const std::uint8_t> bytes, Layer layer);

struct RDConfig {
  double lambda = 8.0;
  double a1 = 2.0;  // background rate weight
  double a2 = 1.0;  // object rate weight
  MaskingDomain domain = MaskingDomain::feature;
  bool autoregressive = true;
  double lr_initial = 1e-5;
  double lr_after = 5e-6;
  std::size_t lr_step_epoch = 10;
  std::size_t epochs = 12;
  std::size_t steps_per_epoch = 0;  // 0: one pass over the corpus
  std::size_t batch_size = 4;
  std::size_t crop_size = 64;
  std::uint64_t seed = 1;
  bool allow_a1_not_above_a2 = false;
  // Optional higher-rate phase run before the scheduled epochs; it stands in
  // for starting from an already trained codec.
  std::size_t warm_start_steps = 0;
  double warm_start_lr = 1e-3;
  // Cosine-annealed from warm_start_lr to this value; negative keeps it constant.
  double warm_start_lr_final = -1.0;
  std::filesystem::path checkpoint_dir;  // empty: no per-epoch checkpoints

  void validate() const;
};

// Scheduled learning rate for a 1-based epoch.
double learning_rate(const RDConfig& cfg, std::size_t epoch);
// Warm-start learning rate for a 1-based step.
double warm_start_learning_rate(const RDConfig& cfg, std::size_t step);

// L = λ(1 − D) + a1·R_bkg + a2·R_obj with rates in bits per pixel.
double rd_loss(double distortion_msssim, double rate_obj_bpp, double rate_bkg_bpp,
               const RDConfig& cfg);
// Rates in bits; normalized by the pixel count of `input`.
double rd_loss(const Tensor& input, const Tensor& output, double rate_obj_bits,
               double rate_bkg_bits, const RDConfig& cfg);

struct StepLog {
  std::string phase;  // "warm-start" or "finetune"
  std::size_t step = 0;  // 1-based within the phase
  std::size_t epoch = 0;  // 1-based; 0 during warm start
  double lr = 0.0;
  double loss = 0.0;
  double msssim = 0.0;
  double rate_obj_bpp = 0.0;
  double rate_bkg_bpp = 0.0;
};

struct RDTerms {
  double loss = 0.0;
  double msssim = 0.0;
  double rate_obj_bpp = 0.0;
  double rate_bkg_bpp = 0.0;
};

// Noise-mode loss for one batch. With `accumulate` the parameter gradients
// are added to model.params(). The rng draws the quantization noise.
RDTerms rd_step(Model& model, const std::vector<const Sample*>& batch, const RDConfig& cfg,
                std::mt19937_64& rng, bool accumulate);

using StepCallback = std::function<void(const StepLog&)>;

// Adam (0.9, 0.999). Throws DivergenceError on a non-finite loss.
std::vector<StepLog> train(Model& model, const std::vector<Sample>& corpus, const RDConfig& cfg,
                           const StepCallback& on_step = {});

// Mean of loss over steps [first, last] (1-based, inclusive).
double smoothed_loss(const std::vector<StepLog>& log, std::size_t first, std::size_t last);

struct EvalReport {
  double bpp_total = 0.0;
  double bpp_obj = 0.0;
  double bpp_bkg = 0.0;
  double bpp_overhead = 0.0;
  double psnr_db = 0.0;  // +inf for identical images
  double msssim = 0.0;
  std::size_t clip_count = 0;
  std::size_t bytes = 0;
};

double psnr(const Tensor& a, const Tensor& b);

// Decodes `container` and compares against `original`. The clip count is
// recomputed from the original and the container's mask.
EvalReport evaluate(const Model& model, const Tensor& original,
                    std::span<const std::uint8_t> container);

}  // namespace obic
