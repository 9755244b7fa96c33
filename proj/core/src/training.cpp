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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "obic/error.hpp"
#include "obic/msssim.hpp"
#include "obic/ops.hpp"
#include "obic/pipeline.hpp"

namespace obic {
namespace {

struct Batch {
  Tensor images;  // N×3×S×S
  std::vector<PixelMask> pixel_masks;
  std::vector<LatentMask> latent_masks;
};

Batch make_batch(const std::vector<const Sample*>& samples, std::size_t crop, std::mt19937_64& rng) {
  const std::size_t n = samples.size();
  Batch b{Tensor({n, 3, crop, crop}), {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = *samples[i];
    const std::size_t h = s.image.dim(1), w = s.image.dim(2);
    if (h < crop || w < crop) {
      throw ShapeError("training image " + std::to_string(w) + "x" + std::to_string(h) +
                       " is smaller than the crop");
    }
    const std::size_t oy = rng() % (h - crop + 1), ox = rng() % (w - crop + 1);
    PixelMask pm(crop, crop);
    for (std::size_t y = 0; y < crop; ++y) {
      for (std::size_t x = 0; x < crop; ++x) {
        for (std::size_t c = 0; c < 3; ++c) b.images.at(i, c, y, x) = s.image[(c * h + oy + y) * w + ox + x];
        pm.at(y, x) = s.mask.at(oy + y, ox + x);
      }
    }
    b.latent_masks.push_back(downsample_mask(pm, kLatentStride));
    b.pixel_masks.push_back(std::move(pm));
  }
  return b;
}

// N×C×h×w selector for the cells of `layer`.
Tensor layer_selector(const std::vector<LatentMask>& masks, Layer layer, std::size_t channels) {
  const std::size_t n = masks.size(), h = masks[0].height, w = masks[0].width;
  Tensor t({n, channels, h, w});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) t.at(i, c, y, x) = masks[i].active(layer, y, x) ? 1.0 : 0.0;
      }
    }
  }
  return t;
}

// Hyper bits count only for samples in which the layer is present, matching
// the coder, which writes nothing for an absent layer.
Tensor presence_selector(const std::vector<LatentMask>& masks, Layer layer, const Shape& hyper_shape) {
  Tensor t(hyper_shape);
  const std::size_t per = shape_numel(hyper_shape) / hyper_shape[0];
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const double on = masks[i].active_count(layer) > 0 ? 1.0 : 0.0;
    std::fill_n(t.values().begin() + static_cast<std::ptrdiff_t>(i * per), per, on);
  }
  return t;
}

Tensor pixel_selected(const Tensor& images, const std::vector<PixelMask>& masks, Layer layer) {
  Tensor out = images;
  const std::size_t h = images.dim(2), w = images.dim(3);
  for (std::size_t i = 0; i < images.dim(0); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          if ((masks[i].at(y, x) != 0) != (layer == Layer::object)) out.at(i, c, y, x) = 0.0;
        }
      }
    }
  }
  return out;
}

class Adam {
 public:
  void step(ParameterSet& ps, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (auto& [name, p] : ps) {
      if (!p.requires_grad) continue;
      auto& [m, v] = moments_[name];
      if (m.empty()) {
        m.assign(p.value.numel(), 0.0);
        v.assign(p.value.numel(), 0.0);
      }
      auto val = p.value.values();
      auto grad = p.grad.values();
      for (std::size_t i = 0; i < val.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1 - kBeta1) * grad[i];
        v[i] = kBeta2 * v[i] + (1 - kBeta2) * grad[i] * grad[i];
        val[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEpsilon);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEpsilon = 1e-8;
  std::size_t t_ = 0;
  std::unordered_map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

class BatchSampler {
 public:
  BatchSampler(const std::vector<Sample>& corpus, std::mt19937_64& rng) : corpus_(corpus), rng_(rng) {}

  std::vector<const Sample*> next(std::size_t n) {
    std::vector<const Sample*> out;
    while (out.size() < n) {
      if (cursor_ == order_.size()) {
        order_.resize(corpus_.size());
        std::iota(order_.begin(), order_.end(), 0);
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
      }
      out.push_back(&corpus_[order_[cursor_++]]);
    }
    return out;
  }

 private:
  const std::vector<Sample>& corpus_;
  std::mt19937_64& rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace

void RDConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("config: lambda must be >= 0");
  if (!(a1 > 0.0) || !(a2 > 0.0)) throw Error("config: a1 and a2 must be positive");
  if (!(a1 > a2) && !allow_a1_not_above_a2) {
    throw Error("config: a1 must exceed a2 to favour the object layer (set allow_a1_not_above_a2 to override)");
  }
  if (!(lr_initial > 0.0) || !(lr_after > 0.0) || !(warm_start_lr > 0.0)) {
    throw Error("config: learning rates must be positive");
  }
  if (batch_size == 0) throw Error("config: batch_size must be positive");
  if (crop_size == 0 || crop_size % (kLatentStride * kHyperStride) != 0) {
    throw Error("config: crop_size must be a positive multiple of 64");
  }
}

double warm_start_learning_rate(const RDConfig& cfg, std::size_t step) {
  if (cfg.warm_start_lr_final < 0.0 || cfg.warm_start_steps <= 1) return cfg.warm_start_lr;
  const double t = static_cast<double>(step - 1) / static_cast<double>(cfg.warm_start_steps - 1);
  return cfg.warm_start_lr_final +
         0.5 * (cfg.warm_start_lr - cfg.warm_start_lr_final) * (1.0 + std::cos(std::numbers::pi * t));
}

double learning_rate(const RDConfig& cfg, std::size_t epoch) {
  return epoch <= cfg.lr_step_epoch ? cfg.lr_initial : cfg.lr_after;
}

double rd_loss(double distortion_msssim, double rate_obj_bpp, double rate_bkg_bpp, const RDConfig& cfg) {
  for (double v : {distortion_msssim, rate_obj_bpp, rate_bkg_bpp}) {
    if (!std::isfinite(v)) throw Error("rd_loss: non-finite input");
  }
  return cfg.lambda * (1.0 - distortion_msssim) + cfg.a1 * rate_bkg_bpp + cfg.a2 * rate_obj_bpp;
}

double rd_loss(const Tensor& input, const Tensor& output, double rate_obj_bits, double rate_bkg_bits,
               const RDConfig& cfg) {
  const double pixels = static_cast<double>(input.dim(input.rank() - 1) * input.dim(input.rank() - 2));
  return rd_loss(msssim(input, output), rate_obj_bits / pixels, rate_bkg_bits / pixels, cfg);
}

RDTerms rd_step(Model& model, const std::vector<const Sample*>& samples, const RDConfig& cfg,
                std::mt19937_64& rng, bool accumulate) {
  const Batch b = make_batch(samples, cfg.crop_size, rng);
  const ParameterSet& ps = model.params();
  const CodecNetworks& net = model.networks();
  const std::size_t n = samples.size(), c = model.config().latent_channels;
  const double pixels = static_cast<double>(n * cfg.crop_size * cfg.crop_size);

  Graph g;
  const Var x = g.constant(b.images);
  Var f_layer[2];
  Tensor select[2];
  const Layer layers[2] = {Layer::object, Layer::background};
  for (int i = 0; i < 2; ++i) select[i] = layer_selector(b.latent_masks, layers[i], c);
  if (cfg.domain == MaskingDomain::feature) {
    const Var f = net.analyze(g, ps, x);
    for (int i = 0; i < 2; ++i) f_layer[i] = ops::mul_constant(g, f, select[i]);
  } else {
    for (int i = 0; i < 2; ++i) {
      const Var xi = g.constant(pixel_selected(b.images, b.pixel_masks, layers[i]));
      f_layer[i] = ops::mul_constant(g, net.analyze(g, ps, xi), select[i]);
    }
  }

  Var rate[2], y_tilde[2];
  for (int i = 0; i < 2; ++i) {
    const Layer layer = layers[i];
    const Var z = net.hyper_analyze(g, ps, f_layer[i], layer);
    const Var z_tilde = quantize_noise(g, z, rng);
    const Var pz = model.factorized(layer).likelihood(g, ps, z_tilde);
    const Var bits_z = ops::sum(
        g, ops::mul_constant(g, ops::neg_log2(g, pz), presence_selector(b.latent_masks, layer, g.value(z).shape())));
    const Var ctx = net.hyper_synthesize(g, ps, z_tilde, layer);
    y_tilde[i] = ops::mul_constant(g, quantize_noise(g, f_layer[i], rng), select[i]);
    const ConditionalModel& cm = model.conditional(layer);
    const auto params = cm.parameters(g, ps, ctx, y_tilde[i], cfg.autoregressive);
    const Var py = cm.likelihood(g, y_tilde[i], params);
    const Var bits_y = ops::sum(g, ops::mul_constant(g, ops::neg_log2(g, py), select[i]));
    rate[i] = ops::scale(g, ops::add(g, bits_z, bits_y), 1.0 / pixels);
  }
  const Var x_hat = net.synthesize(g, ps, ops::add(g, y_tilde[0], y_tilde[1]));
  const Var d = ops::scale(g, ops::sum(g, ops::msssim(g, x_hat, x)), 1.0 / static_cast<double>(n));
  const Var loss = ops::add(
      g, ops::scale(g, ops::add_scalar(g, ops::scale(g, d, -1.0), 1.0), cfg.lambda),
      ops::add(g, ops::scale(g, rate[1], cfg.a1), ops::scale(g, rate[0], cfg.a2)));

  RDTerms t{g.value(loss)[0], g.value(d)[0], g.value(rate[0])[0], g.value(rate[1])[0]};
  if (!std::isfinite(t.loss)) throw DivergenceError("training loss is not finite");
  if (accumulate) {
    g.backward(loss);
    g.accumulate_grads(model.params());
  }
  return t;
}

std::vector<StepLog> train(Model& model, const std::vector<Sample>& corpus, const RDConfig& cfg,
                           const StepCallback& on_step) {
  cfg.validate();
  if (corpus.empty()) throw Error("train: corpus is empty");
  std::mt19937_64 rng(cfg.seed);
  BatchSampler sampler(corpus, rng);
  const std::size_t per_epoch =
      cfg.steps_per_epoch ? cfg.steps_per_epoch : (corpus.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<StepLog> log;

  auto run_step = [&](Adam& opt, const char* phase, std::size_t step, std::size_t epoch, double lr) {
    model.params().zero_grad();
    RDTerms t;
    try {
      t = rd_step(model, sampler.next(cfg.batch_size), cfg, rng, true);
    } catch (const NonFiniteError& e) {
      throw DivergenceError(std::string("training diverged at ") + phase + " step " +
                            std::to_string(step) + ": " + e.what());
    }
    opt.step(model.params(), lr);
    log.push_back({phase, step, epoch, lr, t.loss, t.msssim, t.rate_obj_bpp, t.rate_bkg_bpp});
    if (on_step) on_step(log.back());
  };

  if (cfg.warm_start_steps > 0) {
    Adam warm;
    for (std::size_t s = 1; s <= cfg.warm_start_steps; ++s) {
      run_step(warm, "warm-start", s, 0, warm_start_learning_rate(cfg, s));
    }
  }
  Adam opt;
  std::size_t step = 0;
  model.info().lambda = cfg.lambda;
  model.info().a1 = cfg.a1;
  model.info().a2 = cfg.a2;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = learning_rate(cfg, epoch);
    for (std::size_t k = 0; k < per_epoch; ++k) run_step(opt, "finetune", ++step, epoch, lr);
    if (!cfg.checkpoint_dir.empty()) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      model.save(cfg.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".obicw"));
    }
  }
  round_to_float(model.params());
  return log;
}

double smoothed_loss(const std::vector<StepLog>& log, std::size_t first, std::size_t last) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const StepLog& s : log) {
    if (s.phase == "finetune" && s.step >= first && s.step <= last) {
      sum += s.loss;
      ++count;
    }
  }
  if (count == 0) throw Error("smoothed_loss: empty window");
  return sum / static_cast<double>(count);
}

}  // namespace obic
