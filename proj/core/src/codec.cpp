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

#include <future>

#include "obic/error.hpp"
#include "obic/pipeline.hpp"

namespace obic {
namespace {

constexpr std::size_t kPadMultiple = kHyperStride;

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

// Zero-pads N×C×h×w on the bottom/right to extents divisible by 4 so odd latent
// grids can still pass through the hyper path.
Tensor pad_latents(const Tensor& t) {
  const std::size_t h = t.dim(2), w = t.dim(3);
  const std::size_t ph = round_up(h, kPadMultiple), pw = round_up(w, kPadMultiple);
  if (ph == h && pw == w) return t;
  Tensor out({t.dim(0), t.dim(1), ph, pw});
  for (std::size_t n = 0; n < t.dim(0); ++n) {
    for (std::size_t c = 0; c < t.dim(1); ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) out.at(n, c, y, x) = t.at(n, c, y, x);
      }
    }
  }
  return out;
}

Tensor crop_latents(const Tensor& t, std::size_t h, std::size_t w) {
  if (t.dim(2) == h && t.dim(3) == w) return t;
  Tensor out({t.dim(0), t.dim(1), h, w});
  for (std::size_t n = 0; n < t.dim(0); ++n) {
    for (std::size_t c = 0; c < t.dim(1); ++c) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) out.at(n, c, y, x) = t.at(n, c, y, x);
      }
    }
  }
  return out;
}

Tensor hyper_context(const Model& model, const Tensor& zhat, Layer layer, std::size_t h,
                     std::size_t w) {
  return crop_latents(model.networks().hyper_synthesize(model.params(), zhat, layer), h, w);
}

std::vector<std::uint8_t> encode_hyper(const Model& model, Layer layer, const Tensor& zhat,
                                       double& bits) {
  const auto& fm = model.factorized(layer);
  const std::vector<CdfTable> tables = fm.tables(model.params());
  const std::size_t ch = zhat.dim(1), h = zhat.dim(2), w = zhat.dim(3);
  RangeEncoder enc;
  bits = 0.0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        const int q = static_cast<int>(zhat.at(0, c, y, x));
        enc.encode(symbol_of(q), tables[c]);
        bits -= std::log2(fm.probability(model.params(), c, q));
      }
    }
  }
  return enc.finish();
}

Tensor decode_hyper(const Model& model, Layer layer, std::span<const std::uint8_t> bytes,
                    std::size_t h, std::size_t w) {
  const auto& fm = model.factorized(layer);
  const std::vector<CdfTable> tables = fm.tables(model.params());
  const std::size_t ch = model.config().hyper_channels;
  Tensor zhat({1, ch, h, w});
  RangeDecoder dec(bytes);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) zhat.at(0, c, y, x) = value_of(dec.decode(tables[c]));
    }
  }
  return zhat;
}

LayerCode encode_layer(const Model& model, Layer layer, const Tensor& f_layer, const LatentMask& mask,
                       const EncodeOptions& opt) {
  LayerCode out;
  const std::size_t c = model.config().latent_channels;
  const std::size_t h = mask.height, w = mask.width;
  out.latents = Tensor({1, c, h, w});
  if (mask.active_count(layer) == 0) return out;

  const ParameterSet& ps = model.params();
  const RoundedLatents z = quantize_round(model.networks().hyper_analyze(ps, pad_latents(f_layer), layer));
  out.hyper_latents = z.values;
  out.clip_count += z.clip_count;
  out.hyper = encode_hyper(model, layer, z.values, out.hyper_bits_estimate);

  const Tensor ctx = hyper_context(model, z.values, layer, h, w);
  const RoundedLatents y = quantize_round(f_layer);
  out.clip_count += y.clip_count;
  for (std::size_t yy = 0; yy < h; ++yy) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      if (!mask.active(layer, yy, xx)) continue;
      for (std::size_t k = 0; k < c; ++k) out.latents.at(0, k, yy, xx) = y.values.at(0, k, yy, xx);
    }
  }

  const ConditionalModel& cm = model.conditional(layer);
  std::vector<double> mean(c), scale(c);
  RangeEncoder enc;
  for (std::size_t yy = 0; yy < h; ++yy) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      if (!mask.active(layer, yy, xx)) continue;
      cm.parameters_at(ps, ctx, out.latents, yy, xx, opt.autoregressive, mean, scale);
      for (std::size_t k = 0; k < c; ++k) {
        const int q = static_cast<int>(out.latents.at(0, k, yy, xx));
        const CdfTable table = gaussian_table(mean[k], scale[k]);
        if (opt.record_tables) out.table_hashes.push_back(table.hash());
        enc.encode(symbol_of(q), table);
        out.latent_bits_estimate -= std::log2(gaussian_bin_probability(q, mean[k], scale[k]));
      }
    }
  }
  out.latent = enc.finish();
  return out;
}

Tensor decode_layer_latents(const Model& model, Layer layer, const Container& cont, bool record,
                            std::vector<std::uint64_t>& hashes) {
  const std::size_t c = model.config().latent_channels;
  const LatentMask& mask = cont.mask;
  const std::size_t h = mask.height, w = mask.width;
  Tensor latents({1, c, h, w});
  const Tensor zhat = decode_hyper(model, layer, cont.segment(hyper_segment(layer)),
                                   round_up(h, kPadMultiple) / kHyperStride,
                                   round_up(w, kPadMultiple) / kHyperStride);
  const Tensor ctx = hyper_context(model, zhat, layer, h, w);
  const ConditionalModel& cm = model.conditional(layer);
  std::vector<double> mean(c), scale(c);
  RangeDecoder dec(cont.segment(latent_segment(layer)));
  for (std::size_t yy = 0; yy < h; ++yy) {
    for (std::size_t xx = 0; xx < w; ++xx) {
      if (!mask.active(layer, yy, xx)) continue;
      cm.parameters_at(model.params(), ctx, latents, yy, xx, cont.header.autoregressive, mean, scale);
      for (std::size_t k = 0; k < c; ++k) {
        const CdfTable table = gaussian_table(mean[k], scale[k]);
        if (record) hashes.push_back(table.hash());
        latents.at(0, k, yy, xx) = value_of(dec.decode(table));
      }
    }
  }
  return latents;
}

Tensor select_layer(const Tensor& f, const LatentMask& mask, Layer layer) {
  auto [obj, bkg] = split_latent(f, mask);
  return layer == Layer::object ? std::move(obj) : std::move(bkg);
}

}  // namespace

Model::Model(CodecConfig cfg, std::uint64_t seed) : networks_(cfg) {
  build_models();
  std::mt19937_64 rng(seed);
  networks_.register_parameters(params_, rng);
  for (std::size_t i = 0; i < 2; ++i) {
    factorized_[i].register_parameters(params_);
    conditional_[i].register_parameters(params_, rng);
  }
  round_to_float(params_);
  info_.latent_channels = static_cast<std::uint32_t>(cfg.latent_channels);
  info_.hyper_channels = static_cast<std::uint32_t>(cfg.hyper_channels);
}

Model::Model(Checkpoint checkpoint)
    : networks_(CodecConfig{checkpoint.info.latent_channels, checkpoint.info.hyper_channels}),
      params_(std::move(checkpoint.params)),
      info_(checkpoint.info) {
  build_models();
  Model reference(config(), 1);
  for (const auto& [name, p] : reference.params()) {
    if (!params_.contains(name) || params_.at(name).value.shape() != p.value.shape()) {
      throw ModelMismatchError("checkpoint lacks or misshapes parameter " + name);
    }
  }
  if (params_.size() != reference.params().size()) {
    throw ModelMismatchError("checkpoint has unexpected parameters");
  }
}

void Model::build_models() {
  for (Layer layer : {Layer::object, Layer::background}) {
    const std::string p = layer_name(layer);
    factorized_[index(layer)] = FactorizedModel(p + ".factorized", config().hyper_channels);
    conditional_[index(layer)] = ConditionalModel(p + ".conditional", config().latent_channels);
  }
}

Model Model::load(const std::filesystem::path& path) { return Model(load_checkpoint(path)); }

void Model::save(const std::filesystem::path& path) const { save_checkpoint(path, params_, info_); }

ModelId Model::id() const {
  return model_id(params_, static_cast<std::uint32_t>(config().latent_channels),
                  static_cast<std::uint32_t>(config().hyper_channels));
}

namespace {

void check_inputs(const Tensor& image, const PixelMask& mask) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("encode: expected a 3×H×W image, got " + shape_string(image.shape()));
  }
  if (mask.width != image.dim(2) || mask.height != image.dim(1)) {
    throw ShapeError("encode: mask " + std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                     " does not match image " + std::to_string(image.dim(2)) + "x" +
                     std::to_string(image.dim(1)));
  }
}

std::pair<Tensor, Tensor> layer_latents(const Model& model, const Tensor& image, const PixelMask& mask,
                                        const LatentMask& lmask, MaskingDomain domain) {
  const ParameterSet& ps = model.params();
  if (domain == MaskingDomain::feature) {
    return split_latent(model.networks().analyze(ps, as_batch(image)), lmask);
  }
  auto [img_obj, img_bkg] = pixel_domain_split(image, mask);
  return {select_layer(model.networks().analyze(ps, as_batch(img_obj)), lmask, Layer::object),
          select_layer(model.networks().analyze(ps, as_batch(img_bkg)), lmask, Layer::background)};
}

}  // namespace

std::size_t count_clipping(const Model& model, const Tensor& image, const PixelMask& mask,
                           MaskingDomain domain) {
  check_inputs(image, mask);
  const LatentMask lmask = downsample_mask(mask, kLatentStride);
  const auto [f_obj, f_bkg] = layer_latents(model, image, mask, lmask, domain);
  std::size_t clips = 0;
  for (Layer layer : {Layer::object, Layer::background}) {
    if (lmask.active_count(layer) == 0) continue;
    const Tensor& f = layer == Layer::object ? f_obj : f_bkg;
    clips += quantize_round(f).clip_count;
    clips += quantize_round(model.networks().hyper_analyze(model.params(), pad_latents(f), layer)).clip_count;
  }
  return clips;
}

EncodeResult encode_image(const Model& model, const Tensor& image, const PixelMask& mask,
                          const EncodeOptions& opt) {
  check_inputs(image, mask);
  const LatentMask lmask = downsample_mask(mask, kLatentStride);
  const auto [f_obj, f_bkg] = layer_latents(model, image, mask, lmask, opt.domain);

  EncodeResult r;
  if (opt.parallel) {
    auto obj = std::async(std::launch::async, encode_layer, std::cref(model), Layer::object,
                          std::cref(f_obj), std::cref(lmask), std::cref(opt));
    r.background = encode_layer(model, Layer::background, f_bkg, lmask, opt);
    r.object = obj.get();
  } else {
    r.object = encode_layer(model, Layer::object, f_obj, lmask, opt);
    r.background = encode_layer(model, Layer::background, f_bkg, lmask, opt);
  }
  r.clip_count = r.object.clip_count + r.background.clip_count;

  Container& c = r.container;
  c.header.width = static_cast<std::uint32_t>(image.dim(2));
  c.header.height = static_cast<std::uint32_t>(image.dim(1));
  c.header.latent_channels = static_cast<std::uint16_t>(model.config().latent_channels);
  c.header.hyper_channels = static_cast<std::uint16_t>(model.config().hyper_channels);
  c.header.model_id = model.id();
  c.header.domain = opt.domain;
  c.header.autoregressive = opt.autoregressive;
  c.mask = lmask;
  c.segment(Segment::obj_hyper) = r.object.hyper;
  c.segment(Segment::obj_latent) = r.object.latent;
  c.segment(Segment::bkg_hyper) = r.background.hyper;
  c.segment(Segment::bkg_latent) = r.background.latent;
  r.bytes = write_container(c);
  return r;
}

Tensor DecodedLatents::merged() const { return merge_latents(object, background); }

DecodedLatents decode_latents(const Model& model, std::span<const std::uint8_t> bytes,
                              bool record_tables) {
  DecodedLatents d;
  d.container = read_container(bytes);
  const ContainerHeader& h = d.container.header;
  if (h.latent_channels != model.config().latent_channels ||
      h.hyper_channels != model.config().hyper_channels || h.model_id != model.id()) {
    throw ModelMismatchError("container was produced by a different model");
  }
  const std::size_t c = model.config().latent_channels;
  for (Layer layer : {Layer::object, Layer::background}) {
    const bool present = !d.container.segment(hyper_segment(layer)).empty();
    auto& hashes = d.table_hashes[layer == Layer::object ? 0 : 1];
    Tensor latents = present ? decode_layer_latents(model, layer, d.container, record_tables, hashes)
                             : Tensor({1, c, d.container.mask.height, d.container.mask.width});
    if (layer == Layer::object) {
      d.object = std::move(latents);
      d.object_present = present;
    } else {
      d.background = std::move(latents);
      d.background_present = present;
    }
  }
  return d;
}

Tensor decode_image(const Model& model, std::span<const std::uint8_t> bytes) {
  const DecodedLatents d = decode_latents(model, bytes);
  const Tensor img = model.networks().synthesize(model.params(), d.merged());
  return img.reshaped({img.dim(1), img.dim(2), img.dim(3)});
}

Tensor decode_layer(const Model& model, std::span<const std::uint8_t> bytes, Layer layer) {
  return decode_image(model, extract_substream(bytes, layer));
}

}  // namespace obic
