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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "obic/corpus.hpp"
#include "obic/error.hpp"
#include "obic/msssim.hpp"
#include "obic/pipeline.hpp"

namespace obic {
namespace {

const CodecConfig kSmall{8, 4};

class PipelineTest : public ::testing::Test {
 protected:
  Model model_{kSmall, 11};
  Sample sample_ = synthesize_sample(64, 5);
};

TEST_F(PipelineTest, LatentsSurviveCodingExactly) {
  const EncodeResult enc = encode_image(model_, sample_.image, sample_.mask);
  const DecodedLatents dec = decode_latents(model_, enc.bytes);
  EXPECT_TRUE(dec.object_present);
  EXPECT_TRUE(dec.background_present);
  EXPECT_EQ(dec.object, enc.object.latents);
  EXPECT_EQ(dec.background, enc.background.latents);
}

TEST_F(PipelineTest, InactivePositionsAreZero) {
  const EncodeResult enc = encode_image(model_, sample_.image, sample_.mask);
  const LatentMask& m = enc.container.mask;
  for (std::size_t c = 0; c < kSmall.latent_channels; ++c) {
    for (std::size_t y = 0; y < m.height; ++y) {
      for (std::size_t x = 0; x < m.width; ++x) {
        if (m.at(y, x)) EXPECT_EQ(enc.background.latents.at(0, c, y, x), 0.0);
        else EXPECT_EQ(enc.object.latents.at(0, c, y, x), 0.0);
      }
    }
  }
}

TEST_F(PipelineTest, DecodeKeepsDimensionsAndIsDeterministic) {
  const EncodeResult a = encode_image(model_, sample_.image, sample_.mask);
  const EncodeResult b = encode_image(model_, sample_.image, sample_.mask, {.parallel = false});
  EXPECT_EQ(a.bytes, b.bytes);
  const Tensor r1 = decode_image(model_, a.bytes);
  const Tensor r2 = decode_image(model_, a.bytes);
  EXPECT_EQ(r1.shape(), sample_.image.shape());
  EXPECT_EQ(r1, r2);
}

TEST_F(PipelineTest, AllBackgroundMaskLeavesObjectStreamsEmpty) {
  const PixelMask none(64, 64, 0);
  const EncodeResult enc = encode_image(model_, sample_.image, none);
  EXPECT_TRUE(enc.container.segment(Segment::obj_hyper).empty());
  EXPECT_TRUE(enc.container.segment(Segment::obj_latent).empty());
  EXPECT_EQ(decode_layer(model_, enc.bytes, Layer::background), decode_image(model_, enc.bytes));
}

TEST_F(PipelineTest, LayerDecodeEqualsDecodeOfExtract) {
  const EncodeResult enc = encode_image(model_, sample_.image, sample_.mask);
  const auto extracted = extract_substream(enc.bytes, Layer::object);
  EXPECT_EQ(decode_layer(model_, enc.bytes, Layer::object), decode_image(model_, extracted));
  const DecodedLatents full = decode_latents(model_, enc.bytes);
  const DecodedLatents part = decode_latents(model_, extracted);
  EXPECT_FALSE(part.background_present);
  EXPECT_EQ(part.object, full.object);
  EXPECT_EQ(part.background, Tensor(full.background.shape()));
}

TEST_F(PipelineTest, DecoderReproducesEncoderTables) {
  const EncodeResult enc = encode_image(model_, sample_.image, sample_.mask, {.record_tables = true});
  const DecodedLatents dec = decode_latents(model_, enc.bytes, true);
  EXPECT_FALSE(enc.object.table_hashes.empty());
  EXPECT_EQ(dec.table_hashes[0], enc.object.table_hashes);
  EXPECT_EQ(dec.table_hashes[1], enc.background.table_hashes);
}

TEST_F(PipelineTest, CodedSizeTracksEstimate) {
  const EncodeResult enc = encode_image(model_, sample_.image, sample_.mask);
  for (Layer l : {Layer::object, Layer::background}) {
    const LayerCode& c = enc.layer(l);
    EXPECT_LE(8.0 * c.hyper.size(), c.hyper_bits_estimate * 1.01 + 256);
    EXPECT_LE(8.0 * c.latent.size(), c.latent_bits_estimate * 1.01 + 256);
  }
}

TEST_F(PipelineTest, RejectsForeignModel) {
  const EncodeResult enc = encode_image(model_, sample_.image, sample_.mask);
  const Model other(kSmall, 12);
  EXPECT_THROW(decode_image(other, enc.bytes), ModelMismatchError);
}

TEST_F(PipelineTest, PixelDomainAndContextFreeModesDecode) {
  for (const EncodeOptions opt : {EncodeOptions{.domain = MaskingDomain::pixel},
                                  EncodeOptions{.autoregressive = false}}) {
    const EncodeResult enc = encode_image(model_, sample_.image, sample_.mask, opt);
    EXPECT_EQ(enc.container.header.domain, opt.domain);
    EXPECT_EQ(enc.container.header.autoregressive, opt.autoregressive);
    const DecodedLatents dec = decode_latents(model_, enc.bytes);
    EXPECT_EQ(dec.object, enc.object.latents);
    EXPECT_EQ(dec.background, enc.background.latents);
  }
}

TEST_F(PipelineTest, OddLatentGridIsPaddedForHyperPath) {
  const Sample s = synthesize_sample(80, 9);
  const EncodeResult enc = encode_image(model_, s.image, s.mask);
  EXPECT_EQ(enc.container.mask.height, 5u);
  const DecodedLatents dec = decode_latents(model_, enc.bytes);
  EXPECT_EQ(dec.merged(), merge_latents(enc.object.latents, enc.background.latents));
}

TEST_F(PipelineTest, RejectsMismatchedMask) {
  EXPECT_THROW(encode_image(model_, sample_.image, PixelMask(32, 64)), ShapeError);
}

TEST_F(PipelineTest, CheckpointRoundTripKeepsModelId) {
  const auto path = std::filesystem::temp_directory_path() / "obic_pipeline_model.obicw";
  model_.save(path);
  const Model back = Model::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.id(), model_.id());
  const EncodeResult enc = encode_image(model_, sample_.image, sample_.mask);
  EXPECT_EQ(decode_image(back, enc.bytes), decode_image(model_, enc.bytes));
}

TEST_F(PipelineTest, EvaluationAccounting) {
  const EncodeResult enc = encode_image(model_, sample_.image, sample_.mask);
  const EvalReport r = evaluate(model_, sample_.image, enc.bytes);
  EXPECT_EQ(r.bpp_total, 8.0 * enc.bytes.size() / (64.0 * 64.0));
  EXPECT_EQ(r.bpp_overhead + r.bpp_obj + r.bpp_bkg, r.bpp_total);
  EXPECT_GE(r.msssim, 0.0);
  EXPECT_LE(r.msssim, 1.0);
  EXPECT_EQ(r.clip_count, enc.clip_count);
}

TEST(Metrics, IdenticalImages) {
  const Sample s = synthesize_sample(64, 1);
  EXPECT_TRUE(std::isinf(psnr(s.image, s.image)));
  EXPECT_NEAR(msssim(s.image, s.image), 1.0, 1e-12);
}

TEST(RdLoss, PerfectReconstructionAtZeroRateIsZero) {
  EXPECT_EQ(rd_loss(1.0, 0.0, 0.0, RDConfig{}), 0.0);
}

TEST(RdLoss, WorkedExample) {
  RDConfig cfg;
  cfg.lambda = 1.0;
  cfg.a1 = 2.0;
  cfg.a2 = 1.0;
  EXPECT_NEAR(rd_loss(0.9, 0.04, 0.03, cfg), 0.2, 1e-15);
}

TEST(RdLoss, BackgroundRateSlopeIsA1) {
  RDConfig cfg;
  cfg.a1 = 3.0;
  const double h = 0.125;
  EXPECT_EQ((rd_loss(0.8, 0.1, 0.5 + h, cfg) - rd_loss(0.8, 0.1, 0.5, cfg)) / h, 3.0);
}

TEST(RdLoss, ImageOverloadNormalisesToBpp) {
  const Sample s = synthesize_sample(64, 2);
  RDConfig cfg;
  EXPECT_NEAR(rd_loss(s.image, s.image, 4096.0, 2 * 4096.0, cfg), cfg.a2 * 1.0 + cfg.a1 * 2.0, 1e-12);
  EXPECT_THROW(rd_loss(NAN, 0.0, 0.0, cfg), Error);
}

TEST(RdConfigTest, Validation) {
  RDConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.a1 = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.allow_a1_not_above_a2 = true;
  EXPECT_NO_THROW(cfg.validate());
  cfg.crop_size = 96;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.crop_size = 64;
  cfg.a2 = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Schedule, StepsDownAfterEpochTen) {
  const RDConfig cfg;
  EXPECT_EQ(learning_rate(cfg, 1), 1e-5);
  EXPECT_EQ(learning_rate(cfg, 10), 1e-5);
  EXPECT_EQ(learning_rate(cfg, 11), 5e-6);
  EXPECT_EQ(learning_rate(cfg, 40), 5e-6);
}

TEST(Training, RejectsEmptyCorpus) {
  Model m(kSmall);
  EXPECT_THROW(train(m, {}, RDConfig{}), Error);
}

TEST(Training, LogsEveryStepWithScheduledRate) {
  Model m(kSmall);
  std::vector<Sample> corpus = {synthesize_sample(64, 1), synthesize_sample(64, 2)};
  RDConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 2;
  cfg.warm_start_steps = 2;
  std::size_t calls = 0;
  const auto log = train(m, corpus, cfg, [&](const StepLog&) { ++calls; });
  ASSERT_EQ(log.size(), 14u);
  EXPECT_EQ(calls, 14u);
  EXPECT_EQ(log[0].phase, "warm-start");
  EXPECT_EQ(log[0].lr, cfg.warm_start_lr);
  for (std::size_t i = 2; i < log.size(); ++i) {
    EXPECT_EQ(log[i].epoch, i - 1);
    EXPECT_EQ(log[i].lr, log[i].epoch <= 10 ? 1e-5 : 5e-6);
  }
}

TEST(Training, WarmStartCosineAnneal) {
  RDConfig cfg;
  cfg.warm_start_steps = 5;
  EXPECT_EQ(warm_start_learning_rate(cfg, 3), cfg.warm_start_lr);
  cfg.warm_start_lr_final = 1e-5;
  EXPECT_DOUBLE_EQ(warm_start_learning_rate(cfg, 1), cfg.warm_start_lr);
  EXPECT_DOUBLE_EQ(warm_start_learning_rate(cfg, 3), 0.5 * (cfg.warm_start_lr + 1e-5));
  EXPECT_DOUBLE_EQ(warm_start_learning_rate(cfg, 5), 1e-5);
  EXPECT_GT(warm_start_learning_rate(cfg, 2), warm_start_learning_rate(cfg, 4));
}

// Gradient of the full noise-mode loss against central differences, with the
// quantisation noise held fixed by reseeding.
TEST(Training, LossGradientSpotCheck) {
  Model m(kSmall, 3);
  const Sample s = synthesize_sample(64, 4);
  const std::vector<const Sample*> batch = {&s};
  RDConfig cfg;
  auto loss = [&] {
    std::mt19937_64 rng(21);
    return rd_step(m, batch, cfg, rng, false).loss;
  };
  m.params().zero_grad();
  std::mt19937_64 rng(21);
  rd_step(m, batch, cfg, rng, true);
  const double eps = 1e-6;
  int checked = 0;
  for (const char* name : {"analysis.1.weight", "synthesis.3.bias", "obj.hyper_analysis.0.weight",
                           "bkg.hyper_synthesis.1.weight", "obj.conditional.fusion1.bias",
                           "bkg.factorized.log_scale", "obj.conditional.context.weight"}) {
    Parameter& p = m.params().at(name);
    for (std::size_t i = 0; i < p.value.numel(); i += std::max<std::size_t>(1, p.value.numel() / 4)) {
      const double keep = p.value[i];
      p.value[i] = keep + eps;
      const double up = loss();
      p.value[i] = keep - eps;
      const double down = loss();
      p.value[i] = keep;
      const double numeric = (up - down) / (2 * eps);
      const double denom = std::max({std::abs(numeric), std::abs(p.grad[i]), 1e-3});
      EXPECT_LT(std::abs(numeric - p.grad[i]) / denom, 1e-4) << name << "[" << i << "]";
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

}  // namespace
}  // namespace obic
