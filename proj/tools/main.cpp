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

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "obic/corpus.hpp"
#include "obic/error.hpp"
#include "obic/image_io.hpp"
#include "obic/pipeline.hpp"
#include "train_config.hpp"
#include "weights.hpp"

namespace {

using namespace obic;
using nlohmann::json;

Layer parse_layer(const std::string& s) {
  if (s == "obj") return Layer::object;
  if (s == "bkg") return Layer::background;
  throw Error("layer must be obj or bkg");
}

json report_json(const EvalReport& r) {
  json j;
  j["bpp_total"] = r.bpp_total;
  j["bpp_obj"] = r.bpp_obj;
  j["bpp_bkg"] = r.bpp_bkg;
  j["bpp_overhead"] = r.bpp_overhead;
  j["psnr_db"] = std::isinf(r.psnr_db) ? json("inf") : json(r.psnr_db);
  j["msssim"] = r.msssim;
  j["clip_count"] = r.clip_count;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-based learned image codec"};
  app.require_subcommand(1);

  std::string in, mask, weights, out, layer_str, corpus, domain = "feature", container;
  std::optional<std::uint32_t> lambda_id;
  std::optional<double> a1, a2;
  bool no_context = false, as_json = false;
  std::vector<std::string> config;
  std::string log_path;
  std::size_t count = 16, size = 64;
  std::uint64_t seed = 1;

  auto* encode = app.add_subcommand("encode", "Compress an image with its object mask");
  encode->add_option("-i,--input", in, "Input image (PNG/PPM)")->required();
  encode->add_option("-m,--mask", mask, "Object mask (PNG/PGM, nonzero = object)")->required();
  encode->add_option("-w,--weights", weights, "Checkpoint file or directory")->required();
  encode->add_option("-o,--output", out, "Output .obic container")->required();
  encode->add_option("--lambda-id", lambda_id, "Operating point index within a weights directory");
  encode->add_option("--a1", a1, "Select a checkpoint trained with this background weight");
  encode->add_option("--a2", a2, "Select a checkpoint trained with this object weight");
  encode->add_option("--mask-domain", domain, "feature or pixel")->check(CLI::IsMember({"feature", "pixel"}));
  encode->add_flag("--no-context", no_context, "Disable the autoregressive context model");

  auto* decode = app.add_subcommand("decode", "Reconstruct an image from a container");
  decode->add_option("-i,--input", in, "Input .obic container")->required();
  decode->add_option("-w,--weights", weights, "Checkpoint file or directory")->required();
  decode->add_option("-o,--output", out, "Output image (.png or .ppm)")->required();
  decode->add_option("--layer", layer_str, "Decode only obj or bkg")->check(CLI::IsMember({"obj", "bkg"}));

  auto* extract = app.add_subcommand("extract", "Cut a single-layer container");
  extract->add_option("-i,--input", in, "Input .obic container")->required();
  extract->add_option("--layer", layer_str, "obj or bkg")->required()->check(CLI::IsMember({"obj", "bkg"}));
  extract->add_option("-o,--output", out, "Output .obic container")->required();

  auto* train_cmd = app.add_subcommand("train", "Rate-distortion training");
  train_cmd->add_option("--corpus", corpus, "Directory of X.png + X_mask.png pairs")->required();
  train_cmd->add_option("--config", config, "key=value settings or a file of them")->expected(0, -1);
  train_cmd->add_option("-o,--output", out, "Output checkpoint")->default_val("weights.obicw");
  train_cmd->add_option("--log", log_path, "Per-step CSV log");

  auto* eval = app.add_subcommand("eval", "Measure rate and quality of a container");
  eval->add_option("-i,--input", in, "Original image")->required();
  eval->add_option("-c,--container", container, "Container to evaluate")->required();
  eval->add_option("-w,--weights", weights, "Checkpoint file or directory")->required();
  eval->add_flag("--json", as_json, "Print a JSON report");

  auto* synth = app.add_subcommand("synth-corpus", "Write a synthetic image+mask corpus");
  synth->add_option("-o,--output", out, "Output directory")->required();
  synth->add_option("--count", count, "Number of samples")->default_val(16);
  synth->add_option("--size", size, "Square image size in pixels")->default_val(64);
  synth->add_option("--seed", seed, "First sample seed")->default_val(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*encode) {
      const Model model = cli::select_model(weights, {lambda_id, a1, a2});
      EncodeOptions opt;
      opt.domain = domain == "pixel" ? MaskingDomain::pixel : MaskingDomain::feature;
      opt.autoregressive = !no_context;
      const Tensor image = load_image(in);
      const EncodeResult r = encode_image(model, image, load_mask(mask), opt);
      write_file(out, r.bytes);
      if (r.clip_count > 0) {
        std::cerr << "warning: " << r.clip_count << " latent values were clipped to the coder alphabet\n";
      }
      std::cerr << "wrote " << r.bytes.size() << " bytes ("
                << 8.0 * r.bytes.size() / (image.dim(1) * image.dim(2)) << " bpp)\n";
    } else if (*decode) {
      const auto bytes = read_file(in);
      const Model model = cli::model_for_container(weights, bytes);
      const Tensor img = layer_str.empty() ? decode_image(model, bytes)
                                           : decode_layer(model, bytes, parse_layer(layer_str));
      save_image(out, img);
    } else if (*extract) {
      write_file(out, extract_substream(read_file(in), parse_layer(layer_str)));
    } else if (*train_cmd) {
      const cli::TrainSettings s = cli::parse_train_settings(config);
      Model model = s.init.empty() ? Model(s.codec, s.init_seed) : Model::load(s.init);
      model.info().lambda_id = s.lambda_id;
      const std::vector<Sample> samples = load_corpus(corpus);
      std::ofstream log;
      if (!log_path.empty()) {
        log.open(log_path);
        log << "phase,step,epoch,lr,loss,msssim,rate_obj_bpp,rate_bkg_bpp\n";
      }
      const auto start = std::chrono::steady_clock::now();
      train(model, samples, s.rd, [&](const StepLog& e) {
        if (log.is_open()) {
          log << e.phase << ',' << e.step << ',' << e.epoch << ',' << e.lr << ',' << e.loss << ','
              << e.msssim << ',' << e.rate_obj_bpp << ',' << e.rate_bkg_bpp << '\n';
        }
        if (e.step % 25 == 0) {
          std::fprintf(stderr, "%s step %zu epoch %zu lr %.1e loss %.5f msssim %.4f R_obj %.4f R_bkg %.4f\n",
                       e.phase.c_str(), e.step, e.epoch, e.lr, e.loss, e.msssim, e.rate_obj_bpp,
                       e.rate_bkg_bpp);
        }
      });
      model.save(out);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::fprintf(stderr, "saved %s after %.1f s\n", out.c_str(), secs);
    } else if (*eval) {
      const auto bytes = read_file(container);
      const Model model = cli::model_for_container(weights, bytes);
      const EvalReport r = evaluate(model, load_image(in), bytes);
      if (as_json) {
        std::cout << report_json(r).dump(2) << "\n";
      } else {
        std::printf("bpp %.5f (obj %.5f, bkg %.5f, overhead %.5f)  PSNR %.3f dB  MS-SSIM %.5f  clipped %zu\n",
                    r.bpp_total, r.bpp_obj, r.bpp_bkg, r.bpp_overhead, r.psnr_db, r.msssim, r.clip_count);
      }
    } else if (*synth) {
      write_corpus(out, count, size, seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
