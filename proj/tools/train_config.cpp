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

#include "train_config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "obic/error.hpp"

namespace obic::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw Error("not a boolean: " + v);
}

void apply(TrainSettings& s, const std::string& key, const std::string& v) {
  using Setter = std::function<void(const std::string&)>;
  RDConfig& rd = s.rd;
  const std::map<std::string, Setter> setters = {
      {"lambda", [&](auto& x) { rd.lambda = std::stod(x); }},
      {"a1", [&](auto& x) { rd.a1 = std::stod(x); }},
      {"a2", [&](auto& x) { rd.a2 = std::stod(x); }},
      {"lambda_id", [&](auto& x) { s.lambda_id = static_cast<std::uint32_t>(std::stoul(x)); }},
      {"mask_domain",
       [&](auto& x) {
         if (x != "feature" && x != "pixel") throw Error("mask_domain must be feature or pixel");
         rd.domain = x == "pixel" ? MaskingDomain::pixel : MaskingDomain::feature;
       }},
      {"context", [&](auto& x) { rd.autoregressive = parse_bool(x); }},
      {"lr_initial", [&](auto& x) { rd.lr_initial = std::stod(x); }},
      {"lr_after", [&](auto& x) { rd.lr_after = std::stod(x); }},
      {"lr_step_epoch", [&](auto& x) { rd.lr_step_epoch = std::stoul(x); }},
      {"epochs", [&](auto& x) { rd.epochs = std::stoul(x); }},
      {"steps_per_epoch", [&](auto& x) { rd.steps_per_epoch = std::stoul(x); }},
      {"batch_size", [&](auto& x) { rd.batch_size = std::stoul(x); }},
      {"crop_size", [&](auto& x) { rd.crop_size = std::stoul(x); }},
      {"seed", [&](auto& x) { rd.seed = std::stoull(x); }},
      {"allow_a1_not_above_a2", [&](auto& x) { rd.allow_a1_not_above_a2 = parse_bool(x); }},
      {"warm_start_steps", [&](auto& x) { rd.warm_start_steps = std::stoul(x); }},
      {"warm_start_lr", [&](auto& x) { rd.warm_start_lr = std::stod(x); }},
      {"warm_start_lr_final", [&](auto& x) { rd.warm_start_lr_final = std::stod(x); }},
      {"checkpoint_dir", [&](auto& x) { rd.checkpoint_dir = x; }},
      {"latent_channels", [&](auto& x) { s.codec.latent_channels = std::stoul(x); }},
      {"hyper_channels", [&](auto& x) { s.codec.hyper_channels = std::stoul(x); }},
      {"init_seed", [&](auto& x) { s.init_seed = std::stoull(x); }},
      {"init", [&](auto& x) { s.init = x; }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw Error("unknown config key: " + key);
  try {
    it->second(v);
  } catch (const std::logic_error&) {
    throw Error("bad value for " + key + ": " + v);
  }
}

void apply_line(TrainSettings& s, const std::string& raw) {
  const std::string line = trim(raw.substr(0, raw.find('#')));
  if (line.empty()) return;
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw Error("expected key=value, got: " + line);
  apply(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

}  // namespace

TrainSettings parse_train_settings(const std::vector<std::string>& items) {
  TrainSettings s;
  for (const std::string& item : items) {
    if (item.find('=') == std::string::npos) {
      std::ifstream in(item);
      if (!in) throw Error("cannot read config file " + item);
      std::string line;
      while (std::getline(in, line)) apply_line(s, line);
    } else {
      apply_line(s, item);
    }
  }
  s.rd.validate();
  return s;
}

}  // namespace obic::cli
