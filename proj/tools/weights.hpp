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

#include <filesystem>
#include <optional>
#include <span>

#include "obic/pipeline.hpp"

namespace obic::cli {

struct Selector {
  std::optional<std::uint32_t> lambda_id;
  std::optional<double> a1;
  std::optional<double> a2;
};

// `path` is a checkpoint file or a directory of *.obicw checkpoints. With a
// directory, exactly one checkpoint must match the selector.
Model select_model(const std::filesystem::path& path, const Selector& sel);

// Picks the checkpoint whose model id matches the container header.
Model model_for_container(const std::filesystem::path& path, std::span<const std::uint8_t> container);

}  // namespace obic::cli
