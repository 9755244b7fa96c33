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
#include <string>
#include <vector>

#include "obic/pipeline.hpp"

namespace obic::cli {

struct TrainSettings {
  RDConfig rd;
  CodecConfig codec;
  std::uint32_t lambda_id = 0;
  std::uint64_t init_seed = 1;
  std::filesystem::path init;  // optional starting checkpoint
};

// Each item is either key=value or the path of a file holding key=value lines
// ('#' starts a comment).
TrainSettings parse_train_settings(const std::vector<std::string>& items);

}  // namespace obic::cli
