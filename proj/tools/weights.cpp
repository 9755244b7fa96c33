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

#include "weights.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "obic/error.hpp"

namespace obic::cli {
namespace {

std::vector<std::filesystem::path> checkpoints_in(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".obicw") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error("no .obicw checkpoints in " + dir.string());
  return out;
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

bool matches(const CheckpointInfo& info, const Selector& sel) {
  if (sel.lambda_id && info.lambda_id != *sel.lambda_id) return false;
  if (sel.a1 && !near(info.a1, *sel.a1)) return false;
  if (sel.a2 && !near(info.a2, *sel.a2)) return false;
  return true;
}

}  // namespace

Model select_model(const std::filesystem::path& path, const Selector& sel) {
  if (!std::filesystem::is_directory(path)) {
    Model m = Model::load(path);
    if (!matches(m.info(), sel)) throw Error("checkpoint " + path.string() + " does not match the requested operating point");
    return m;
  }
  std::vector<Checkpoint> hits;
  std::ostringstream names;
  for (const auto& p : checkpoints_in(path)) {
    Checkpoint c = load_checkpoint(p);
    if (matches(c.info, sel)) {
      names << " " << p.filename().string();
      hits.push_back(std::move(c));
    }
  }
  if (hits.empty()) throw Error("no checkpoint in " + path.string() + " matches the requested operating point");
  if (hits.size() > 1) throw Error("ambiguous operating point; candidates:" + names.str());
  return Model(std::move(hits.front()));
}

Model model_for_container(const std::filesystem::path& path, std::span<const std::uint8_t> container) {
  const ModelId want = read_container(container).header.model_id;
  if (!std::filesystem::is_directory(path)) return Model::load(path);
  for (const auto& p : checkpoints_in(path)) {
    Model m = Model::load(p);
    if (m.id() == want) return m;
  }
  throw ModelMismatchError("no checkpoint in " + path.string() + " produced this container");
}

}  // namespace obic::cli
