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
#include <stdexcept>
#include <string>

namespace obic {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Raised by the graph when an op produces NaN/Inf. Carries the index and
// kind of the first offending node.
class NonFiniteError : public Error {
 public:
  NonFiniteError(std::size_t node, std::string op)
      : Error("non-finite output at node " + std::to_string(node) + " (" + op + ")"),
        node_(node),
        op_(std::move(op)) {}
  std::size_t node() const noexcept { return node_; }
  const std::string& op() const noexcept { return op_; }

 private:
  std::size_t node_;
  std::string op_;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public FormatError {
 public:
  TruncationError(std::string what_part, std::size_t need, std::size_t have)
      : FormatError("truncated " + what_part + ": need " + std::to_string(need) +
                    " bytes, have " + std::to_string(have)),
        part_(std::move(what_part)) {}
  const std::string& part() const noexcept { return part_; }

 private:
  std::string part_;
};

class CorruptStreamError : public Error {
 public:
  using Error::Error;
};

class CausalityError : public Error {
 public:
  using Error::Error;
};

class ModelMismatchError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace obic
