// Copyright 2026 The dsrestore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
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

namespace dsr {

/// Malformed input document (bad JSON, wrong types, unknown keys).
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Input or output file could not be opened, read or written.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// MDP exploration hit the configured state budget.
class BudgetExceeded : public std::runtime_error {
  public:
    BudgetExceeded(std::size_t budget, std::size_t explored, std::size_t frontier)
        : std::runtime_error("state budget exceeded: budget " + std::to_string(budget) + ", " +
                             std::to_string(explored) + " states registered, " +
                             std::to_string(frontier) + " still unexplored"),
          budget_(budget),
          explored_(explored),
          frontier_(frontier) {}

    std::size_t budget() const noexcept { return budget_; }
    std::size_t explored() const noexcept { return explored_; }
    std::size_t frontier() const noexcept { return frontier_; }

  private:
    std::size_t budget_;
    std::size_t explored_;
    std::size_t frontier_;
};

/// Load flow failed to converge within the iteration cap.
class ConvergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace dsr
