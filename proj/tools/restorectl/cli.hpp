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

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dsr::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kBudget = 2, kIo = 3 };

/// Settings shared by every subcommand; file values first, then flags.
struct RunConfig {
    std::string network;
    std::string fragility;
    std::string exposure;
    std::string model;  // prebuilt model export (solve, simulate)
    std::optional<double> pf_uniform;
    std::map<int, double> pf_override;
    std::optional<int> horizon;
    double vmin = 0.95;
    double vmax = 1.05;
    double relax_cap = 0.10;
    std::size_t state_budget = 2'000'000;
    int trials = 10000;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    std::string listen = "127.0.0.1:8080";
    unsigned threads = 1;
    std::string policy = "optimal";  // or a baseline kind
    std::string store;               // serve: session log, default <out-dir>/sessions.db
    std::string console_dir;         // serve: static assets

    /// Throws dsr::ValidationError on out-of-range values.
    void validate() const;
};

/// Reads a JSON config file; relative paths inside resolve against its directory.
RunConfig load_config_file(const std::string& path);

/// Runs `restorectl` with the given arguments (argv[0] included).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dsr::cli
