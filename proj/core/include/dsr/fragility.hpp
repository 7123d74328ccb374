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

#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dsr/network.hpp"

namespace dsr {

/// Tabulated PGA (g) versus probability of failure for one asset class.
struct FragilityCurve {
    std::string asset_class;
    std::vector<std::pair<double, double>> points;  // (pga, pf), pga strictly increasing

    /// Throws ValidationError unless pga is strictly increasing and pf is non-decreasing in [0,1].
    void validate() const;
};

/// Per-branch failure probability, element i is branch i + 1.
struct PfAssignment {
    std::vector<double> pf;

    double operator[](int branch_id) const { return pf.at(static_cast<std::size_t>(branch_id - 1)); }
    static PfAssignment uniform(const Network& net, double value);
    bool operator==(const PfAssignment&) const = default;
};

/// Ground-motion exposure of one branch; pf_override bypasses the curves.
struct Exposure {
    int branch = 0;
    std::optional<std::string> asset_class;
    std::optional<double> pga;
    std::optional<double> pf_override;
};

/// Piecewise-linear interpolation, clamped to the end values outside the table.
double pf_from_pga(const FragilityCurve& curve, double pga);

PfAssignment assign_pf(const Network& net, const std::map<std::string, FragilityCurve>& curves,
                       const std::vector<Exposure>& exposure);

std::map<std::string, FragilityCurve> load_fragility(std::istream& source);
std::vector<Exposure> load_exposure(std::istream& source);
std::map<std::string, FragilityCurve> load_fragility_file(const std::string& path);
std::vector<Exposure> load_exposure_file(const std::string& path);

}  // namespace dsr
