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

#include <map>
#include <optional>

#include "dsr/network.hpp"
#include "dsr/power_flow.hpp"

namespace dsr::testing {

/// Newton-Raphson on the bus admittance matrix in rectangular coordinates.
/// Needs non-zero impedance on every island branch. Returns |V| per bus id,
/// or nullopt when Newton fails to converge.
std::optional<std::map<int, double>> nodal_voltages(const Network& net, const Island& island,
                                                    const std::map<int, double>& der_injections);

}  // namespace dsr::testing
