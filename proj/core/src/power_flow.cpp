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

#include "dsr/power_flow.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "dsr/error.hpp"

namespace dsr {

using cplx = std::complex<double>;

const BusVoltage& VoltageSolution::at(int bus) const {
    for (const BusVoltage& v : voltages) {
        if (v.bus == bus) return v;
    }
    throw std::out_of_range("bus " + std::to_string(bus) + " is not in the solution");
}

void VoltageLimits::validate() const {
    if (!(v_min > 0.0 && v_min < 1.0 && v_max > 1.0)) {
        throw ValidationError("voltage limits must satisfy 0 < v_min < 1 < v_max");
    }
}

namespace {

// Breadth-first ordering of an island rooted at the slack bus.
struct SweepTree {
    std::vector<int> order;          // local bus indices, root first
    std::vector<int> parent;         // local parent index, -1 at root
    std::vector<cplx> parent_z;      // impedance of the branch to the parent, pu
};

SweepTree build_tree(const Network& net, const Island& island, const std::unordered_map<int, int>& local) {
    const std::size_t n = island.buses.size();
    if (island.branches.size() + 1 != n) throw ValidationError("island is not radial");

    std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbor local index, branch id)
    for (int id : island.branches) {
        const Branch& br = net.branch(id);
        auto from = local.find(br.from_bus);
        auto to = local.find(br.to_bus);
        if (from == local.end() || to == local.end()) {
            throw ValidationError("island branch " + std::to_string(id) + " leaves the island");
        }
        adj[static_cast<std::size_t>(from->second)].emplace_back(to->second, id);
        adj[static_cast<std::size_t>(to->second)].emplace_back(from->second, id);
    }

    SweepTree tree;
    tree.parent.assign(n, -1);
    tree.parent_z.assign(n, cplx{});
    std::vector<bool> seen(n, false);
    const int root = local.at(island.slack_bus);
    std::queue<int> frontier;
    frontier.push(root);
    seen[static_cast<std::size_t>(root)] = true;
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        tree.order.push_back(u);
        for (auto [v, id] : adj[static_cast<std::size_t>(u)]) {
            if (seen[static_cast<std::size_t>(v)]) continue;
            seen[static_cast<std::size_t>(v)] = true;
            tree.parent[static_cast<std::size_t>(v)] = u;
            tree.parent_z[static_cast<std::size_t>(v)] = net.impedance_pu(id);
            frontier.push(v);
        }
    }
    if (tree.order.size() != n) throw ValidationError("island is not connected");
    return tree;
}

}  // namespace

VoltageSolution fbpf_solve(const Network& net, const Island& island, const std::map<int, double>& der_injections,
                           const SweepOptions& options) {
    std::unordered_map<int, int> local;
    for (std::size_t i = 0; i < island.buses.size(); ++i) {
        if (!local.emplace(island.buses[i], static_cast<int>(i)).second) {
            throw ValidationError("island lists bus " + std::to_string(island.buses[i]) + " twice");
        }
    }
    if (!local.contains(island.slack_bus)) throw ValidationError("slack bus is not an island member");
    const SweepTree tree = build_tree(net, island, local);
    const std::size_t n = island.buses.size();

    std::vector<cplx> demand(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Bus& b = net.bus(island.buses[i]);
        demand[i] = cplx(b.load_p, b.load_q) / net.base().kva;
    }
    for (const auto& [bus, kw] : der_injections) {
        auto it = local.find(bus);
        if (it == local.end() || net.der_at(bus) == 0) {
            throw ValidationError("DER injection at bus " + std::to_string(bus) + " outside the island's DER buses");
        }
        demand[static_cast<std::size_t>(it->second)] -= cplx(kw / net.base().kva, 0.0);
    }

    std::vector<cplx> v(n, cplx(1.0, 0.0));
    std::vector<cplx> current(n);
    VoltageSolution sol;
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        // Backward sweep: accumulate branch currents from the leaves.
        for (std::size_t i = 0; i < n; ++i) current[i] = std::conj(demand[i] / v[i]);
        for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
            const int p = tree.parent[static_cast<std::size_t>(*it)];
            if (p >= 0) current[static_cast<std::size_t>(p)] += current[static_cast<std::size_t>(*it)];
        }
        // Forward sweep: voltage drops from the slack outward.
        double max_change = 0.0;
        for (int u : tree.order) {
            const auto ui = static_cast<std::size_t>(u);
            const int p = tree.parent[ui];
            if (p < 0) continue;
            const cplx next = v[static_cast<std::size_t>(p)] - tree.parent_z[ui] * current[ui];
            max_change = std::max(max_change, std::abs(next - v[ui]));
            v[ui] = next;
        }
        sol.iterations = iter;
        const bool finite = std::all_of(v.begin(), v.end(), [](cplx x) {
            return std::isfinite(x.real()) && std::isfinite(x.imag()) && std::abs(x) > 1e-6;
        });
        if (!finite) break;
        if (max_change < options.tolerance) {
            sol.converged = true;
            break;
        }
    }

    sol.voltages.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        sol.voltages.push_back({island.buses[i], std::abs(v[i]), std::arg(v[i])});
    }
    return sol;
}

std::vector<int> violating_buses(const VoltageSolution& sol, const VoltageLimits& limits) {
    if (!sol.converged) throw ConvergenceError("voltage check on a non-converged load flow");
    std::vector<int> out;
    for (const BusVoltage& bv : sol.voltages) {
        if (bv.magnitude < limits.v_min || bv.magnitude > limits.v_max) out.push_back(bv.bus);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace dsr
