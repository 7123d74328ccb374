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

#include "fixtures.hpp"

#include <algorithm>
#include <set>

namespace dsr::testing {

std::string fixture_path(const std::string& name) { return std::string(DSR_FIXTURE_DIR) + "/" + name; }

std::shared_ptr<const Network> load_fixture(const std::string& name) {
    return std::make_shared<const Network>(load_network_file(fixture_path(name)));
}

std::shared_ptr<const Network> six_bus() { return load_fixture("six_bus.json"); }

std::shared_ptr<const Network> network_from_edges(const std::vector<std::pair<int, int>>& edges,
                                                  const std::vector<int>& der_buses, double der_capacity,
                                                  double load_p, double ohm) {
    const int n = static_cast<int>(edges.size()) + 1;
    std::vector<Bus> buses;
    for (int id = 1; id <= n; ++id) buses.push_back({id, load_p, 0.0, id == 1});
    std::vector<Branch> branches;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        branches.push_back({static_cast<int>(i) + 1, edges[i].first, edges[i].second, ohm, ohm});
    }
    std::vector<Der> ders;
    for (std::size_t i = 0; i < der_buses.size(); ++i) {
        ders.push_back({static_cast<int>(i) + 1, der_buses[i], der_capacity});
    }
    return std::make_shared<const Network>(Network::create(std::move(buses), std::move(branches), std::move(ders)));
}

std::shared_ptr<const Network> random_network(std::mt19937_64& rng, const RandomNetworkOptions& options) {
    std::uniform_int_distribution<int> branch_count(options.min_branches, options.max_branches);
    const int l = branch_count(rng);
    const int n = l + 1;
    std::vector<std::pair<int, int>> edges;
    for (int bus = 2; bus <= n; ++bus) {
        std::uniform_int_distribution<int> parent(1, bus - 1);
        edges.emplace_back(parent(rng), bus);
    }
    std::shuffle(edges.begin(), edges.end(), rng);

    std::vector<int> candidates;
    for (int bus = 2; bus <= n; ++bus) candidates.push_back(bus);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    std::uniform_int_distribution<int> der_count(0, std::min<int>(options.max_ders, n - 1));
    const int m = der_count(rng);

    std::uniform_real_distribution<double> ohm(0.0, options.max_ohm);
    std::uniform_int_distribution<int> cap(1, options.max_der_buses);
    std::vector<Bus> buses;
    for (int id = 1; id <= n; ++id) buses.push_back({id, options.load_p, options.load_p * 0.3, id == 1});
    std::vector<Branch> branches;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const double r = options.max_ohm > 0.0 ? ohm(rng) : 0.0;
        const double x = options.max_ohm > 0.0 ? ohm(rng) : 0.0;
        branches.push_back({static_cast<int>(i) + 1, edges[i].first, edges[i].second, r, x});
    }
    std::vector<Der> ders;
    for (int k = 0; k < m; ++k) {
        ders.push_back({k + 1, candidates[static_cast<std::size_t>(k)], cap(rng) * options.load_p});
    }
    return std::make_shared<const Network>(Network::create(std::move(buses), std::move(branches), std::move(ders)));
}

std::vector<std::vector<std::pair<int, int>>> all_labeled_trees(int n) {
    std::vector<std::vector<std::pair<int, int>>> out;
    if (n < 2) return out;
    if (n == 2) return {{{1, 2}}};
    std::vector<int> seq(static_cast<std::size_t>(n - 2), 1);
    while (true) {
        std::vector<int> degree(static_cast<std::size_t>(n + 1), 1);
        for (int x : seq) ++degree[static_cast<std::size_t>(x)];
        std::vector<std::pair<int, int>> edges;
        for (int x : seq) {
            for (int leaf = 1; leaf <= n; ++leaf) {
                if (degree[static_cast<std::size_t>(leaf)] == 1) {
                    edges.emplace_back(std::min(leaf, x), std::max(leaf, x));
                    --degree[static_cast<std::size_t>(leaf)];
                    --degree[static_cast<std::size_t>(x)];
                    break;
                }
            }
        }
        std::vector<int> last;
        for (int v = 1; v <= n; ++v) {
            if (degree[static_cast<std::size_t>(v)] == 1) last.push_back(v);
        }
        edges.emplace_back(last[0], last[1]);
        out.push_back(std::move(edges));

        std::size_t i = 0;
        while (i < seq.size() && seq[i] == n) seq[i++] = 1;
        if (i == seq.size()) break;
        ++seq[i];
    }
    return out;
}

PfAssignment random_pf(std::mt19937_64& rng, const Network& net, const std::vector<double>& choices) {
    std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
    PfAssignment pf;
    for (int i = 0; i < net.branch_count(); ++i) pf.pf.push_back(choices[pick(rng)]);
    return pf;
}

}  // namespace dsr::testing
