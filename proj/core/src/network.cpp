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

#include "dsr/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "dsr/error.hpp"
#include "disjoint_set.hpp"

namespace dsr {

namespace {

using nlohmann::json;

template <typename T, typename IdOf>
void check_contiguous_ids(std::vector<T>& items, IdOf id_of, const char* what) {
    std::sort(items.begin(), items.end(), [&](const T& a, const T& b) { return id_of(a) < id_of(b); });
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (id_of(items[i]) != static_cast<int>(i) + 1) {
            throw ValidationError(std::string(what) + " ids must be 1.." + std::to_string(items.size()) +
                                  " without gaps or duplicates");
        }
    }
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; });
        if (!known) throw ParseError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing key '" + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + ": key '" + key + "' has the wrong type");
    }
}

template <typename T>
std::optional<T> optional_value(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + ": key '" + key + "' has the wrong type");
    }
}

}  // namespace

Network Network::create(std::vector<Bus> buses, std::vector<Branch> branches, std::vector<Der> ders,
                        SystemBase base, Topology topology) {
    if (buses.empty()) throw ValidationError("network has no buses");
    if (branches.empty()) throw ValidationError("network has no branches");
    if (!(base.kv > 0.0) || !(base.kva > 0.0)) throw ValidationError("system base must be positive");

    check_contiguous_ids(buses, [](const Bus& b) { return b.id; }, "bus");
    check_contiguous_ids(branches, [](const Branch& b) { return b.id; }, "branch");
    check_contiguous_ids(ders, [](const Der& d) { return d.id; }, "DER");

    const int n = static_cast<int>(buses.size());
    int grid_ties = 0;
    int grid_bus = 0;
    for (const Bus& b : buses) {
        if (!(b.load_p >= 0.0) || !std::isfinite(b.load_p)) {
            throw ValidationError("bus " + std::to_string(b.id) + " has negative or invalid load_p");
        }
        if (!std::isfinite(b.load_q)) throw ValidationError("bus " + std::to_string(b.id) + " has invalid load_q");
        if (b.is_grid_tie) {
            ++grid_ties;
            grid_bus = b.id;
        }
    }
    if (grid_ties == 0) throw ValidationError("no grid tie");
    if (grid_ties > 1) throw ValidationError("more than one grid tie");

    std::set<std::pair<int, int>> pairs;
    for (const Branch& br : branches) {
        const std::string name = "branch " + std::to_string(br.id);
        if (br.from_bus < 1 || br.from_bus > n || br.to_bus < 1 || br.to_bus > n) {
            throw ValidationError(name + " references an unknown bus");
        }
        if (br.from_bus == br.to_bus) throw ValidationError(name + " is a self-loop");
        if (!(br.resistance >= 0.0) || !(br.reactance >= 0.0)) {
            throw ValidationError(name + " has negative impedance");
        }
        auto key = std::minmax(br.from_bus, br.to_bus);
        if (!pairs.insert(key).second) throw ValidationError(name + " is parallel to another branch");
    }

    std::vector<int> der_at(static_cast<std::size_t>(n), 0);
    for (const Der& d : ders) {
        const std::string name = "DER " + std::to_string(d.id);
        if (d.bus < 1 || d.bus > n) throw ValidationError(name + " references an unknown bus");
        if (!(d.capacity_p > 0.0) || !std::isfinite(d.capacity_p)) {
            throw ValidationError(name + " must have positive capacity");
        }
        auto& slot = der_at[static_cast<std::size_t>(d.bus - 1)];
        if (slot != 0) throw ValidationError("bus " + std::to_string(d.bus) + " hosts more than one DER");
        slot = d.id;
    }

    detail::DisjointSet components(static_cast<std::size_t>(n));
    bool cycle = false;
    for (const Branch& br : branches) {
        if (!components.unite(static_cast<std::size_t>(br.from_bus - 1), static_cast<std::size_t>(br.to_bus - 1))) {
            cycle = true;
        }
    }
    if (cycle && topology == Topology::radial) throw ValidationError("graph contains a cycle");
    if (components.set_count() != 1) throw ValidationError("graph is not connected");

    Network net;
    net.buses_ = std::move(buses);
    net.branches_ = std::move(branches);
    net.ders_ = std::move(ders);
    net.base_ = base;
    net.topology_ = topology;
    net.grid_bus_ = grid_bus;
    net.der_at_bus_ = std::move(der_at);

    net.incident_.assign(static_cast<std::size_t>(n), {});
    for (const Branch& br : net.branches_) {
        net.incident_[static_cast<std::size_t>(br.from_bus - 1)].push_back(br.id);
        net.incident_[static_cast<std::size_t>(br.to_bus - 1)].push_back(br.id);
    }
    net.neighbors_.assign(net.branches_.size(), {});
    for (const Branch& br : net.branches_) {
        auto& out = net.neighbors_[static_cast<std::size_t>(br.id - 1)];
        for (int bus : {br.from_bus, br.to_bus}) {
            for (int other : net.incident_[static_cast<std::size_t>(bus - 1)]) {
                if (other != br.id) out.push_back(other);
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    return net;
}

std::complex<double> Network::impedance_pu(int branch_id) const {
    const Branch& br = branch(branch_id);
    return std::complex<double>(br.resistance, br.reactance) / base_.impedance_ohm();
}

double Network::total_load() const {
    return std::accumulate(buses_.begin(), buses_.end(), 0.0,
                           [](double acc, const Bus& b) { return acc + b.load_p; });
}

double der_capacity_from_bus_count(double bus_count, double per_bus_load) {
    return (bus_count + 1.0) * per_bus_load;
}

Network load_network(std::istream& source) {
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("network document is not valid JSON: ") + e.what());
    }
    check_keys(doc, {"base", "uniform_load", "buses", "branches", "ders"}, "network");

    SystemBase base;
    if (auto it = doc.find("base"); it != doc.end()) {
        check_keys(*it, {"kv", "kva"}, "network.base");
        base.kv = optional_value<double>(*it, "kv", "network.base").value_or(base.kv);
        base.kva = optional_value<double>(*it, "kva", "network.base").value_or(base.kva);
    }

    std::optional<double> uniform_p;
    std::optional<double> uniform_q;
    if (auto it = doc.find("uniform_load"); it != doc.end()) {
        check_keys(*it, {"p", "q"}, "network.uniform_load");
        uniform_p = required<double>(*it, "p", "network.uniform_load");
        uniform_q = optional_value<double>(*it, "q", "network.uniform_load");
    }

    const json& jbuses = doc.contains("buses") ? doc["buses"] : throw ParseError("network: missing key 'buses'");
    const json& jbranches =
        doc.contains("branches") ? doc["branches"] : throw ParseError("network: missing key 'branches'");
    if (!jbuses.is_array() || !jbranches.is_array()) throw ParseError("network: buses/branches must be arrays");

    std::vector<Bus> buses;
    for (const json& jb : jbuses) {
        check_keys(jb, {"id", "load_p", "load_q", "grid_tie"}, "bus");
        Bus b;
        b.id = required<int>(jb, "id", "bus");
        const std::string where = "bus " + std::to_string(b.id);
        auto p = optional_value<double>(jb, "load_p", where);
        if (!p && !uniform_p) throw ParseError(where + ": missing key 'load_p'");
        b.load_p = p ? *p : *uniform_p;
        b.load_q = optional_value<double>(jb, "load_q", where).value_or(p ? 0.0 : uniform_q.value_or(0.0));
        b.is_grid_tie = optional_value<bool>(jb, "grid_tie", where).value_or(false);
        buses.push_back(b);
    }

    std::vector<Branch> branches;
    for (const json& jbr : jbranches) {
        check_keys(jbr, {"id", "from", "to", "r", "x"}, "branch");
        Branch br;
        br.id = required<int>(jbr, "id", "branch");
        const std::string where = "branch " + std::to_string(br.id);
        br.from_bus = required<int>(jbr, "from", where);
        br.to_bus = required<int>(jbr, "to", where);
        br.resistance = required<double>(jbr, "r", where);
        br.reactance = required<double>(jbr, "x", where);
        branches.push_back(br);
    }

    std::vector<Der> ders;
    if (auto it = doc.find("ders"); it != doc.end()) {
        if (!it->is_array()) throw ParseError("network: ders must be an array");
        for (const json& jd : *it) {
            check_keys(jd, {"id", "bus", "capacity", "capacity_unit"}, "der");
            Der d;
            d.id = required<int>(jd, "id", "der");
            const std::string where = "DER " + std::to_string(d.id);
            d.bus = required<int>(jd, "bus", where);
            const double capacity = required<double>(jd, "capacity", where);
            const std::string unit = optional_value<std::string>(jd, "capacity_unit", where).value_or("kw");
            if (unit == "kw") {
                d.capacity_p = capacity;
            } else if (unit == "buses") {
                double per_bus = 0.0;
                if (uniform_p) {
                    per_bus = *uniform_p;
                } else {
                    if (buses.empty()) throw ValidationError(where + ": capacity in buses needs bus loads");
                    per_bus = buses.front().load_p;
                    for (const Bus& b : buses) {
                        if (b.load_p != per_bus) {
                            throw ValidationError(where +
                                                  ": capacity in buses requires a uniform per-bus load");
                        }
                    }
                }
                if (!(per_bus > 0.0)) throw ValidationError(where + ": capacity in buses requires a positive load");
                d.capacity_p = der_capacity_from_bus_count(capacity, per_bus);
            } else {
                throw ParseError(where + ": capacity_unit must be \"kw\" or \"buses\"");
            }
            ders.push_back(d);
        }
    }

    return Network::create(std::move(buses), std::move(branches), std::move(ders), base);
}

Network load_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open network file '" + path + "'");
    return load_network(in);
}

std::string serialize_network(const Network& net) {
    json doc;
    doc["base"] = {{"kv", net.base().kv}, {"kva", net.base().kva}};
    doc["buses"] = json::array();
    for (const Bus& b : net.buses()) {
        json jb = {{"id", b.id}, {"load_p", b.load_p}, {"load_q", b.load_q}};
        if (b.is_grid_tie) jb["grid_tie"] = true;
        doc["buses"].push_back(std::move(jb));
    }
    doc["branches"] = json::array();
    for (const Branch& br : net.branches()) {
        doc["branches"].push_back(
            {{"id", br.id}, {"from", br.from_bus}, {"to", br.to_bus}, {"r", br.resistance}, {"x", br.reactance}});
    }
    doc["ders"] = json::array();
    for (const Der& d : net.ders()) {
        doc["ders"].push_back({{"id", d.id}, {"bus", d.bus}, {"capacity", d.capacity_p}, {"capacity_unit", "kw"}});
    }
    return doc.dump(2);
}

std::vector<int> branch_neighbors(const Network& net, int branch_id) {
    if (branch_id < 1 || branch_id > net.branch_count()) {
        throw std::out_of_range("unknown branch id " + std::to_string(branch_id));
    }
    return net.neighbors(branch_id);
}

std::vector<int> source_branches(const Network& net) {
    std::vector<int> out;
    for (const Branch& br : net.branches()) {
        auto is_source = [&](int bus) { return bus == net.grid_bus() || net.der_at(bus) != 0; };
        if (is_source(br.from_bus) || is_source(br.to_bus)) out.push_back(br.id);
    }
    return out;
}

}  // namespace dsr
