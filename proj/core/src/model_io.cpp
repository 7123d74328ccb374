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

#include <sstream>

#include <json.hpp>

#include "dsr/error.hpp"
#include "dsr/mdp.hpp"

namespace dsr {

using nlohmann::json;

std::string export_model_json(const MdpModel& model) {
    json doc;
    doc["branches"] = model.network().branch_count();
    doc["buses"] = model.network().bus_count();
    doc["pf"] = model.pf().pf;
    json states = json::array();
    json costs = json::array();
    json relaxed = json::array();
    json depth = json::array();
    json actions = json::array();
    json transitions = json::array();
    for (std::size_t i = 0; i < model.size(); ++i) {
        const StateEntry& e = model.state(i);
        states.push_back(e.state.to_string());
        costs.push_back(e.cost);
        relaxed.push_back(e.relaxed());
        depth.push_back(e.depth);
        json acts = json::array();
        for (std::size_t k = 0; k < e.actions.size(); ++k) {
            acts.push_back(e.actions[k].action.branches());
            for (const Transition& t : e.actions[k].outcomes) {
                transitions.push_back(json::array({i, k, t.target, t.probability}));
            }
        }
        actions.push_back(std::move(acts));
    }
    doc["states"] = std::move(states);
    doc["costs"] = std::move(costs);
    doc["relaxed"] = std::move(relaxed);
    doc["depth"] = std::move(depth);
    doc["actions"] = std::move(actions);
    doc["transitions"] = std::move(transitions);
    return doc.dump();
}

MdpModel import_model_json(std::istream& source, std::shared_ptr<const Network> net) {
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model document is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("branches").get<int>() != net->branch_count() || doc.at("buses").get<int>() != net->bus_count()) {
            throw ValidationError("model document does not match the network");
        }
        PfAssignment pf{doc.at("pf").get<std::vector<double>>()};
        MdpModel model(net, std::move(pf), BuildOptions{});
        const auto& states = doc.at("states");
        const auto& actions = doc.at("actions");
        const auto& costs = doc.at("costs");
        const auto& relaxed = doc.at("relaxed");
        const auto& depth = doc.at("depth");
        if (actions.size() != states.size() || costs.size() != states.size() || relaxed.size() != states.size()) {
            throw ParseError("model arrays have inconsistent lengths");
        }
        for (std::size_t i = 0; i < states.size(); ++i) {
            StateEntry e;
            e.state = SystemState::parse(states[i].get<std::string>());
            if (e.state.size() != static_cast<std::size_t>(net->branch_count())) {
                throw ValidationError("state " + std::to_string(i) + " has the wrong length");
            }
            e.cost = costs[i].get<int>();
            e.relax_level = relaxed[i].get<bool>() ? 1 : 0;
            e.depth = depth.at(i).get<int>();
            for (const json& a : actions[i]) e.actions.push_back({ActionSet(a.get<std::vector<int>>()), {}});
            model.add_state(std::move(e));
        }
        for (const json& t : doc.at("transitions")) {
            const auto s = t.at(0).get<std::size_t>();
            const auto k = t.at(1).get<std::size_t>();
            const auto target = t.at(2).get<std::uint32_t>();
            if (s >= model.size() || target >= model.size() || k >= model.state(s).actions.size()) {
                throw ValidationError("transition references an unknown state or action");
            }
            model.mutable_state(s).actions[k].outcomes.push_back({target, t.at(3).get<double>()});
        }
        return model;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model document: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("model document: ") + e.what());
    }
}

}  // namespace dsr
