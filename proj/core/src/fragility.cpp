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

#include "dsr/fragility.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "dsr/error.hpp"

namespace dsr {

namespace {

using nlohmann::json;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
    if (!obj.is_object()) throw ParseError(std::string(where) + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; })) {
            throw ParseError(std::string(where) + ": unknown key '" + key + "'");
        }
    }
}

json parse_document(std::istream& source, const char* what) {
    try {
        return json::parse(source);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(what) + " document is not valid JSON: " + e.what());
    }
}

}  // namespace

void FragilityCurve::validate() const {
    if (points.empty()) throw ValidationError("fragility curve '" + asset_class + "' is empty");
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto [pga, pf] = points[i];
        if (!std::isfinite(pga) || !is_probability(pf)) {
            throw ValidationError("fragility curve '" + asset_class + "' has a point outside the valid range");
        }
        if (i > 0) {
            if (!(pga > points[i - 1].first)) {
                throw ValidationError("fragility curve '" + asset_class + "' pga must be strictly increasing");
            }
            if (pf < points[i - 1].second) {
                throw ValidationError("fragility curve '" + asset_class + "' pf must be non-decreasing");
            }
        }
    }
}

PfAssignment PfAssignment::uniform(const Network& net, double value) {
    if (!is_probability(value)) throw ValidationError("pf must lie in [0,1]");
    return PfAssignment{std::vector<double>(static_cast<std::size_t>(net.branch_count()), value)};
}

double pf_from_pga(const FragilityCurve& curve, double pga) {
    if (curve.points.empty()) throw ValidationError("fragility curve '" + curve.asset_class + "' is empty");
    if (!(pga >= 0.0)) throw ValidationError("pga must be non-negative");
    const auto& pts = curve.points;
    if (pga <= pts.front().first) return pts.front().second;
    if (pga >= pts.back().first) return pts.back().second;
    auto upper = std::upper_bound(pts.begin(), pts.end(), pga,
                                  [](double v, const std::pair<double, double>& p) { return v < p.first; });
    auto lower = std::prev(upper);
    const double t = (pga - lower->first) / (upper->first - lower->first);
    return std::clamp(lower->second + t * (upper->second - lower->second), 0.0, 1.0);
}

PfAssignment assign_pf(const Network& net, const std::map<std::string, FragilityCurve>& curves,
                       const std::vector<Exposure>& exposure) {
    const int l = net.branch_count();
    std::vector<std::optional<double>> out(static_cast<std::size_t>(l));
    for (const Exposure& e : exposure) {
        if (e.branch < 1 || e.branch > l) {
            throw ValidationError("exposure references unknown branch " + std::to_string(e.branch));
        }
        auto& slot = out[static_cast<std::size_t>(e.branch - 1)];
        if (slot) throw ValidationError("branch " + std::to_string(e.branch) + " has more than one exposure entry");
        if (e.pf_override) {
            if (!is_probability(*e.pf_override)) {
                throw ValidationError("branch " + std::to_string(e.branch) + " pf_override must lie in [0,1]");
            }
            slot = *e.pf_override;
            continue;
        }
        if (!e.asset_class || !e.pga) {
            throw ValidationError("branch " + std::to_string(e.branch) + " needs asset_class and pga or pf_override");
        }
        auto it = curves.find(*e.asset_class);
        if (it == curves.end()) throw ValidationError("unknown asset class '" + *e.asset_class + "'");
        slot = pf_from_pga(it->second, *e.pga);
    }
    PfAssignment result;
    result.pf.reserve(out.size());
    for (int i = 0; i < l; ++i) {
        if (!out[static_cast<std::size_t>(i)]) {
            throw ValidationError("missing exposure for branch " + std::to_string(i + 1));
        }
        result.pf.push_back(*out[static_cast<std::size_t>(i)]);
    }
    return result;
}

std::map<std::string, FragilityCurve> load_fragility(std::istream& source) {
    const json doc = parse_document(source, "fragility");
    reject_unknown(doc, {"curves"}, "fragility");
    if (!doc.contains("curves") || !doc["curves"].is_array()) throw ParseError("fragility: 'curves' must be an array");
    std::map<std::string, FragilityCurve> curves;
    for (const json& jc : doc["curves"]) {
        reject_unknown(jc, {"asset_class", "points"}, "curve");
        FragilityCurve c;
        try {
            c.asset_class = jc.at("asset_class").get<std::string>();
            for (const json& p : jc.at("points")) {
                if (!p.is_array() || p.size() != 2) throw ParseError("curve points must be [pga, pf] pairs");
                c.points.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
        } catch (const json::exception& e) {
            throw ParseError(std::string("fragility curve: ") + e.what());
        }
        c.validate();
        if (!curves.emplace(c.asset_class, c).second) {
            throw ValidationError("duplicate fragility curve '" + c.asset_class + "'");
        }
    }
    return curves;
}

std::vector<Exposure> load_exposure(std::istream& source) {
    const json doc = parse_document(source, "exposure");
    reject_unknown(doc, {"exposure"}, "exposure");
    if (!doc.contains("exposure") || !doc["exposure"].is_array()) {
        throw ParseError("exposure: 'exposure' must be an array");
    }
    std::vector<Exposure> out;
    for (const json& je : doc["exposure"]) {
        reject_unknown(je, {"branch", "asset_class", "pga", "pf_override"}, "exposure entry");
        Exposure e;
        try {
            e.branch = je.at("branch").get<int>();
            if (je.contains("asset_class")) e.asset_class = je["asset_class"].get<std::string>();
            if (je.contains("pga")) e.pga = je["pga"].get<double>();
            if (je.contains("pf_override")) e.pf_override = je["pf_override"].get<double>();
        } catch (const json::exception& ex) {
            throw ParseError(std::string("exposure entry: ") + ex.what());
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::map<std::string, FragilityCurve> load_fragility_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open fragility file '" + path + "'");
    return load_fragility(in);
}

std::vector<Exposure> load_exposure_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open exposure file '" + path + "'");
    return load_exposure(in);
}

}  // namespace dsr
