#pragma once

// JSON serialisation of traces and exploration reports. Key order is fixed
// so equal runs produce byte-identical output.

#include <nlohmann/json.hpp>

#include "core.hpp"
#include "explorer.hpp"

namespace klaimnet {

using ordered_json = nlohmann::ordered_json;

inline ordered_json label_to_json(const Label& l) {
    ordered_json j;
    j["site"] = l.site;
    j["action"] = l.action;
    if (!l.partner.empty()) j["partner"] = l.partner;
    return j;
}

inline Label label_from_json(const ordered_json& j) {
    Label l;
    l.site = j.at("site").get<std::string>();
    l.action = j.at("action").get<std::string>();
    if (j.contains("partner")) l.partner = j.at("partner").get<std::string>();
    return l;
}

// Trace object: {"seed": ..., "steps": [...], "final_state": "..."}.
inline ordered_json trace_to_json(const Trace& t) {
    ordered_json j;
    j["seed"] = t.seed;
    ordered_json steps = ordered_json::array();
    for (const auto& s : t.steps) steps.push_back(label_to_json(s));
    j["steps"] = std::move(steps);
    j["final_state"] = t.final_state;
    return j;
}

inline Trace trace_from_json(const ordered_json& j) {
    Trace t;
    t.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("steps")) t.steps.push_back(label_from_json(s));
    t.final_state = j.at("final_state").get<std::string>();
    return t;
}

// Exploration report:
// {"file": ..., "verdicts": [{"assertion", "verdict", "witness"?}],
//  "stats": {"states", "transitions", "truncated"}}.
inline ordered_json report_to_json(const std::string& file, const ExploreResult& res) {
    ordered_json j;
    j["file"] = file;
    ordered_json verdicts = ordered_json::array();
    for (const auto& v : res.verdicts) {
        ordered_json e;
        e["assertion"] = v.assertion.render();
        e["verdict"] = verdict_name(v.verdict);
        if (v.witness) e["witness"] = trace_to_json(*v.witness);
        verdicts.push_back(std::move(e));
    }
    j["verdicts"] = std::move(verdicts);
    ordered_json stats;
    stats["states"] = res.states;
    stats["transitions"] = res.transitions;
    stats["truncated"] = res.truncated;
    j["stats"] = std::move(stats);
    return j;
}

}  // namespace klaimnet
