#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nodal/clearing.hpp"
#include "nodal/grid.hpp"
#include "nodal/regulation.hpp"
#include "nodal/strategy.hpp"

namespace nodal {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string what, std::vector<std::string> issues)
        : std::runtime_error(std::move(what)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

struct LoadedScenario {
    Scenario scenario;
    RegulatorEstimate estimate; // defaults to the exact truth when absent
    GridSpec grid;              // defaults to GridSpec::defaults() when absent
};

namespace detail {

using nlohmann::json;

// Settlement input must not silently ignore mistyped parameters: any key
// outside the schema is fatal.
inline void expect_keys(const json& obj, const std::string& path,
                        const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ParseError(path + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ParseError(path + ": unknown key '" + key + "'");
}

inline double number_at(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ParseError(path + ": missing '" + key + "'");
    if (!obj.at(key).is_number()) throw ParseError(path + "." + key + ": expected a number");
    return obj.at(key).get<double>();
}

inline std::string string_at(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ParseError(path + ": missing '" + key + "'");
    if (!obj.at(key).is_string()) throw ParseError(path + "." + key + ": expected a string");
    return obj.at(key).get<std::string>();
}

inline const json& array_at(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ParseError(path + ": missing '" + key + "'");
    if (!obj.at(key).is_array()) throw ParseError(path + "." + key + ": expected an array");
    return obj.at(key);
}

inline TechParams parse_params(const json& j, const std::string& path) {
    expect_keys(j, path, {"p_min", "p_max", "ramp_up", "ramp_down", "p_initial"});
    TechParams p;
    p.p_min = number_at(j, path, "p_min");
    p.p_max = number_at(j, path, "p_max");
    p.ramp_up = number_at(j, path, "ramp_up");
    p.ramp_down = number_at(j, path, "ramp_down");
    p.p_initial = number_at(j, path, "p_initial");
    return p;
}

inline OfferCurve parse_curve(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path + ": expected an array");
    OfferCurve curve;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string at = path + "[" + std::to_string(i) + "]";
        expect_keys(j[i], at, {"mw", "price"});
        curve.blocks.push_back({number_at(j[i], at, "mw"), number_at(j[i], at, "price")});
    }
    return curve;
}

inline json params_to_json(const TechParams& p) {
    return json{{"p_min", p.p_min},
                {"p_max", p.p_max},
                {"ramp_up", p.ramp_up},
                {"ramp_down", p.ramp_down},
                {"p_initial", p.p_initial}};
}

inline json curve_to_json(const OfferCurve& c) {
    json arr = json::array();
    for (const OfferBlock& b : c.blocks) arr.push_back({{"mw", b.quantity}, {"price", b.price}});
    return arr;
}

} // namespace detail

inline LoadedScenario parse_scenario_text(const std::string& text, const std::string& origin) {
    using detail::array_at;
    using detail::expect_keys;
    using detail::number_at;
    using detail::string_at;
    using nlohmann::json;

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    expect_keys(doc, origin,
                {"network", "units", "demands", "hours", "firm_units", "regulator_estimate",
                 "distortion_grid"});

    LoadedScenario out;
    Scenario& s = out.scenario;

    if (!doc.contains("network")) throw ParseError(origin + ": missing 'network'");
    const json& jnet = doc.at("network");
    expect_keys(jnet, "network", {"nodes", "lines", "reference"});
    for (const json& n : array_at(jnet, "network", "nodes")) {
        if (!n.is_string()) throw ParseError("network.nodes: expected strings");
        s.network.nodes.push_back(n.get<std::string>());
    }
    for (std::size_t i = 0; i < array_at(jnet, "network", "lines").size(); ++i) {
        const json& jl = jnet.at("lines")[i];
        const std::string at = "network.lines[" + std::to_string(i) + "]";
        expect_keys(jl, at, {"from", "to", "susceptance", "capacity"});
        s.network.lines.push_back({string_at(jl, at, "from"), string_at(jl, at, "to"),
                                   number_at(jl, at, "susceptance"), number_at(jl, at, "capacity")});
    }
    s.network.reference = string_at(jnet, "network", "reference");

    if (!doc.contains("hours") || !doc.at("hours").is_number_integer())
        throw ParseError(origin + ": 'hours' must be an integer");
    s.hours = doc.at("hours").get<int>();

    for (std::size_t i = 0; i < array_at(doc, origin, "units").size(); ++i) {
        const json& ju = doc.at("units")[i];
        const std::string at = "units[" + std::to_string(i) + "]";
        expect_keys(ju, at, {"id", "node", "owner", "params", "curve"});
        GeneratingUnit g;
        g.id = string_at(ju, at, "id");
        g.node = string_at(ju, at, "node");
        const std::string owner = string_at(ju, at, "owner");
        if (owner == "firm")
            g.owner = Owner::Firm;
        else if (owner == "other")
            g.owner = Owner::Other;
        else
            throw ParseError(at + ".owner: expected 'firm' or 'other'");
        if (!ju.contains("params")) throw ParseError(at + ": missing 'params'");
        g.true_params = detail::parse_params(ju.at("params"), at + ".params");
        if (!ju.contains("curve")) throw ParseError(at + ": missing 'curve'");
        g.true_curve = detail::parse_curve(ju.at("curve"), at + ".curve");
        s.units.push_back(std::move(g));
    }

    for (std::size_t i = 0; i < array_at(doc, origin, "demands").size(); ++i) {
        const json& jd = doc.at("demands")[i];
        const std::string at = "demands[" + std::to_string(i) + "]";
        expect_keys(jd, at, {"node", "hours"});
        DemandBid bid;
        bid.node = string_at(jd, at, "node");
        for (std::size_t h = 0; h < array_at(jd, at, "hours").size(); ++h) {
            const json& jh = jd.at("hours")[h];
            const std::string hat = at + ".hours[" + std::to_string(h) + "]";
            expect_keys(jh, hat, {"fixed", "blocks"});
            HourlyDemand hd;
            if (jh.contains("fixed")) hd.fixed = number_at(jh, hat, "fixed");
            if (jh.contains("blocks")) {
                for (std::size_t b = 0; b < jh.at("blocks").size(); ++b) {
                    const std::string bat = hat + ".blocks[" + std::to_string(b) + "]";
                    expect_keys(jh.at("blocks")[b], bat, {"mw", "value"});
                    hd.blocks.push_back({number_at(jh.at("blocks")[b], bat, "mw"),
                                         number_at(jh.at("blocks")[b], bat, "value")});
                }
            }
            bid.hours.push_back(std::move(hd));
        }
        s.demands.push_back(std::move(bid));
    }

    for (const json& f : array_at(doc, origin, "firm_units")) {
        if (!f.is_string()) throw ParseError("firm_units: expected strings");
        s.firm_unit_ids.push_back(f.get<std::string>());
    }

    const std::vector<std::string> issues = validate_scenario(s);
    if (!issues.empty())
        throw ValidationError(origin + ": invalid scenario (" + issues.front() +
                                  (issues.size() > 1 ? "; +" + std::to_string(issues.size() - 1) + " more"
                                                     : "") +
                                  ")",
                              issues);

    if (doc.contains("regulator_estimate")) {
        for (std::size_t i = 0; i < doc.at("regulator_estimate").size(); ++i) {
            const json& je = doc.at("regulator_estimate")[i];
            const std::string at = "regulator_estimate[" + std::to_string(i) + "]";
            expect_keys(je, at, {"id", "params", "curve"});
            const std::string id = string_at(je, at, "id");
            bool firm = false;
            for (const std::string& fid : s.firm_unit_ids) firm |= fid == id;
            if (!firm) throw ParseError(at + ".id: '" + id + "' is not a firm unit");
            UnitClaim c;
            if (!je.contains("params")) throw ParseError(at + ": missing 'params'");
            c.params = detail::parse_params(je.at("params"), at + ".params");
            if (!je.contains("curve")) throw ParseError(at + ": missing 'curve'");
            c.curve = detail::parse_curve(je.at("curve"), at + ".curve");
            out.estimate.claims[id] = std::move(c);
        }
        for (const std::string& fid : s.firm_unit_ids)
            if (!out.estimate.claims.count(fid))
                throw ParseError("regulator_estimate: missing firm unit '" + fid + "'");
    } else {
        out.estimate = exact_estimate(s);
    }

    if (doc.contains("distortion_grid")) {
        const json& jg = doc.at("distortion_grid");
        expect_keys(jg, "distortion_grid", {"price_scale", "price_add", "withhold", "ramp_scale"});
        GridSpec def = GridSpec::defaults();
        auto axis = [&](const char* key, std::vector<double> fallback) {
            if (!jg.contains(key)) return fallback;
            std::vector<double> vals;
            for (const json& v : jg.at(key)) {
                if (!v.is_number())
                    throw ParseError(std::string("distortion_grid.") + key + ": expected numbers");
                vals.push_back(v.get<double>());
            }
            if (vals.empty())
                throw ParseError(std::string("distortion_grid.") + key + ": empty axis");
            return vals;
        };
        out.grid.price_scale = axis("price_scale", def.price_scale);
        out.grid.price_add = axis("price_add", def.price_add);
        out.grid.withhold = axis("withhold", def.withhold);
        out.grid.ramp_scale = axis("ramp_scale", def.ramp_scale);
    } else {
        out.grid = GridSpec::defaults();
    }
    return out;
}

inline LoadedScenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path);
}

/// Serializes a loaded scenario back to its document form (keys sorted,
/// so emission is deterministic).
inline std::string emit_scenario(const LoadedScenario& loaded) {
    using nlohmann::json;
    const Scenario& s = loaded.scenario;
    json doc;
    doc["network"]["nodes"] = s.network.nodes;
    doc["network"]["reference"] = s.network.reference;
    doc["network"]["lines"] = json::array();
    for (const Line& l : s.network.lines)
        doc["network"]["lines"].push_back({{"from", l.from},
                                           {"to", l.to},
                                           {"susceptance", l.susceptance},
                                           {"capacity", l.capacity}});
    doc["hours"] = s.hours;
    doc["units"] = json::array();
    for (const GeneratingUnit& g : s.units)
        doc["units"].push_back({{"id", g.id},
                                {"node", g.node},
                                {"owner", g.owner == Owner::Firm ? "firm" : "other"},
                                {"params", detail::params_to_json(g.true_params)},
                                {"curve", detail::curve_to_json(g.true_curve)}});
    doc["demands"] = json::array();
    for (const DemandBid& bid : s.demands) {
        json hours = json::array();
        for (const HourlyDemand& hd : bid.hours) {
            json jh;
            if (hd.fixed) jh["fixed"] = *hd.fixed;
            if (!hd.blocks.empty()) {
                jh["blocks"] = json::array();
                for (const DemandBlock& b : hd.blocks)
                    jh["blocks"].push_back({{"mw", b.quantity}, {"value", b.value}});
            }
            hours.push_back(jh);
        }
        doc["demands"].push_back({{"node", bid.node}, {"hours", hours}});
    }
    doc["firm_units"] = s.firm_unit_ids;
    doc["regulator_estimate"] = json::array();
    for (const auto& [id, c] : loaded.estimate.claims)
        doc["regulator_estimate"].push_back({{"id", id},
                                             {"params", detail::params_to_json(c.params)},
                                             {"curve", detail::curve_to_json(c.curve)}});
    doc["distortion_grid"] = {{"price_scale", loaded.grid.price_scale},
                              {"price_add", loaded.grid.price_add},
                              {"withhold", loaded.grid.withhold},
                              {"ramp_scale", loaded.grid.ramp_scale}};
    return doc.dump(2) + "\n";
}

} // namespace nodal
