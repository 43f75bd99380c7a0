#pragma once

#include <map>
#include <string>
#include <vector>

#include "nodal/grid.hpp"
#include "nodal/regulation.hpp"
#include "nodal/strategy.hpp"

namespace fixtures {

using namespace nodal;

// Two nodes, one 50 MW line; the firm's cheap unit exports to the load
// pocket. Hand-solvable: dispatch (50, 70), prices (10, 30), rent 1000.
inline Scenario twonode() {
    Scenario s;
    s.network.nodes = {"n1", "n2"};
    s.network.lines = {{"n1", "n2", 1.0, 50.0}};
    s.network.reference = "n1";
    s.units = {
        {"g1", "n1", Owner::Firm, {0.0, 100.0, 100.0, 100.0, 0.0}, {{{100.0, 10.0}}}},
        {"o1", "n2", Owner::Other, {0.0, 100.0, 100.0, 100.0, 0.0}, {{{100.0, 30.0}}}},
    };
    s.demands = {{"n2", {{120.0, {}}}}};
    s.hours = 1;
    s.firm_unit_ids = {"g1"};
    return s;
}

// Same grid with the line limit relaxed: a single system price set by o1.
inline Scenario twonode_uncongested() {
    Scenario s = twonode();
    s.network.lines[0].capacity = 200.0;
    return s;
}

// Variant with o1 large enough that the firm's whole output range stays
// deliverable; used for path-integral checks.
inline Scenario twonode_envelope() {
    Scenario s = twonode();
    s.units[1].true_params.p_max = 200.0;
    s.units[1].true_params.ramp_up = 200.0;
    s.units[1].true_params.ramp_down = 200.0;
    s.units[1].true_curve.blocks = {{200.0, 30.0}};
    return s;
}

// Two hours with a 30 MW/h ramp limit on the firm unit.
inline Scenario twonode_ramped() {
    Scenario s = twonode();
    s.hours = 2;
    s.units[0].true_params.ramp_up = 30.0;
    s.units[0].true_params.ramp_down = 30.0;
    s.demands = {{"n2", {{120.0, {}}, {120.0, {}}}}};
    return s;
}

// One node, two units, elastic load: demand sets the price when the cheap
// unit runs out.
inline Scenario singlenode_elastic() {
    Scenario s;
    s.network.nodes = {"n1"};
    s.network.lines = {};
    s.network.reference = "n1";
    s.units = {
        {"f1", "n1", Owner::Firm, {0.0, 10.0, 10.0, 10.0, 0.0}, {{{10.0, 90.0}}}},
        {"o1", "n1", Owner::Other, {0.0, 60.0, 60.0, 60.0, 0.0}, {{{60.0, 20.0}}}},
    };
    s.demands = {{"n1", {{std::nullopt, {{100.0, 50.0}}}}}};
    s.hours = 1;
    s.firm_unit_ids = {"f1"};
    return s;
}

// Five nodes, two hours, two firm units with binding ramps, block offers,
// and elastic load at n2. Line limits are generous so hourly prices are
// uniform; the interest is in the inter-hour coupling.
inline Scenario fivenode() {
    Scenario s;
    s.network.nodes = {"n1", "n2", "n3", "n4", "n5"};
    s.network.lines = {
        {"n1", "n2", 12.0, 200.0}, {"n1", "n3", 10.0, 200.0}, {"n2", "n3", 8.0, 200.0},
        {"n2", "n4", 10.0, 200.0}, {"n3", "n5", 10.0, 200.0}, {"n4", "n5", 6.0, 200.0},
    };
    s.network.reference = "n1";
    s.units = {
        {"f1", "n1", Owner::Firm, {0.0, 120.0, 40.0, 40.0, 40.0}, {{{60.0, 12.0}, {60.0, 18.0}}}},
        {"f2", "n4", Owner::Firm, {0.0, 80.0, 25.0, 25.0, 20.0}, {{{40.0, 20.0}, {40.0, 26.0}}}},
        {"o1", "n2", Owner::Other, {0.0, 150.0, 150.0, 150.0, 0.0}, {{{80.0, 25.0}, {70.0, 34.0}}}},
        {"o2", "n3", Owner::Other, {0.0, 100.0, 100.0, 100.0, 0.0}, {{{100.0, 45.0}}}},
        {"o3", "n5", Owner::Other, {0.0, 90.0, 90.0, 90.0, 0.0}, {{{90.0, 31.0}}}},
    };
    s.demands = {
        {"n3", {{70.0, {}}, {110.0, {}}}},
        {"n5", {{90.0, {}}, {125.0, {}}}},
        {"n2", {{std::nullopt, {{30.0, 55.0}, {20.0, 38.0}}}, {std::nullopt, {{40.0, 60.0}, {20.0, 42.0}}}}},
    };
    s.hours = 2;
    s.firm_unit_ids = {"f1", "f2"};
    return s;
}

// Market-power exhibit: the firm is pivotal behind a 20 MW import limit.
// Pricing out the 22-value elastic block is strictly profitable without
// regulation and destroys welfare.
inline Scenario exhibit() {
    Scenario s;
    s.network.nodes = {"n1", "n2"};
    s.network.lines = {{"n1", "n2", 1.0, 20.0}};
    s.network.reference = "n1";
    s.units = {
        {"o1", "n1", Owner::Other, {0.0, 200.0, 200.0, 200.0, 0.0}, {{{200.0, 10.0}}}},
        {"f1", "n2", Owner::Firm, {0.0, 150.0, 150.0, 150.0, 0.0}, {{{150.0, 20.0}}}},
    };
    s.demands = {
        {"n2", {{100.0, {}}}},
        {"n2", {{std::nullopt, {{50.0, 22.0}}}}},
    };
    s.hours = 1;
    s.firm_unit_ids = {"f1"};
    return s;
}

// Small integer-valued system for brute-force dispatch enumeration.
inline Scenario tiny_enum() {
    Scenario s;
    s.network.nodes = {"n1", "n2"};
    s.network.lines = {{"n1", "n2", 1.0, 3.0}};
    s.network.reference = "n1";
    s.units = {
        {"u1", "n1", Owner::Other, {0.0, 6.0, 2.0, 6.0, 3.0}, {{{6.0, 10.0}}}},
        {"u2", "n2", Owner::Firm, {0.0, 6.0, 6.0, 6.0, 0.0}, {{{3.0, 20.0}, {3.0, 28.0}}}},
        {"u3", "n2", Owner::Other, {0.0, 4.0, 4.0, 4.0, 0.0}, {{{4.0, 35.0}}}},
    };
    s.demands = {{"n2", {{7.0, {}}, {8.0, {}}}}};
    s.hours = 2;
    s.firm_unit_ids = {"u2"};
    return s;
}

inline RegulatorEstimate estimate_price_scaled(const Scenario& s, double factor) {
    RegulatorEstimate e = exact_estimate(s);
    for (auto& [id, claim] : e.claims)
        for (OfferBlock& b : claim.curve.blocks) b.price *= factor;
    return e;
}

inline RegulatorEstimate estimate_pmax_scaled(const Scenario& s, double factor) {
    RegulatorEstimate e = exact_estimate(s);
    for (auto& [id, claim] : e.claims) claim.params.p_max *= factor;
    return e;
}

inline RegulatorEstimate estimate_ramp_scaled(const Scenario& s, double factor) {
    RegulatorEstimate e = exact_estimate(s);
    for (auto& [id, claim] : e.claims) {
        claim.params.ramp_up *= factor;
        claim.params.ramp_down *= factor;
    }
    return e;
}

// The estimate shipped in the fivenode document: +20% on every firm price.
inline RegulatorEstimate fivenode_doc_estimate() {
    const Scenario s = fivenode();
    RegulatorEstimate e = exact_estimate(s);
    e.claims.at("f1").curve.blocks = {{60.0, 14.4}, {60.0, 21.6}};
    e.claims.at("f2").curve.blocks = {{40.0, 24.0}, {40.0, 31.2}};
    return e;
}

// The two-node example estimate that prices g1 at 12 with exact parameters.
inline RegulatorEstimate estimate_g1_at(const Scenario& s, double price) {
    RegulatorEstimate e = exact_estimate(s);
    e.claims.at("g1").curve.blocks = {{100.0, price}};
    return e;
}

inline GridSpec small_grid() {
    GridSpec g;
    g.price_scale = {0.5, 1.0, 1.5, 2.0};
    g.price_add = {0.0};
    g.withhold = {0.0, 0.25, 0.5};
    g.ramp_scale = {1.0};
    return g;
}

} // namespace fixtures
