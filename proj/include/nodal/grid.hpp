#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nodal/dense.hpp"

namespace nodal {

struct Line {
    std::string from;
    std::string to;
    double susceptance = 0.0; // per unit
    double capacity = 0.0;    // MW, both directions

    bool operator==(const Line&) const = default;
};

struct Network {
    std::vector<std::string> nodes;
    std::vector<Line> lines;
    std::string reference;

    bool operator==(const Network&) const = default;

    int node_index(const std::string& name) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i] == name) return static_cast<int>(i);
        return -1;
    }
};

struct TechParams {
    double p_min = 0.0;
    double p_max = 0.0;
    double ramp_up = 0.0;   // MW per hour
    double ramp_down = 0.0; // MW per hour
    double p_initial = 0.0; // output in the hour before the horizon

    bool operator==(const TechParams&) const = default;
};

struct OfferBlock {
    double quantity = 0.0; // MW > 0
    double price = 0.0;    // money per MWh

    bool operator==(const OfferBlock&) const = default;
};

// Convex staircase: block prices must be nondecreasing.
struct OfferCurve {
    std::vector<OfferBlock> blocks;

    bool operator==(const OfferCurve&) const = default;

    double total_quantity() const {
        double q = 0.0;
        for (const OfferBlock& b : blocks) q += b.quantity;
        return q;
    }
};

enum class Owner { Firm, Other };

struct GeneratingUnit {
    std::string id;
    std::string node;
    Owner owner = Owner::Other;
    TechParams true_params;
    OfferCurve true_curve;

    bool operator==(const GeneratingUnit&) const = default;
};

struct DemandBlock {
    double quantity = 0.0; // MW > 0
    double value = 0.0;    // money per MWh

    bool operator==(const DemandBlock&) const = default;
};

// One hour of one bid: either a fixed quantity or a concave block stack.
struct HourlyDemand {
    std::optional<double> fixed;
    std::vector<DemandBlock> blocks;

    bool operator==(const HourlyDemand&) const = default;
};

struct DemandBid {
    std::string node;
    std::vector<HourlyDemand> hours; // exactly Scenario::hours entries

    bool operator==(const DemandBid&) const = default;
};

struct Scenario {
    Network network;
    std::vector<GeneratingUnit> units;
    std::vector<DemandBid> demands;
    int hours = 1;
    std::vector<std::string> firm_unit_ids;

    bool operator==(const Scenario&) const = default;

    std::vector<std::size_t> firm_unit_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t u = 0; u < units.size(); ++u)
            if (units[u].owner == Owner::Firm) out.push_back(u);
        return out;
    }
};

struct UnitClaim {
    TechParams params;
    OfferCurve curve;

    bool operator==(const UnitClaim&) const = default;
};

// The firm's submitted offer: cost curve plus technical parameters per unit.
struct FirmOffer {
    std::map<std::string, UnitClaim> claims;

    bool operator==(const FirmOffer&) const = default;
};

inline FirmOffer truthful_offer(const Scenario& s) {
    FirmOffer offer;
    for (const GeneratingUnit& u : s.units)
        if (u.owner == Owner::Firm) offer.claims[u.id] = {u.true_params, u.true_curve};
    return offer;
}

// Flow sensitivity of every line to a 1 MW injection at every node,
// withdrawn at the reference node. The reference column is identically zero.
struct Ptdf {
    std::vector<std::vector<double>> factor; // [line][node]
};

inline Ptdf compute_ptdf(const Network& net) {
    const std::size_t n = net.nodes.size();
    const int ref = net.node_index(net.reference);
    if (ref < 0) throw std::invalid_argument("network.reference: unknown node '" + net.reference + "'");
    for (const Line& l : net.lines) {
        if (net.node_index(l.from) < 0 || net.node_index(l.to) < 0)
            throw std::invalid_argument("network.lines: unknown endpoint on " + l.from + "-" + l.to);
        if (l.from == l.to)
            throw std::invalid_argument("network.lines: self-loop at " + l.from);
        if (!(l.susceptance > 0.0))
            throw std::invalid_argument("network.lines: susceptance must be positive on " + l.from + "-" + l.to);
    }

    // connectivity from the reference node
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{static_cast<std::size_t>(ref)};
    seen[static_cast<std::size_t>(ref)] = 1;
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (const Line& l : net.lines) {
            const std::size_t a = static_cast<std::size_t>(net.node_index(l.from));
            const std::size_t b = static_cast<std::size_t>(net.node_index(l.to));
            if (a == v && !seen[b]) { seen[b] = 1; stack.push_back(b); }
            if (b == v && !seen[a]) { seen[a] = 1; stack.push_back(a); }
        }
    }
    std::string orphans;
    for (std::size_t i = 0; i < n; ++i)
        if (!seen[i]) orphans += (orphans.empty() ? "" : ", ") + net.nodes[i];
    if (!orphans.empty())
        throw std::invalid_argument("network: disconnected component {" + orphans +
                                    "} unreachable from reference '" + net.reference + "'");

    // reduced susceptance matrix (reference row/column removed)
    const std::size_t nr = n - 1;
    std::vector<std::size_t> red(n, 0); // node -> reduced index
    {
        std::size_t k = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (i != static_cast<std::size_t>(ref)) red[i] = k++;
    }
    std::vector<double> bmat(nr * nr, 0.0);
    for (const Line& l : net.lines) {
        const std::size_t a = static_cast<std::size_t>(net.node_index(l.from));
        const std::size_t b = static_cast<std::size_t>(net.node_index(l.to));
        const double y = l.susceptance;
        if (a != static_cast<std::size_t>(ref)) bmat[red[a] * nr + red[a]] += y;
        if (b != static_cast<std::size_t>(ref)) bmat[red[b] * nr + red[b]] += y;
        if (a != static_cast<std::size_t>(ref) && b != static_cast<std::size_t>(ref)) {
            bmat[red[a] * nr + red[b]] -= y;
            bmat[red[b] * nr + red[a]] -= y;
        }
    }

    Ptdf out;
    out.factor.assign(net.lines.size(), std::vector<double>(n, 0.0));
    if (nr == 0) return out;

    const detail::LuFactors fac = detail::lu_factor(bmat, nr);
    if (fac.singular)
        throw std::invalid_argument("network: singular susceptance matrix");

    std::vector<double> rhs(nr, 0.0);
    for (std::size_t inj = 0; inj < n; ++inj) {
        if (inj == static_cast<std::size_t>(ref)) continue;
        std::fill(rhs.begin(), rhs.end(), 0.0);
        rhs[red[inj]] = 1.0;
        const std::vector<double> theta_red = detail::lu_solve(fac, rhs);
        for (std::size_t li = 0; li < net.lines.size(); ++li) {
            const Line& l = net.lines[li];
            const std::size_t a = static_cast<std::size_t>(net.node_index(l.from));
            const std::size_t b = static_cast<std::size_t>(net.node_index(l.to));
            const double ta = a == static_cast<std::size_t>(ref) ? 0.0 : theta_red[red[a]];
            const double tb = b == static_cast<std::size_t>(ref) ? 0.0 : theta_red[red[b]];
            out.factor[li][inj] = l.susceptance * (ta - tb);
        }
    }
    return out;
}

// Componentwise sufficient condition for the claim's feasible schedules to
// be a subset of the truth's. Past output is observable, so p_initial must
// match exactly.
inline bool is_within_true_envelope(const TechParams& claimed, const TechParams& truth) {
    return claimed.p_min >= truth.p_min && claimed.p_max <= truth.p_max &&
           claimed.ramp_up <= truth.ramp_up && claimed.ramp_down <= truth.ramp_down &&
           claimed.p_initial == truth.p_initial;
}

// Offered cost of producing `output` MW in one hour: the staircase integral,
// filling blocks in order. Beyond the declared staircase the last block
// price extends (only reachable for schedules the curve never offered).
inline double offered_cost(const OfferCurve& curve, double output) {
    double remaining = output;
    double cost = 0.0;
    double last_price = 0.0;
    for (const OfferBlock& b : curve.blocks) {
        const double take = std::min(remaining, b.quantity);
        if (take > 0.0) {
            cost += take * b.price;
            remaining -= take;
        }
        last_price = b.price;
    }
    if (remaining > 0.0) cost += remaining * last_price;
    return cost;
}

// Hourly bounds plus ramp feasibility of one unit's schedule under `params`.
inline bool schedule_within_params(const std::vector<double>& schedule, const TechParams& params,
                                   double tol = 1e-9) {
    double prev = params.p_initial;
    for (const double p : schedule) {
        if (p < params.p_min - tol || p > params.p_max + tol) return false;
        if (p - prev > params.ramp_up + tol) return false;
        if (prev - p > params.ramp_down + tol) return false;
        prev = p;
    }
    return true;
}

namespace detail {

inline constexpr double kCurveInf = 1e300;

// Structural scenario checks; the feasibility probe lives with the
// clearing engine. Each violation names the offending field.
inline std::vector<std::string> structural_violations(const Scenario& s) {
    std::vector<std::string> out;
    const Network& net = s.network;

    if (net.nodes.empty()) out.push_back("network.nodes: empty");
    {
        std::set<std::string> uniq(net.nodes.begin(), net.nodes.end());
        if (uniq.size() != net.nodes.size()) out.push_back("network.nodes: duplicate names");
    }
    if (net.node_index(net.reference) < 0)
        out.push_back("network.reference: unknown node '" + net.reference + "'");
    for (std::size_t i = 0; i < net.lines.size(); ++i) {
        const Line& l = net.lines[i];
        const std::string at = "network.lines[" + std::to_string(i) + "]";
        if (net.node_index(l.from) < 0) out.push_back(at + ".from: unknown node '" + l.from + "'");
        if (net.node_index(l.to) < 0) out.push_back(at + ".to: unknown node '" + l.to + "'");
        if (l.from == l.to) out.push_back(at + ": self-loop");
        if (!(l.susceptance > 0.0)) out.push_back(at + ".susceptance: must be > 0");
        if (l.capacity < 0.0) out.push_back(at + ".capacity: must be >= 0");
    }
    if (out.empty()) {
        try {
            compute_ptdf(net);
        } catch (const std::invalid_argument& e) {
            out.push_back(std::string(e.what()));
        }
    }

    if (s.hours < 1) out.push_back("hours: must be >= 1");

    std::set<std::string> unit_ids;
    std::size_t firm_count = 0, other_count = 0;
    for (std::size_t u = 0; u < s.units.size(); ++u) {
        const GeneratingUnit& g = s.units[u];
        const std::string at = "units[" + std::to_string(u) + "]";
        if (!unit_ids.insert(g.id).second) out.push_back(at + ".id: duplicate '" + g.id + "'");
        if (net.node_index(g.node) < 0) out.push_back(at + ".node: unknown node '" + g.node + "'");
        const TechParams& p = g.true_params;
        if (p.p_min < 0.0) out.push_back(at + ".params.p_min: must be >= 0");
        if (p.p_min > p.p_max) out.push_back(at + ".params.p_min: exceeds p_max");
        if (p.ramp_up < 0.0) out.push_back(at + ".params.ramp_up: must be >= 0");
        if (p.ramp_down < 0.0) out.push_back(at + ".params.ramp_down: must be >= 0");
        if (p.p_initial < 0.0) out.push_back(at + ".params.p_initial: must be >= 0");
        if (g.true_curve.blocks.empty()) out.push_back(at + ".curve: empty");
        double prev_price = -kCurveInf;
        for (std::size_t b = 0; b < g.true_curve.blocks.size(); ++b) {
            const OfferBlock& blk = g.true_curve.blocks[b];
            const std::string bat = at + ".curve[" + std::to_string(b) + "]";
            if (!(blk.quantity > 0.0)) out.push_back(bat + ".mw: must be > 0");
            if (blk.price < prev_price) out.push_back(bat + ".price: decreasing (offer must be convex)");
            prev_price = blk.price;
        }
        if (g.true_curve.total_quantity() < p.p_max - 1e-9)
            out.push_back(at + ".curve: offered quantity below p_max");
        (g.owner == Owner::Firm ? firm_count : other_count) += 1;
    }
    if (firm_count == 0) out.push_back("units: no firm-owned unit");
    if (other_count == 0) out.push_back("units: no unit owned by other players");

    {
        std::set<std::string> listed(s.firm_unit_ids.begin(), s.firm_unit_ids.end());
        std::set<std::string> owned;
        for (const GeneratingUnit& g : s.units)
            if (g.owner == Owner::Firm) owned.insert(g.id);
        if (listed != owned)
            out.push_back("firm_units: does not match units with owner=firm");
    }

    for (std::size_t d = 0; d < s.demands.size(); ++d) {
        const DemandBid& bid = s.demands[d];
        const std::string at = "demands[" + std::to_string(d) + "]";
        if (net.node_index(bid.node) < 0) out.push_back(at + ".node: unknown node '" + bid.node + "'");
        if (static_cast<int>(bid.hours.size()) != s.hours)
            out.push_back(at + ".hours: expected " + std::to_string(s.hours) + " entries, got " +
                          std::to_string(bid.hours.size()));
        for (std::size_t h = 0; h < bid.hours.size(); ++h) {
            const HourlyDemand& hd = bid.hours[h];
            const std::string hat = at + ".hours[" + std::to_string(h) + "]";
            if (hd.fixed.has_value() == !hd.blocks.empty())
                out.push_back(hat + ": exactly one of fixed/blocks required");
            if (hd.fixed && *hd.fixed < 0.0) out.push_back(hat + ".fixed: must be >= 0");
            double prev_value = kCurveInf;
            for (std::size_t b = 0; b < hd.blocks.size(); ++b) {
                const DemandBlock& blk = hd.blocks[b];
                const std::string bat = hat + ".blocks[" + std::to_string(b) + "]";
                if (!(blk.quantity > 0.0)) out.push_back(bat + ".mw: must be > 0");
                if (blk.value > prev_value) out.push_back(bat + ".value: increasing (bid must be concave)");
                prev_value = blk.value;
            }
        }
    }

    for (int h = 0; h < s.hours; ++h) {
        double capability = 0.0;
        for (const DemandBid& bid : s.demands) {
            if (h >= static_cast<int>(bid.hours.size())) continue;
            const HourlyDemand& hd = bid.hours[static_cast<std::size_t>(h)];
            if (hd.fixed) capability += *hd.fixed;
            for (const DemandBlock& b : hd.blocks) capability += b.quantity;
        }
        if (!(capability > 0.0))
            out.push_back("demands: hour " + std::to_string(h) + " has no demand capability");
    }
    return out;
}

} // namespace detail

} // namespace nodal
