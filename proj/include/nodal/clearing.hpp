#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nodal/grid.hpp"
#include "nodal/lp.hpp"

namespace nodal {

// Firm dispatch as a parameter: unit id -> MW per hour.
using FirmSchedule = std::map<std::string, std::vector<double>>;

class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(std::string what, std::vector<std::string> details)
        : std::runtime_error(std::move(what)), details_(std::move(details)) {}
    const std::vector<std::string>& details() const { return details_; }

private:
    std::vector<std::string> details_;
};

struct VarRef {
    enum class Kind { GenBlock, DemandBlock };
    Kind kind = Kind::GenBlock;
    std::size_t owner = 0; // unit index or demand index
    std::size_t block = 0;
    int hour = 0;
};

struct RowRef {
    enum class Kind { Balance, FlowUpper, FlowLower, CapUpper, CapLower, RampUp, RampDown };
    Kind kind = Kind::Balance;
    std::size_t index = 0; // line index for flows, unit index for caps/ramps
    int hour = 0;
};

struct AssembledLp {
    LinearProgram lp;
    std::vector<VarRef> vars;
    std::vector<RowRef> rows;
    Ptdf ptdf;
};

struct Dispatch {
    std::vector<std::vector<double>> unit_output; // [unit][hour] MW
    std::vector<std::vector<double>> consumption; // [demand][hour] MW
    std::vector<std::vector<double>> flows;       // [line][hour] MW, from->to positive
};

struct ClearingResult {
    Dispatch dispatch;
    std::vector<std::vector<double>> lmp; // [node][hour]
    double objective = 0.0;               // bid value minus offered cost, as submitted
    double other_welfare = 0.0;           // objective with the firm's offered cost excluded
    double firm_offered_cost = 0.0;       // firm cost at the submitted curve
    double firm_true_cost = 0.0;          // firm cost re-priced at the true curve
    std::vector<std::string> binding_rows;
    LpSolution solution;
    std::vector<RowRef> row_refs;
};

struct Settlement {
    std::vector<double> generator_receipts; // per unit, LMP x output
    std::vector<double> load_payments;      // per demand bid, LMP x consumption
    double congestion_rent = 0.0;
};

namespace detail {

inline const UnitClaim& claim_for(const Scenario& s, const FirmOffer& offer, std::size_t u,
                                  UnitClaim& scratch) {
    const GeneratingUnit& g = s.units[u];
    if (g.owner == Owner::Firm) {
        const auto it = offer.claims.find(g.id);
        if (it == offer.claims.end())
            throw std::invalid_argument("offer: missing claim for firm unit '" + g.id + "'");
        return it->second;
    }
    scratch = {g.true_params, g.true_curve};
    return scratch;
}

inline std::string row_label(const Scenario& s, const RowRef& r) {
    const std::string h = " h" + std::to_string(r.hour);
    switch (r.kind) {
        case RowRef::Kind::Balance: return "balance" + h;
        case RowRef::Kind::FlowUpper:
            return "flow+ " + s.network.lines[r.index].from + "-" + s.network.lines[r.index].to + h;
        case RowRef::Kind::FlowLower:
            return "flow- " + s.network.lines[r.index].from + "-" + s.network.lines[r.index].to + h;
        case RowRef::Kind::CapUpper: return "p_max " + s.units[r.index].id + h;
        case RowRef::Kind::CapLower: return "p_min " + s.units[r.index].id + h;
        case RowRef::Kind::RampUp: return "ramp_up " + s.units[r.index].id + h;
        case RowRef::Kind::RampDown: return "ramp_down " + s.units[r.index].id + h;
    }
    return "?";
}

// Builds the clearing LP. When `fixed_firm` is given, the firm's units are
// held at that schedule and enter only as fixed nodal injections; the
// objective is then the other players' welfare alone.
inline AssembledLp build_clearing_lp(const Scenario& s, const FirmOffer& offer,
                                     const FirmSchedule* fixed_firm) {
    const std::size_t n_nodes = s.network.nodes.size();
    const std::size_t n_lines = s.network.lines.size();
    const int hours = s.hours;

    AssembledLp out;
    out.ptdf = compute_ptdf(s.network);

    // net fixed injection per node-hour: firm schedule (restricted mode)
    // minus fixed demand
    std::vector<std::vector<double>> fix_inj(n_nodes, std::vector<double>(hours, 0.0));
    for (const DemandBid& bid : s.demands) {
        const std::size_t ni = static_cast<std::size_t>(s.network.node_index(bid.node));
        for (int h = 0; h < hours; ++h)
            if (bid.hours[static_cast<std::size_t>(h)].fixed)
                fix_inj[ni][h] -= *bid.hours[static_cast<std::size_t>(h)].fixed;
    }
    if (fixed_firm) {
        for (std::size_t u = 0; u < s.units.size(); ++u) {
            const GeneratingUnit& g = s.units[u];
            if (g.owner != Owner::Firm) continue;
            const auto it = fixed_firm->find(g.id);
            if (it == fixed_firm->end() || static_cast<int>(it->second.size()) != hours)
                throw std::invalid_argument("restricted clear: schedule missing for unit '" + g.id + "'");
            const std::size_t ni = static_cast<std::size_t>(s.network.node_index(g.node));
            for (int h = 0; h < hours; ++h) fix_inj[ni][h] += it->second[static_cast<std::size_t>(h)];
        }
    }

    // variables
    LinearProgram lp;
    UnitClaim scratch;
    for (int h = 0; h < hours; ++h) {
        for (std::size_t u = 0; u < s.units.size(); ++u) {
            if (fixed_firm && s.units[u].owner == Owner::Firm) continue;
            const UnitClaim& c = claim_for(s, offer, u, scratch);
            for (std::size_t b = 0; b < c.curve.blocks.size(); ++b) {
                lp.objective.push_back(-c.curve.blocks[b].price);
                lp.lower.push_back(0.0);
                lp.upper.push_back(c.curve.blocks[b].quantity);
                out.vars.push_back({VarRef::Kind::GenBlock, u, b, h});
            }
        }
        for (std::size_t d = 0; d < s.demands.size(); ++d) {
            const HourlyDemand& hd = s.demands[d].hours[static_cast<std::size_t>(h)];
            for (std::size_t b = 0; b < hd.blocks.size(); ++b) {
                lp.objective.push_back(hd.blocks[b].value);
                lp.lower.push_back(0.0);
                lp.upper.push_back(hd.blocks[b].quantity);
                out.vars.push_back({VarRef::Kind::DemandBlock, d, b, h});
            }
        }
    }
    const std::size_t nv = lp.objective.size();

    auto var_node = [&](const VarRef& v) {
        return static_cast<std::size_t>(s.network.node_index(
            v.kind == VarRef::Kind::GenBlock ? s.units[v.owner].node : s.demands[v.owner].node));
    };
    auto injection_sign = [](const VarRef& v) {
        return v.kind == VarRef::Kind::GenBlock ? 1.0 : -1.0;
    };

    for (int h = 0; h < hours; ++h) {
        // power balance
        {
            std::vector<double> coeffs(nv, 0.0);
            double rhs = 0.0;
            for (std::size_t j = 0; j < nv; ++j)
                if (out.vars[j].hour == h) coeffs[j] = injection_sign(out.vars[j]);
            for (std::size_t ni = 0; ni < n_nodes; ++ni) rhs -= fix_inj[ni][h];
            lp.add_eq(std::move(coeffs), rhs);
            out.rows.push_back({RowRef::Kind::Balance, 0, h});
        }
        // two-sided flow limits via PTDF
        for (std::size_t li = 0; li < n_lines; ++li) {
            std::vector<double> up_c(nv, 0.0), dn_c(nv, 0.0);
            for (std::size_t j = 0; j < nv; ++j) {
                if (out.vars[j].hour != h) continue;
                const double f = out.ptdf.factor[li][var_node(out.vars[j])] * injection_sign(out.vars[j]);
                up_c[j] = f;
                dn_c[j] = -f;
            }
            double fixed_flow = 0.0;
            for (std::size_t ni = 0; ni < n_nodes; ++ni)
                fixed_flow += out.ptdf.factor[li][ni] * fix_inj[ni][h];
            const double cap = s.network.lines[li].capacity;
            lp.add_le(std::move(up_c), cap - fixed_flow);
            out.rows.push_back({RowRef::Kind::FlowUpper, li, h});
            lp.add_le(std::move(dn_c), cap + fixed_flow);
            out.rows.push_back({RowRef::Kind::FlowLower, li, h});
        }
        // unit capacity and ramp coupling (redundant rows are not emitted)
        for (std::size_t u = 0; u < s.units.size(); ++u) {
            if (fixed_firm && s.units[u].owner == Owner::Firm) continue;
            const UnitClaim& c = claim_for(s, offer, u, scratch);
            const double hi = std::min(c.params.p_max, c.curve.total_quantity());
            const double lo = c.params.p_min;

            auto output_coeffs = [&](int hour, double sign) {
                std::vector<double> v(nv, 0.0);
                for (std::size_t j = 0; j < nv; ++j)
                    if (out.vars[j].kind == VarRef::Kind::GenBlock && out.vars[j].owner == u &&
                        out.vars[j].hour == hour)
                        v[j] = sign;
                return v;
            };

            if (c.params.p_max < c.curve.total_quantity() - 1e-12) {
                lp.add_le(output_coeffs(h, 1.0), c.params.p_max);
                out.rows.push_back({RowRef::Kind::CapUpper, u, h});
            }
            if (lo > 0.0) {
                lp.add_le(output_coeffs(h, -1.0), -lo);
                out.rows.push_back({RowRef::Kind::CapLower, u, h});
            }
            if (h == 0) {
                if (c.params.p_initial + c.params.ramp_up < hi - 1e-12) {
                    lp.add_le(output_coeffs(0, 1.0), c.params.p_initial + c.params.ramp_up);
                    out.rows.push_back({RowRef::Kind::RampUp, u, 0});
                }
                if (c.params.p_initial - c.params.ramp_down > lo + 1e-12) {
                    lp.add_le(output_coeffs(0, -1.0), c.params.ramp_down - c.params.p_initial);
                    out.rows.push_back({RowRef::Kind::RampDown, u, 0});
                }
            } else {
                if (c.params.ramp_up < hi - lo - 1e-12) {
                    std::vector<double> v = output_coeffs(h, 1.0);
                    const std::vector<double> prev = output_coeffs(h - 1, 1.0);
                    for (std::size_t j = 0; j < nv; ++j) v[j] -= prev[j];
                    lp.add_le(std::move(v), c.params.ramp_up);
                    out.rows.push_back({RowRef::Kind::RampUp, u, h});
                }
                if (c.params.ramp_down < hi - lo - 1e-12) {
                    std::vector<double> v = output_coeffs(h - 1, 1.0);
                    const std::vector<double> cur = output_coeffs(h, 1.0);
                    for (std::size_t j = 0; j < nv; ++j) v[j] -= cur[j];
                    lp.add_le(std::move(v), c.params.ramp_down);
                    out.rows.push_back({RowRef::Kind::RampDown, u, h});
                }
            }
        }
    }
    out.lp = std::move(lp);
    return out;
}

} // namespace detail

/// Assembles the welfare-maximization LP for a scenario and a firm offer.
inline AssembledLp assemble_lp(const Scenario& s, const FirmOffer& offer) {
    return detail::build_clearing_lp(s, offer, nullptr);
}

// Nodal prices from the balance and flow duals. The balance dual carries
// the price at the reference node (sign flipped: the stored dual is the
// objective change per extra MW of demand); flow duals shift it through
// the PTDF. Shared by the clearing engine and its tests so recomputation
// is bit-identical.
inline std::vector<std::vector<double>> lmps_from_duals(const Scenario& s, const Ptdf& ptdf,
                                                        const std::vector<RowRef>& rows,
                                                        const std::vector<double>& row_duals) {
    const std::size_t n_nodes = s.network.nodes.size();
    const std::size_t n_lines = s.network.lines.size();
    const std::size_t hours = static_cast<std::size_t>(s.hours);
    std::vector<double> bal(hours, 0.0);
    std::vector<std::vector<double>> fp(n_lines, std::vector<double>(hours, 0.0));
    std::vector<std::vector<double>> fm(n_lines, std::vector<double>(hours, 0.0));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const RowRef& ref = rows[r];
        const std::size_t h = static_cast<std::size_t>(ref.hour);
        if (ref.kind == RowRef::Kind::Balance) bal[h] = row_duals[r];
        if (ref.kind == RowRef::Kind::FlowUpper) fp[ref.index][h] = row_duals[r];
        if (ref.kind == RowRef::Kind::FlowLower) fm[ref.index][h] = row_duals[r];
    }
    std::vector<std::vector<double>> lmp(n_nodes, std::vector<double>(hours, 0.0));
    for (std::size_t ni = 0; ni < n_nodes; ++ni)
        for (std::size_t h = 0; h < hours; ++h) {
            double v = bal[h];
            for (std::size_t li = 0; li < n_lines; ++li)
                v += ptdf.factor[li][ni] * (fp[li][h] - fm[li][h]);
            lmp[ni][h] = -v;
        }
    return lmp;
}

namespace detail {

inline ClearingResult finish_clearing(const Scenario& s, const FirmOffer& offer,
                                      const FirmSchedule* fixed_firm, AssembledLp&& built) {
    LpSolution sol = solve(built.lp);
    if (sol.status == LpStatus::Infeasible) {
        std::vector<std::string> details;
        for (const std::size_t r : sol.infeasible_rows)
            details.push_back(row_label(s, built.rows[r]));
        if (details.empty()) details.push_back("no feasible dispatch");
        std::string what = std::string(fixed_firm ? "restricted " : "") +
                           "clearing infeasible: " + details.front();
        if (details.size() > 1) what += " (+" + std::to_string(details.size() - 1) + " more)";
        throw InfeasibleError(std::move(what), std::move(details));
    }
    if (sol.status == LpStatus::Unbounded)
        throw std::logic_error("clearing LP unbounded despite bounded blocks");

    const std::size_t hours = static_cast<std::size_t>(s.hours);
    ClearingResult res;
    res.dispatch.unit_output.assign(s.units.size(), std::vector<double>(hours, 0.0));
    res.dispatch.consumption.assign(s.demands.size(), std::vector<double>(hours, 0.0));
    res.dispatch.flows.assign(s.network.lines.size(), std::vector<double>(hours, 0.0));

    double elastic_value = 0.0, other_cost = 0.0, firm_cost = 0.0;
    UnitClaim scratch;
    for (std::size_t j = 0; j < built.vars.size(); ++j) {
        const VarRef& v = built.vars[j];
        const double x = sol.primal[j];
        const std::size_t h = static_cast<std::size_t>(v.hour);
        if (v.kind == VarRef::Kind::GenBlock) {
            res.dispatch.unit_output[v.owner][h] += x;
            const UnitClaim& c = claim_for(s, offer, v.owner, scratch);
            const double cost = c.curve.blocks[v.block].price * x;
            if (s.units[v.owner].owner == Owner::Firm)
                firm_cost += cost;
            else
                other_cost += cost;
        } else {
            res.dispatch.consumption[v.owner][h] += x;
            elastic_value += s.demands[v.owner].hours[h].blocks[v.block].value * x;
        }
    }
    for (std::size_t d = 0; d < s.demands.size(); ++d)
        for (std::size_t h = 0; h < hours; ++h)
            if (s.demands[d].hours[h].fixed)
                res.dispatch.consumption[d][h] += *s.demands[d].hours[h].fixed;

    if (fixed_firm) {
        for (std::size_t u = 0; u < s.units.size(); ++u) {
            const GeneratingUnit& g = s.units[u];
            if (g.owner != Owner::Firm) continue;
            const std::vector<double>& sched = fixed_firm->at(g.id);
            for (std::size_t h = 0; h < hours; ++h) {
                res.dispatch.unit_output[u][h] = sched[h];
                firm_cost += offered_cost(offer.claims.at(g.id).curve, sched[h]);
            }
        }
    }

    for (std::size_t u = 0; u < s.units.size(); ++u) {
        const GeneratingUnit& g = s.units[u];
        if (g.owner != Owner::Firm) continue;
        for (std::size_t h = 0; h < hours; ++h)
            res.firm_true_cost += offered_cost(g.true_curve, res.dispatch.unit_output[u][h]);
    }

    // flows from net injections
    for (std::size_t li = 0; li < s.network.lines.size(); ++li) {
        for (std::size_t h = 0; h < hours; ++h) {
            double f = 0.0;
            for (std::size_t ni = 0; ni < s.network.nodes.size(); ++ni) {
                double inj = 0.0;
                for (std::size_t u = 0; u < s.units.size(); ++u)
                    if (s.network.node_index(s.units[u].node) == static_cast<int>(ni))
                        inj += res.dispatch.unit_output[u][h];
                for (std::size_t d = 0; d < s.demands.size(); ++d)
                    if (s.network.node_index(s.demands[d].node) == static_cast<int>(ni))
                        inj -= res.dispatch.consumption[d][h];
                f += built.ptdf.factor[li][ni] * inj;
            }
            res.dispatch.flows[li][h] = f;
        }
    }

    res.lmp = lmps_from_duals(s, built.ptdf, built.rows, sol.row_duals);
    res.other_welfare = elastic_value - other_cost;
    res.firm_offered_cost = firm_cost;
    res.objective = res.other_welfare - res.firm_offered_cost;

    for (std::size_t r = 0; r < built.rows.size(); ++r) {
        double act = 0.0;
        for (std::size_t j = 0; j < built.vars.size(); ++j)
            act += built.lp.rows[r].coeffs[j] * sol.primal[j];
        if (std::fabs(built.lp.rows[r].rhs - act) <= 1e-7)
            res.binding_rows.push_back(row_label(s, built.rows[r]));
    }
    res.solution = std::move(sol);
    res.row_refs = built.rows;
    return res;
}

} // namespace detail

/// Clears the market for a scenario and firm offer; throws InfeasibleError
/// when no feasible dispatch exists.
inline ClearingResult clear(const Scenario& s, const FirmOffer& offer) {
    AssembledLp built = detail::build_clearing_lp(s, offer, nullptr);
    return detail::finish_clearing(s, offer, nullptr, std::move(built));
}

/// Clears with the firm's schedule held fixed. The reported other_welfare
/// is the other players' optimal welfare given that schedule.
inline ClearingResult restricted_clear(const Scenario& s, const FirmOffer& offer,
                                       const FirmSchedule& fixed) {
    for (const auto& [id, sched] : fixed) {
        const auto it = offer.claims.find(id);
        if (it == offer.claims.end())
            throw std::invalid_argument("restricted clear: '" + id + "' is not a firm unit");
        if (!schedule_within_params(sched, it->second.params))
            throw std::invalid_argument("restricted clear: schedule for '" + id +
                                        "' violates the claimed parameters");
    }
    AssembledLp built = detail::build_clearing_lp(s, offer, &fixed);
    return detail::finish_clearing(s, offer, &fixed, std::move(built));
}

/// LMP settlement of a cleared market: loads pay, generators receive,
/// the difference is congestion rent.
inline Settlement settle(const Scenario& s, const ClearingResult& res) {
    Settlement out;
    out.generator_receipts.assign(s.units.size(), 0.0);
    out.load_payments.assign(s.demands.size(), 0.0);
    const std::size_t hours = static_cast<std::size_t>(s.hours);
    double paid = 0.0, received = 0.0;
    for (std::size_t u = 0; u < s.units.size(); ++u) {
        const std::size_t ni = static_cast<std::size_t>(s.network.node_index(s.units[u].node));
        for (std::size_t h = 0; h < hours; ++h)
            out.generator_receipts[u] += res.lmp[ni][h] * res.dispatch.unit_output[u][h];
        received += out.generator_receipts[u];
    }
    for (std::size_t d = 0; d < s.demands.size(); ++d) {
        const std::size_t ni = static_cast<std::size_t>(s.network.node_index(s.demands[d].node));
        for (std::size_t h = 0; h < hours; ++h)
            out.load_payments[d] += res.lmp[ni][h] * res.dispatch.consumption[d][h];
        paid += out.load_payments[d];
    }
    out.congestion_rent = paid - received;
    return out;
}

/// All scenario checks: type invariants plus one truthful clearing attempt
/// to probe that the feasible set is nonempty. Empty result means valid.
inline std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> out = detail::structural_violations(s);
    if (!out.empty()) return out;
    try {
        clear(s, truthful_offer(s));
    } catch (const InfeasibleError& e) {
        out.push_back(std::string("scenario: ") + e.what());
    }
    return out;
}

// Order-stable hash of the dispatch rounded at 1e-6 MW; used to detect
// dispatch-invariant offer distortions.
inline std::uint64_t dispatch_fingerprint(const Dispatch& d) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    auto feed = [&](const std::vector<std::vector<double>>& m) {
        for (const auto& rowv : m)
            for (const double x : rowv)
                mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(std::llround(x * 1e6))));
    };
    feed(d.unit_output);
    feed(d.consumption);
    feed(d.flows);
    return h;
}

// Bit-exact hash over dispatch and prices (negative zero normalized);
// equal hashes certify bitwise-identical market outcomes.
inline std::uint64_t exact_outcome_hash(const ClearingResult& res) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](double x) {
        if (x == 0.0) x = 0.0; // collapse -0
        std::uint64_t v;
        static_assert(sizeof(v) == sizeof(x));
        __builtin_memcpy(&v, &x, sizeof(v));
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    for (const auto& rowv : res.dispatch.unit_output)
        for (const double x : rowv) mix(x);
    for (const auto& rowv : res.dispatch.consumption)
        for (const double x : rowv) mix(x);
    for (const auto& rowv : res.lmp)
        for (const double x : rowv) mix(x);
    return h;
}

} // namespace nodal
