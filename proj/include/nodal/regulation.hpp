#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nodal/clearing.hpp"
#include "nodal/grid.hpp"

namespace nodal {

// The regulator's estimate of the firm's true offer. Unlike a submitted
// offer, it need not lie within the true envelope: regulator error is
// arbitrary and is exactly what the settlement rule must absorb.
struct RegulatorEstimate {
    std::map<std::string, UnitClaim> claims;

    bool operator==(const RegulatorEstimate&) const = default;

    FirmOffer as_offer() const { return FirmOffer{claims}; }
};

inline RegulatorEstimate exact_estimate(const Scenario& s) {
    return RegulatorEstimate{truthful_offer(s).claims};
}

struct RegulationOutcome {
    ClearingResult base_run;      // submitted offer
    ClearingResult reference_run; // regulator's estimate in place of the offer
    double reference_firm_revenue = 0.0; // firm's LMP revenue in the reference run
    double offset_constant = 0.0;        // reference revenue minus reference other-welfare
    double regulated_revenue = 0.0;
    double lmp_revenue_at_base = 0.0;
    double uplift = 0.0;
    std::vector<double> allocations; // per demand bid, sums to uplift
};

struct ProfitReport {
    double proposed_profit = 0.0;
    double standard_profit = 0.0;
    double welfare_deviation = 0.0; // reference vs truthful outcome at true costs
    double identity_residual = 0.0;
};

enum class UpliftRule { ProRataConsumption };

namespace detail {

inline double firm_lmp_revenue(const Scenario& s, const ClearingResult& res) {
    double rev = 0.0;
    for (std::size_t u = 0; u < s.units.size(); ++u) {
        if (s.units[u].owner != Owner::Firm) continue;
        const std::size_t ni = static_cast<std::size_t>(s.network.node_index(s.units[u].node));
        for (int h = 0; h < s.hours; ++h)
            rev += res.lmp[ni][static_cast<std::size_t>(h)] *
                   res.dispatch.unit_output[u][static_cast<std::size_t>(h)];
    }
    return rev;
}

inline void check_submitted_offer(const Scenario& s, const FirmOffer& offer) {
    std::size_t firm_units = 0;
    for (const GeneratingUnit& g : s.units) {
        if (g.owner != Owner::Firm) continue;
        ++firm_units;
        const auto it = offer.claims.find(g.id);
        if (it == offer.claims.end())
            throw std::invalid_argument("offer: missing claim for firm unit '" + g.id + "'");
        const UnitClaim& c = it->second;
        if (!is_within_true_envelope(c.params, g.true_params))
            throw std::invalid_argument("offer: claimed parameters for '" + g.id +
                                        "' leave the deliverable envelope");
        double prev = -detail::kCurveInf;
        for (const OfferBlock& b : c.curve.blocks) {
            if (!(b.quantity > 0.0))
                throw std::invalid_argument("offer: nonpositive block for '" + g.id + "'");
            if (b.price < prev)
                throw std::invalid_argument("offer: decreasing block prices for '" + g.id + "'");
            prev = b.price;
        }
        if (c.curve.total_quantity() < c.params.p_max - 1e-9)
            throw std::invalid_argument("offer: curve for '" + g.id + "' does not cover claimed p_max");
    }
    if (offer.claims.size() != firm_units)
        throw std::invalid_argument("offer: claim set does not match the firm's units");
}

} // namespace detail

/// Pro-rata lump-sum allocation of an uplift (or rebate) over the cleared
/// consumption of the base run.
inline std::vector<double> allocate_uplift(const Scenario& s, const ClearingResult& base,
                                           double uplift,
                                           UpliftRule rule = UpliftRule::ProRataConsumption) {
    (void)rule;
    std::vector<double> mwh(s.demands.size(), 0.0);
    double total = 0.0;
    for (std::size_t d = 0; d < s.demands.size(); ++d) {
        for (int h = 0; h < s.hours; ++h) mwh[d] += base.dispatch.consumption[d][static_cast<std::size_t>(h)];
        total += mwh[d];
    }
    if (!(total > 0.0))
        throw std::invalid_argument("allocate_uplift: no cleared consumption to allocate over");
    std::vector<double> out(s.demands.size(), 0.0);
    for (std::size_t d = 0; d < s.demands.size(); ++d) out[d] = uplift * (mwh[d] / total);
    return out;
}

// Runs the regulation pipeline: the base clearing with the submitted offer
// is final for dispatch and prices; a second clearing with the regulator's
// estimate fixes the firm's administered revenue. The firm's revenue is the
// estimate-run LMP revenue plus the base-vs-reference difference of the
// other players' welfare; its gap to plain LMP revenue is the market-wide
// uplift (or downlift), allocated pro rata over consumption.
inline RegulationOutcome run_regulation(const Scenario& s, const FirmOffer& submitted,
                                        const RegulatorEstimate& estimate) {
    detail::check_submitted_offer(s, submitted);
    RegulationOutcome out;
    out.base_run = clear(s, submitted);
    out.reference_run = clear(s, estimate.as_offer());
    out.reference_firm_revenue = detail::firm_lmp_revenue(s, out.reference_run);
    out.offset_constant = out.reference_firm_revenue - out.reference_run.other_welfare;
    out.regulated_revenue =
        out.reference_firm_revenue + out.base_run.other_welfare - out.reference_run.other_welfare;
    out.lmp_revenue_at_base = detail::firm_lmp_revenue(s, out.base_run);
    out.uplift = out.regulated_revenue - out.lmp_revenue_at_base;
    out.allocations = allocate_uplift(s, out.base_run, out.uplift);
    return out;
}

/// Firm's profit under the proposed settlement: administered revenue minus
/// the true cost of the delivered schedule.
inline double regulated_profit(const Scenario& s, const FirmOffer& submitted,
                               const RegulatorEstimate& estimate) {
    const RegulationOutcome out = run_regulation(s, submitted, estimate);
    return out.regulated_revenue - out.base_run.firm_true_cost;
}

/// Firm's profit when its offer is simply replaced by the estimate: the
/// reference-run LMP revenue minus the true cost of the reference schedule.
inline double standard_method(const Scenario& s, const RegulatorEstimate& estimate) {
    const ClearingResult ref = clear(s, estimate.as_offer());
    return detail::firm_lmp_revenue(s, ref) - ref.firm_true_cost;
}

/// Evaluates both settlement methods with a truthful submitted offer and
/// reports the identity linking them: proposed profit equals the standard
/// profit minus the welfare deviation caused by the estimate error.
inline ProfitReport compare_methods(const Scenario& s, const RegulatorEstimate& estimate) {
    const RegulationOutcome out = run_regulation(s, truthful_offer(s), estimate);
    ProfitReport rep;
    rep.proposed_profit = out.regulated_revenue - out.base_run.firm_true_cost;
    rep.standard_profit = out.reference_firm_revenue - out.reference_run.firm_true_cost;
    const double true_welfare_base = out.base_run.other_welfare - out.base_run.firm_true_cost;
    const double true_welfare_ref = out.reference_run.other_welfare - out.reference_run.firm_true_cost;
    rep.welfare_deviation = true_welfare_ref - true_welfare_base;
    rep.identity_residual = rep.proposed_profit - (-rep.welfare_deviation + rep.standard_profit);
    return rep;
}

} // namespace nodal
