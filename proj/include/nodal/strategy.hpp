#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nodal/clearing.hpp"
#include "nodal/grid.hpp"
#include "nodal/regulation.hpp"

namespace nodal {

// One admissible distortion of the firm's offer. Every resulting claim
// stays inside the true envelope: prices move freely, capacity can only
// be withheld, ramps only tightened.
struct DistortionSpec {
    double price_scale = 1.0; // multiplies every block price
    double price_add = 0.0;   // money/MWh added to every block price
    double withhold = 0.0;    // claimed p_max = true p_max * (1 - withhold)
    double ramp_scale = 1.0;  // claimed ramps = true ramps * ramp_scale

    bool is_truthful() const {
        return price_scale == 1.0 && price_add == 0.0 && withhold == 0.0 && ramp_scale == 1.0;
    }
};

struct GridSpec {
    std::vector<double> price_scale;
    std::vector<double> price_add;
    std::vector<double> withhold;
    std::vector<double> ramp_scale;

    // 13 x 5 x 5 x 3 grid centered on the truthful point.
    static GridSpec defaults() {
        GridSpec g;
        for (int i = 0; i < 13; ++i) g.price_scale.push_back(0.25 + 0.25 * i);
        g.price_add = {-10.0, -5.0, 0.0, 5.0, 10.0};
        g.withhold = {0.0, 0.125, 0.25, 0.375, 0.5};
        g.ramp_scale = {0.5, 0.75, 1.0};
        return g;
    }

    std::vector<DistortionSpec> points() const {
        std::vector<DistortionSpec> out;
        for (const double a : price_scale)
            for (const double b : price_add)
                for (const double w : withhold)
                    for (const double r : ramp_scale) out.push_back({a, b, w, r});
        return out;
    }
};

struct SweepPoint {
    DistortionSpec spec;
    bool feasible = false;
    double profit_unregulated = 0.0;
    double profit_standard = 0.0;
    double profit_proposed = 0.0;
    double deadweight_loss = 0.0;
    std::uint64_t fingerprint = 0;     // rounded dispatch hash
    std::uint64_t exact_outcome = 0;   // bit-exact dispatch+price hash
    double uplift = 0.0;
};

enum class Regime { Unregulated, Standard, Proposed };

struct SweepResult {
    std::vector<SweepPoint> grid;
    std::size_t truthful_index = 0;

    double profit(std::size_t i, Regime r) const {
        const SweepPoint& p = grid[i];
        switch (r) {
            case Regime::Unregulated: return p.profit_unregulated;
            case Regime::Standard: return p.profit_standard;
            case Regime::Proposed: return p.profit_proposed;
        }
        return 0.0;
    }

    // Indices within 1e-6 of the best feasible profit.
    std::vector<std::size_t> tie_set(Regime r, double tol = 1e-6) const {
        double best = -detail::kCurveInf;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (grid[i].feasible) best = std::max(best, profit(i, r));
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (grid[i].feasible && profit(i, r) >= best - tol) out.push_back(i);
        return out;
    }

    // Representative maximizer: the truthful point when it ties for the
    // maximum (no forecast needed to play it), otherwise the lowest index.
    std::size_t argmax(Regime r, double tol = 1e-6) const {
        const std::vector<std::size_t> ties = tie_set(r, tol);
        for (const std::size_t i : ties)
            if (i == truthful_index) return i;
        return ties.front();
    }
};

/// Builds the firm offer produced by one distortion of the truth.
inline FirmOffer apply_distortion(const Scenario& s, const DistortionSpec& spec) {
    if (spec.price_scale < 0.0 || spec.withhold < 0.0 || spec.withhold > 1.0 ||
        spec.ramp_scale <= 0.0 || spec.ramp_scale > 1.0)
        throw std::invalid_argument("distortion: outside the admissible envelope");
    FirmOffer offer;
    for (const GeneratingUnit& g : s.units) {
        if (g.owner != Owner::Firm) continue;
        UnitClaim c;
        c.params = g.true_params;
        c.params.p_max = g.true_params.p_max * (1.0 - spec.withhold);
        c.params.ramp_up = g.true_params.ramp_up * spec.ramp_scale;
        c.params.ramp_down = g.true_params.ramp_down * spec.ramp_scale;
        if (c.params.p_max < c.params.p_min - 1e-12)
            throw std::invalid_argument("distortion: claimed p_max below p_min for '" + g.id + "'");
        c.curve = g.true_curve;
        for (OfferBlock& b : c.curve.blocks) b.price = spec.price_scale * b.price + spec.price_add;
        offer.claims[g.id] = std::move(c);
    }
    return offer;
}

/// Welfare shortfall of clearing a distorted offer, re-priced at true cost,
/// relative to the truthful-offer outcome. Nonnegative for admissible offers.
inline double deadweight_loss(const Scenario& s, const FirmOffer& submitted) {
    detail::check_submitted_offer(s, submitted);
    const ClearingResult truth = clear(s, truthful_offer(s));
    const ClearingResult dist = clear(s, submitted);
    return (truth.other_welfare - truth.firm_true_cost) -
           (dist.other_welfare - dist.firm_true_cost);
}

// Evaluates every grid point under all three regimes against one fixed
// estimate, so the settlement offset cannot be moved by the firm's offer.
// Infeasible points (over-withheld capacity) are recorded, not fatal.
inline SweepResult best_response_sweep(const Scenario& s, const RegulatorEstimate& estimate,
                                       const GridSpec& grid) {
    const std::vector<DistortionSpec> specs = grid.points();
    std::size_t truthful = specs.size();
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].is_truthful()) {
            truthful = i;
            break;
        }
    if (truthful == specs.size())
        throw std::invalid_argument("sweep: grid must include the truthful point");

    const ClearingResult truth_run = clear(s, truthful_offer(s));
    const double optimal_true_welfare = truth_run.other_welfare - truth_run.firm_true_cost;

    const ClearingResult ref = clear(s, estimate.as_offer());
    const double ref_revenue = detail::firm_lmp_revenue(s, ref);
    const double standard = ref_revenue - ref.firm_true_cost;

    SweepResult out;
    out.truthful_index = truthful;
    out.grid.reserve(specs.size());
    for (const DistortionSpec& spec : specs) {
        SweepPoint pt;
        pt.spec = spec;
        pt.profit_standard = standard;
        try {
            const FirmOffer offer = apply_distortion(s, spec);
            const ClearingResult base = clear(s, offer);
            const double lmp_rev = detail::firm_lmp_revenue(s, base);
            const double regulated_revenue =
                ref_revenue + base.other_welfare - ref.other_welfare;
            pt.feasible = true;
            pt.profit_unregulated = lmp_rev - base.firm_true_cost;
            pt.profit_proposed = regulated_revenue - base.firm_true_cost;
            pt.deadweight_loss =
                optimal_true_welfare - (base.other_welfare - base.firm_true_cost);
            pt.fingerprint = dispatch_fingerprint(base.dispatch);
            pt.exact_outcome = exact_outcome_hash(base);
            pt.uplift = regulated_revenue - lmp_rev;
        } catch (const InfeasibleError&) {
            pt.feasible = false;
        } catch (const std::invalid_argument&) {
            pt.feasible = false;
        }
        out.grid.push_back(pt);
    }
    return out;
}

} // namespace nodal
