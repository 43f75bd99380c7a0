#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nodal/clearing.hpp"
#include "nodal/grid.hpp"
#include "nodal/regulation.hpp"

namespace nodal {

struct EnvelopeReport {
    bool applicable = false;
    std::string failure; // first infeasible probe when not applicable
    std::vector<FirmSchedule> path;
    double integral_estimate = 0.0;
    double objective_delta = 0.0;
    double residual = 0.0;
    double tolerance = 0.0;
    double path_mw = 0.0;
    bool pass = false;
};

struct ProjectionViolation {
    std::size_t claim_index = 0;
    FirmSchedule schedule;
};

struct ProjectionReport {
    std::size_t samples_per_claim = 0;
    std::vector<std::size_t> feasible_counts; // per claim: bounds+ramps+network accepted
    std::vector<ProjectionViolation> violations;
    std::size_t coverage_samples = 0; // truth-feasible schedules examined
    double union_coverage = 1.0;
};

struct ConservationReport {
    double residual = 0.0;
    bool pass = false;
};

namespace detail {

// Deterministic uniform draws: the mt19937_64 stream is standardized and
// the bit-to-double mapping is pinned here.
struct SampleRng {
    std::mt19937_64 gen;
    explicit SampleRng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }
};

inline std::vector<std::pair<std::string, int>> schedule_axes(const FirmSchedule& a) {
    std::vector<std::pair<std::string, int>> axes;
    for (const auto& [id, sched] : a)
        for (int h = 0; h < static_cast<int>(sched.size()); ++h) axes.push_back({id, h});
    return axes;
}

} // namespace detail

// Checks the envelope identity: the path integral of finite-difference
// nodal prices along an axis-parallel path through the firm's schedule
// space must equal the change of the restricted optimum between the
// endpoints. Prices are measured by central differences of the restricted
// objective rather than read from duals, so the check is independent of
// the dual-based price computation it validates. A detected kink widens
// the tolerance by the local price jump times the sampling step.
inline EnvelopeReport envelope_check(const Scenario& s, const FirmSchedule& x_start,
                                     const FirmSchedule& x_end, int steps,
                                     bool reverse_axis_order = false) {
    if (steps < 1) throw std::invalid_argument("envelope_check: steps must be >= 1");
    const FirmOffer offer = truthful_offer(s);
    constexpr double fd_step = 0.01; // MW

    EnvelopeReport rep;
    auto value_at = [&](const FirmSchedule& x) -> std::pair<bool, double> {
        try {
            return {true, restricted_clear(s, offer, x).other_welfare};
        } catch (const InfeasibleError&) {
            return {false, 0.0};
        } catch (const std::invalid_argument&) {
            return {false, 0.0};
        }
    };
    auto describe = [](const FirmSchedule& x) {
        std::string out = "{";
        for (const auto& [id, sched] : x) {
            out += id + ":[";
            for (std::size_t h = 0; h < sched.size(); ++h)
                out += (h ? "," : "") + std::to_string(sched[h]);
            out += "]";
        }
        return out + "}";
    };

    std::vector<std::pair<std::string, int>> axes = detail::schedule_axes(x_start);
    if (reverse_axis_order) std::reverse(axes.begin(), axes.end());

    // axis-parallel waypoints from start to end
    rep.path.push_back(x_start);
    FirmSchedule cur = x_start;
    for (const auto& [id, h] : axes) {
        const double target = x_end.at(id)[static_cast<std::size_t>(h)];
        if (std::fabs(cur[id][static_cast<std::size_t>(h)] - target) < 1e-12) continue;
        cur[id][static_cast<std::size_t>(h)] = target;
        rep.path.push_back(cur);
    }

    double integral = 0.0;
    double kink_widen = 0.0;
    for (std::size_t seg = 0; seg + 1 < rep.path.size(); ++seg) {
        const FirmSchedule& a = rep.path[seg];
        const FirmSchedule& b = rep.path[seg + 1];
        // the single coordinate that moves on this segment
        std::string unit;
        int hour = -1;
        for (const auto& [id, sched] : a)
            for (std::size_t h = 0; h < sched.size(); ++h)
                if (std::fabs(sched[h] - b.at(id)[h]) > 1e-12) {
                    unit = id;
                    hour = static_cast<int>(h);
                }
        const double from = a.at(unit)[static_cast<std::size_t>(hour)];
        const double to = b.at(unit)[static_cast<std::size_t>(hour)];
        rep.path_mw += std::fabs(to - from);

        const double dt = (to - from) / steps;
        std::vector<double> lambda(static_cast<std::size_t>(steps) + 1, 0.0);
        for (int i = 0; i <= steps; ++i) {
            FirmSchedule probe = a;
            const double t = from + dt * i;
            probe[unit][static_cast<std::size_t>(hour)] = t + fd_step;
            const auto up = value_at(probe);
            probe[unit][static_cast<std::size_t>(hour)] = t - fd_step;
            const auto dn = value_at(probe);
            if (!up.first || !dn.first) {
                rep.failure = "infeasible probe near " + unit + " h" + std::to_string(hour) +
                              " = " + std::to_string(t) + " in " + describe(a);
                return rep;
            }
            lambda[static_cast<std::size_t>(i)] = (up.second - dn.second) / (2.0 * fd_step);
        }
        for (int i = 0; i < steps; ++i) {
            integral += 0.5 * (lambda[static_cast<std::size_t>(i)] + lambda[static_cast<std::size_t>(i) + 1]) * dt;
            const double jump = std::fabs(lambda[static_cast<std::size_t>(i) + 1] - lambda[static_cast<std::size_t>(i)]);
            if (jump > 1e-6) kink_widen += jump * std::fabs(dt);
        }
    }

    const auto v0 = value_at(x_start);
    const auto v1 = value_at(x_end);
    if (!v0.first || !v1.first) {
        rep.failure = "infeasible endpoint";
        return rep;
    }
    rep.applicable = true;
    rep.integral_estimate = integral;
    rep.objective_delta = v1.second - v0.second;
    rep.residual = integral - rep.objective_delta;
    rep.tolerance = 1e-3 * std::max(1.0, rep.path_mw / 100.0) + kink_widen;
    rep.pass = std::fabs(rep.residual) <= rep.tolerance;
    return rep;
}

// Samples schedules from each claimed parameter set and verifies the
// projection inclusion: anything deliverable under an envelope-passing
// claim must be deliverable under the truth. Coverage measures how much
// of the truth-feasible schedule space the claimed set reaches.
inline ProjectionReport projection_check(const Scenario& s,
                                         const std::vector<std::map<std::string, TechParams>>& claimed_set,
                                         std::size_t samples, std::uint64_t seed) {
    std::map<std::string, TechParams> truth;
    std::map<std::string, OfferCurve> curves;
    for (const GeneratingUnit& g : s.units)
        if (g.owner == Owner::Firm) {
            truth[g.id] = g.true_params;
            curves[g.id] = g.true_curve;
        }
    for (std::size_t c = 0; c < claimed_set.size(); ++c) {
        for (const auto& [id, params] : claimed_set[c]) {
            if (!truth.count(id))
                throw std::invalid_argument("projection_check: unknown firm unit '" + id + "'");
            if (!is_within_true_envelope(params, truth.at(id)))
                throw std::invalid_argument("projection_check: claim " + std::to_string(c) +
                                            " for '" + id + "' fails the envelope test");
        }
        for (const auto& [id, params] : truth)
            if (!claimed_set[c].count(id))
                throw std::invalid_argument("projection_check: claim " + std::to_string(c) +
                                            " is missing firm unit '" + id + "'");
    }

    const std::size_t hours = static_cast<std::size_t>(s.hours);
    detail::SampleRng rng(seed);

    auto draw_schedule = [&](const std::map<std::string, TechParams>& params,
                             FirmSchedule& out) -> bool {
        // uniform per hour within bounds, rejection-filtered by ramps
        for (std::size_t tries = 0; tries < 200; ++tries) {
            out.clear();
            bool ok = true;
            for (const auto& [id, p] : params) {
                std::vector<double> sched(hours);
                for (std::size_t h = 0; h < hours; ++h) sched[h] = rng.uniform(p.p_min, p.p_max);
                if (!schedule_within_params(sched, p)) {
                    ok = false;
                    break;
                }
                out[id] = std::move(sched);
            }
            if (ok) return true;
        }
        return false;
    };
    auto network_feasible = [&](const std::map<std::string, TechParams>& params,
                                const FirmSchedule& x) {
        FirmOffer offer;
        for (const auto& [id, p] : params) offer.claims[id] = {p, curves.at(id)};
        try {
            restricted_clear(s, offer, x);
            return true;
        } catch (const InfeasibleError&) {
            return false;
        }
    };
    auto within_params = [&](const std::map<std::string, TechParams>& params, const FirmSchedule& x) {
        for (const auto& [id, p] : params)
            if (!schedule_within_params(x.at(id), p)) return false;
        return true;
    };

    ProjectionReport rep;
    rep.samples_per_claim = samples;
    rep.feasible_counts.assign(claimed_set.size(), 0);
    for (std::size_t c = 0; c < claimed_set.size(); ++c) {
        for (std::size_t k = 0; k < samples; ++k) {
            FirmSchedule x;
            if (!draw_schedule(claimed_set[c], x)) continue;
            if (!network_feasible(claimed_set[c], x)) continue;
            rep.feasible_counts[c] += 1;
            if (!within_params(truth, x)) rep.violations.push_back({c, x});
        }
    }

    std::size_t truth_feasible = 0, covered = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        FirmSchedule x;
        if (!draw_schedule(truth, x)) continue;
        if (!network_feasible(truth, x)) continue;
        ++truth_feasible;
        for (const auto& claim : claimed_set)
            if (within_params(claim, x)) {
                ++covered;
                break;
            }
    }
    rep.coverage_samples = truth_feasible;
    rep.union_coverage =
        truth_feasible == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(truth_feasible);
    return rep;
}

// Books must balance: what loads pay (LMP plus uplift shares) equals what
// generators and the congestion account collect, the firm at its
// administered revenue.
inline ConservationReport money_conservation_check(const Scenario& s, const RegulationOutcome& outcome,
                                                   const Settlement& settlement) {
    double load_side = outcome.uplift;
    for (const double p : settlement.load_payments) load_side += p;
    double gen_side = outcome.regulated_revenue + settlement.congestion_rent;
    for (std::size_t u = 0; u < s.units.size(); ++u)
        if (s.units[u].owner != Owner::Firm) gen_side += settlement.generator_receipts[u];
    ConservationReport rep;
    rep.residual = load_side - gen_side;
    rep.pass = std::fabs(rep.residual) <= 1e-6;
    return rep;
}

} // namespace nodal
