// Command-line front end: clear | regulate | sweep | verify over a scenario
// document. Exit codes: 0 success, 1 usage, 2 parse/validation, 3 infeasible,
// 4 failed property check.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nodal/clearing.hpp"
#include "nodal/properties.hpp"
#include "nodal/regulation.hpp"
#include "nodal/report.hpp"
#include "nodal/scenario_io.hpp"
#include "nodal/strategy.hpp"

namespace {

using namespace nodal;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitPropertyFailure = 4;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("SIMSEED")) return std::strtoull(env, nullptr, 10);
    return 12345;
}

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

// "--grid price_scale=0.5,1,2;withhold=0,0.5" overrides individual axes.
void apply_grid_overrides(GridSpec& grid, const std::string& text) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = text.find(';', pos);
        const std::string clause = text.substr(pos, end == std::string::npos ? end : end - pos);
        pos = end == std::string::npos ? text.size() : end + 1;
        const std::size_t eq = clause.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--grid", "expected axis=v1,v2,...: '" + clause + "'");
        const std::string axis = clause.substr(0, eq);
        std::vector<double> values;
        std::size_t vpos = eq + 1;
        while (vpos <= clause.size()) {
            const std::size_t comma = clause.find(',', vpos);
            const std::string tok =
                clause.substr(vpos, comma == std::string::npos ? comma : comma - vpos);
            try {
                values.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw CLI::ValidationError("--grid", "bad number '" + tok + "'");
            }
            if (comma == std::string::npos) break;
            vpos = comma + 1;
        }
        if (values.empty()) throw CLI::ValidationError("--grid", "empty axis '" + axis + "'");
        if (axis == "price_scale")
            grid.price_scale = values;
        else if (axis == "price_add")
            grid.price_add = values;
        else if (axis == "withhold")
            grid.withhold = values;
        else if (axis == "ramp_scale")
            grid.ramp_scale = values;
        else
            throw CLI::ValidationError("--grid", "unknown axis '" + axis + "'");
    }
}

void write_clear_tables(const std::filesystem::path& out, const Scenario& s,
                        const ClearingResult& res, const Settlement& st) {
    std::vector<TableRow> lmp;
    for (std::size_t n = 0; n < s.network.nodes.size(); ++n)
        for (int h = 0; h < s.hours; ++h)
            lmp.push_back({s.network.nodes[n], std::to_string(h),
                           format_quantity(res.lmp[n][static_cast<std::size_t>(h)])});
    write_table(out, "lmp.csv", {"node", "hour", "lmp"}, lmp);

    std::vector<TableRow> dispatch;
    for (std::size_t u = 0; u < s.units.size(); ++u)
        for (int h = 0; h < s.hours; ++h)
            dispatch.push_back({s.units[u].id, std::to_string(h),
                                format_quantity(res.dispatch.unit_output[u][static_cast<std::size_t>(h)])});
    write_table(out, "dispatch.csv", {"unit", "hour", "mw"}, dispatch);

    std::vector<TableRow> settlement;
    for (std::size_t u = 0; u < s.units.size(); ++u)
        settlement.push_back({s.units[u].id, "generator_receipt", s.units[u].node,
                              format_quantity(st.generator_receipts[u])});
    for (std::size_t d = 0; d < s.demands.size(); ++d)
        settlement.push_back({"demand[" + std::to_string(d) + "]", "load_payment",
                              s.demands[d].node, format_quantity(st.load_payments[d])});
    settlement.push_back({"system", "congestion_rent", "-", format_quantity(st.congestion_rent)});
    write_table(out, "settlement.csv", {"party", "kind", "node", "amount"}, settlement);
}

int run_clear(const LoadedScenario& loaded, const std::filesystem::path& out) {
    const Scenario& s = loaded.scenario;
    const ClearingResult res = clear(s, truthful_offer(s));
    write_clear_tables(out, s, res, settle(s, res));
    std::printf("cleared %d hour(s): objective %s, firm offered cost %s\n", s.hours,
                format_quantity(res.objective).c_str(),
                format_quantity(res.firm_offered_cost).c_str());
    std::printf("tables written to %s\n", out.string().c_str());
    return kExitOk;
}

int run_regulate(const LoadedScenario& loaded, const std::filesystem::path& out) {
    const Scenario& s = loaded.scenario;
    const RegulationOutcome reg = run_regulation(s, truthful_offer(s), loaded.estimate);

    std::vector<TableRow> rows = {
        {"base_objective", format_quantity(reg.base_run.objective)},
        {"base_other_welfare", format_quantity(reg.base_run.other_welfare)},
        {"reference_objective", format_quantity(reg.reference_run.objective)},
        {"reference_other_welfare", format_quantity(reg.reference_run.other_welfare)},
        {"reference_firm_revenue", format_quantity(reg.reference_firm_revenue)},
        {"offset_constant", format_quantity(reg.offset_constant)},
        {"regulated_revenue", format_quantity(reg.regulated_revenue)},
        {"lmp_revenue_at_base", format_quantity(reg.lmp_revenue_at_base)},
        {"uplift", format_quantity(reg.uplift)},
        {"firm_true_cost", format_quantity(reg.base_run.firm_true_cost)},
        {"regulated_profit",
         format_quantity(reg.regulated_revenue - reg.base_run.firm_true_cost)},
    };
    write_table(out, "regulation.csv", {"field", "value"}, rows);

    std::vector<TableRow> alloc;
    for (std::size_t d = 0; d < s.demands.size(); ++d) {
        double mwh = 0.0;
        for (int h = 0; h < s.hours; ++h)
            mwh += reg.base_run.dispatch.consumption[d][static_cast<std::size_t>(h)];
        alloc.push_back({"demand[" + std::to_string(d) + "]", s.demands[d].node,
                         format_quantity(mwh), format_quantity(reg.allocations[d])});
    }
    write_table(out, "allocations.csv", {"demand", "node", "mwh", "share"}, alloc);

    write_clear_tables(out, s, reg.base_run, settle(s, reg.base_run));
    std::printf("regulated revenue %s (LMP revenue %s, uplift %s)\n",
                format_quantity(reg.regulated_revenue).c_str(),
                format_quantity(reg.lmp_revenue_at_base).c_str(),
                format_quantity(reg.uplift).c_str());
    std::printf("tables written to %s\n", out.string().c_str());
    return kExitOk;
}

int run_sweep(const LoadedScenario& loaded, const std::filesystem::path& out,
              const std::string& regime_filter) {
    const Scenario& s = loaded.scenario;
    const SweepResult sweep = best_response_sweep(s, loaded.estimate, loaded.grid);

    std::vector<TableRow> rows;
    for (std::size_t i = 0; i < sweep.grid.size(); ++i) {
        const SweepPoint& pt = sweep.grid[i];
        rows.push_back({std::to_string(i), format_quantity(pt.spec.price_scale),
                        format_quantity(pt.spec.price_add), format_quantity(pt.spec.withhold),
                        format_quantity(pt.spec.ramp_scale), pt.feasible ? "1" : "0",
                        format_quantity(pt.profit_unregulated), format_quantity(pt.profit_standard),
                        format_quantity(pt.profit_proposed), format_quantity(pt.deadweight_loss),
                        format_quantity(pt.uplift), hex64(pt.fingerprint)});
    }
    write_table(out, "sweep.csv",
                {"index", "price_scale", "price_add", "withhold", "ramp_scale", "feasible",
                 "profit_unregulated", "profit_standard", "profit_proposed", "deadweight_loss",
                 "uplift", "fingerprint"},
                rows);

    std::vector<TableRow> argmax;
    auto emit_regime = [&](const std::string& name, Regime regime) {
        const std::vector<std::size_t> ties = sweep.tie_set(regime);
        const std::size_t best = sweep.argmax(regime);
        bool truthful_tied = false;
        for (const std::size_t i : ties) truthful_tied |= i == sweep.truthful_index;
        const SweepPoint& pt = sweep.grid[best];
        argmax.push_back({name, std::to_string(best), format_quantity(pt.spec.price_scale),
                          format_quantity(pt.spec.price_add), format_quantity(pt.spec.withhold),
                          format_quantity(pt.spec.ramp_scale),
                          format_quantity(sweep.profit(best, regime)), std::to_string(ties.size()),
                          truthful_tied ? "1" : "0", pt.spec.is_truthful() ? "1" : "0"});
        std::printf("%s: argmax index %zu (%s), profit %s, %zu tied\n", name.c_str(), best,
                    pt.spec.is_truthful() ? "truthful" : "distorted",
                    format_quantity(sweep.profit(best, regime)).c_str(), ties.size());
    };
    if (regime_filter.empty() || regime_filter == "none")
        emit_regime("none", Regime::Unregulated);
    if (regime_filter.empty() || regime_filter == "standard")
        emit_regime("standard", Regime::Standard);
    if (regime_filter.empty() || regime_filter == "proposed")
        emit_regime("proposed", Regime::Proposed);
    write_table(out, "argmax.csv",
                {"regime", "index", "price_scale", "price_add", "withhold", "ramp_scale", "profit",
                 "tie_count", "truthful_in_ties", "is_truthful"},
                argmax);
    std::printf("tables written to %s\n", out.string().c_str());
    return kExitOk;
}

struct CheckList {
    std::vector<TableRow> rows;
    bool failed = false;

    void add(const std::string& name, bool pass, double value) {
        rows.push_back({name, pass ? "pass" : "FAIL", format_quantity(value)});
        std::printf("[%s] %-42s %s\n", pass ? " ok " : "FAIL", name.c_str(),
                    format_quantity(value).c_str());
        failed |= !pass;
    }
    void skip(const std::string& name, const std::string& why) {
        rows.push_back({name, "n/a", why});
        std::printf("[ -- ] %-42s %s\n", name.c_str(), why.c_str());
    }
};

int run_verify(const LoadedScenario& loaded, const std::filesystem::path& out,
               std::uint64_t seed, bool have_out) {
    const Scenario& s = loaded.scenario;
    CheckList checks;

    const FirmOffer truth = truthful_offer(s);
    const AssembledLp assembled = assemble_lp(s, truth);
    const LpSolution sol = solve(assembled.lp);
    const ClearingResult base = clear(s, truth);

    const KktReport kkt = verify_kkt(assembled.lp, sol);
    checks.add("clearing KKT audit", kkt.pass,
               std::max({kkt.max_primal_violation, kkt.max_dual_violation,
                         kkt.max_slackness_violation}));

    const double decomposition =
        std::fabs(base.objective - (base.other_welfare - base.firm_offered_cost));
    checks.add("welfare decomposition residual", decomposition <= 1e-6, decomposition);

    bool lmp_bitwise = true;
    const std::vector<std::vector<double>> lmp2 =
        lmps_from_duals(s, assembled.ptdf, assembled.rows, sol.row_duals);
    for (std::size_t n = 0; n < lmp2.size(); ++n)
        for (std::size_t h = 0; h < lmp2[n].size(); ++h) lmp_bitwise &= lmp2[n][h] == base.lmp[n][h];
    checks.add("LMP recomputation from duals (bitwise)", lmp_bitwise, lmp_bitwise ? 0.0 : 1.0);

    FirmSchedule at_optimum;
    for (std::size_t u = 0; u < s.units.size(); ++u)
        if (s.units[u].owner == Owner::Firm) at_optimum[s.units[u].id] = base.dispatch.unit_output[u];
    const double restricted_gap =
        std::fabs(restricted_clear(s, truth, at_optimum).other_welfare - base.other_welfare);
    checks.add("restricted objective at the optimum", restricted_gap <= 1e-6, restricted_gap);

    const Settlement st = settle(s, base);
    checks.add("congestion rent nonnegative", st.congestion_rent >= -1e-6, st.congestion_rent);

    const RegulationOutcome reg = run_regulation(s, truth, loaded.estimate);
    const double rule_residual =
        std::fabs(reg.regulated_revenue - (reg.reference_firm_revenue + reg.base_run.other_welfare -
                                           reg.reference_run.other_welfare));
    checks.add("settlement rule identity", rule_residual == 0.0, rule_residual);

    const ConservationReport cons = money_conservation_check(s, reg, settle(s, reg.base_run));
    checks.add("money conservation residual", cons.pass, cons.residual);

    bool estimate_in_envelope = true;
    for (const GeneratingUnit& g : s.units)
        if (g.owner == Owner::Firm)
            estimate_in_envelope &=
                is_within_true_envelope(loaded.estimate.claims.at(g.id).params, g.true_params);
    if (estimate_in_envelope) {
        const ProfitReport rep = compare_methods(s, loaded.estimate);
        checks.add("welfare deviation nonpositive", rep.welfare_deviation <= 1e-6,
                   rep.welfare_deviation);
        checks.add("method-comparison identity residual",
                   std::fabs(rep.identity_residual) <= 1e-6, rep.identity_residual);
    } else {
        checks.skip("welfare deviation nonpositive", "estimate outside the true envelope");
        checks.skip("method-comparison identity residual", "estimate outside the true envelope");
    }

    { // offset constancy across two estimates, sampled over the offer grid
        RegulatorEstimate shifted = loaded.estimate;
        for (auto& [id, claim] : shifted.claims)
            for (OfferBlock& b : claim.curve.blocks) b.price *= 1.2;
        double lo = 1e300, hi = -1e300;
        int used = 0;
        for (const DistortionSpec& spec : loaded.grid.points()) {
            if (used >= 24) break;
            try {
                const FirmOffer offer = apply_distortion(s, spec);
                const double diff =
                    regulated_profit(s, offer, loaded.estimate) - regulated_profit(s, offer, shifted);
                lo = std::min(lo, diff);
                hi = std::max(hi, diff);
                ++used;
            } catch (const InfeasibleError&) {
            } catch (const std::invalid_argument&) {
            }
        }
        checks.add("estimate-offset constancy (spread)", used >= 20 && hi - lo <= 1e-6,
                   used >= 20 ? hi - lo : -1.0);
    }

    { // truthful dominance and profit/deadweight alignment over the grid
        const SweepResult sweep = best_response_sweep(s, loaded.estimate, loaded.grid);
        const double truthful_profit = sweep.grid[sweep.truthful_index].profit_proposed;
        double worst_excess = 0.0, align_lo = 1e300, align_hi = -1e300, dwl_min = 0.0;
        for (const SweepPoint& pt : sweep.grid) {
            if (!pt.feasible) continue;
            worst_excess = std::max(worst_excess, pt.profit_proposed - truthful_profit);
            align_lo = std::min(align_lo, pt.profit_proposed + pt.deadweight_loss);
            align_hi = std::max(align_hi, pt.profit_proposed + pt.deadweight_loss);
            dwl_min = std::min(dwl_min, pt.deadweight_loss);
        }
        checks.add("truthful dominance (max excess)", worst_excess <= 1e-6, worst_excess);
        checks.add("profit+deadweight alignment (spread)", align_hi - align_lo <= 1e-6,
                   align_hi - align_lo);
        checks.add("deadweight loss nonnegative", dwl_min >= -1e-6, dwl_min);
    }

    { // envelope identity on an automatically probed interior path: scan
      // every firm coordinate with the rest pinned at the optimum and take
      // the widest feasible span
        auto feasible_at = [&](const std::string& id, int hour, double t) {
            FirmSchedule probe = at_optimum;
            probe[id][static_cast<std::size_t>(hour)] = t;
            try {
                restricted_clear(s, truth, probe);
                return true;
            } catch (const InfeasibleError&) {
                return false;
            } catch (const std::invalid_argument&) {
                return false;
            }
        };
        const int scan = 40;
        std::string best_id;
        int best_hour = 0;
        double best_a = 0.0, best_b = 0.0, best_span = 0.0;
        for (const GeneratingUnit& g : s.units) {
            if (g.owner != Owner::Firm) continue;
            const double lo_b = g.true_params.p_min, hi_b = g.true_params.p_max;
            const double step = (hi_b - lo_b) / scan;
            for (int h = 0; h < s.hours; ++h) {
                int run_start = -1, run_len = 0;
                for (int i = 0; i <= scan; ++i) {
                    const double t = lo_b + step * i;
                    if (feasible_at(g.id, h, t)) {
                        if (run_start < 0) run_start = i;
                        ++run_len;
                    } else {
                        run_start = -1;
                        run_len = 0;
                    }
                    if (run_len >= 2) {
                        const double margin = 0.15 * step * run_len;
                        const double a = lo_b + step * run_start + margin + 0.005;
                        const double b = lo_b + step * (run_start + run_len - 1) - margin - 0.005;
                        if (b - a > best_span) {
                            best_span = b - a;
                            best_a = a;
                            best_b = b;
                            best_id = g.id;
                            best_hour = h;
                        }
                    }
                }
            }
        }
        if (best_span >= 1.0) {
            FirmSchedule from = at_optimum, to = at_optimum;
            from[best_id][static_cast<std::size_t>(best_hour)] = best_a;
            to[best_id][static_cast<std::size_t>(best_hour)] = best_b;
            const EnvelopeReport rep = envelope_check(s, from, to, 32);
            if (rep.applicable)
                checks.add("price path integral residual", rep.pass, rep.residual);
            else
                checks.skip("price path integral residual", rep.failure);
        } else {
            checks.skip("price path integral residual", "no interior span found");
        }
    }

    { // projection sampling
        std::map<std::string, TechParams> truth_params;
        for (const GeneratingUnit& g : s.units)
            if (g.owner == Owner::Firm) truth_params[g.id] = g.true_params;
        std::map<std::string, TechParams> tight_cap = truth_params;
        for (auto& [id, p] : tight_cap) p.p_max *= 0.5;
        bool cap_ok = true;
        for (const auto& [id, p] : tight_cap) cap_ok &= p.p_max >= p.p_min;
        std::vector<std::map<std::string, TechParams>> claims = {truth_params};
        if (cap_ok) claims.push_back(tight_cap);
        std::map<std::string, TechParams> slow = truth_params;
        for (auto& [id, p] : slow) {
            p.ramp_up *= 0.6;
            p.ramp_down *= 0.6;
        }
        claims.push_back(slow);
        const ProjectionReport rep = projection_check(s, claims, 1000, seed);
        checks.add("projection inclusion violations", rep.violations.empty(),
                   static_cast<double>(rep.violations.size()));
        checks.add("schedule-space coverage of the truthful claim", rep.union_coverage == 1.0,
                   rep.union_coverage);
    }

    if (have_out) write_table(out, "properties.csv", {"check", "status", "value"}, checks.rows);
    std::printf(checks.failed ? "verification FAILED\n" : "all checks passed\n");
    return checks.failed ? kExitPropertyFailure : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"day-ahead market simulator with antimonopoly settlement"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    std::string grid_override;
    std::string regime;
    std::optional<std::uint64_t> seed_flag;
    bool out_given = false;

    auto add_common = [&](CLI::App* cmd, bool with_grid, bool with_regime) {
        cmd->add_option("--scenario", scenario_path, "scenario document (json)")->required();
        cmd->add_option("--out", out_dir, "report directory")->each([&](const std::string&) {
            out_given = true;
        });
        cmd->add_option("--seed", seed_flag, "sampling seed (default: SIMSEED env or 12345)");
        if (with_grid)
            cmd->add_option("--grid", grid_override,
                            "axis overrides, e.g. price_scale=0.5,1,2;withhold=0,0.5");
        if (with_regime)
            cmd->add_option("--regime", regime, "none|standard|proposed (default: all)")
                ->check(CLI::IsMember({"none", "standard", "proposed"}));
    };

    CLI::App* c_clear = app.add_subcommand("clear", "clear the market with the truthful offer");
    add_common(c_clear, false, false);
    CLI::App* c_reg = app.add_subcommand("regulate", "run the antimonopoly settlement");
    add_common(c_reg, false, false);
    CLI::App* c_sweep = app.add_subcommand("sweep", "profit surfaces over the distortion grid");
    add_common(c_sweep, true, true);
    CLI::App* c_verify = app.add_subcommand("verify", "run the property checks");
    add_common(c_verify, false, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        LoadedScenario loaded = load_scenario(scenario_path);
        if (!grid_override.empty()) apply_grid_overrides(loaded.grid, grid_override);
        const std::filesystem::path out(out_dir);
        if (c_clear->parsed()) return run_clear(loaded, out);
        if (c_reg->parsed()) return run_regulate(loaded, out);
        if (c_sweep->parsed()) return run_sweep(loaded, out, regime);
        return run_verify(loaded, out, resolve_seed(seed_flag), out_given);
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        for (const std::string& issue : e.issues())
            std::fprintf(stderr, "  - %s\n", issue.c_str());
        return kExitBadInput;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const InfeasibleError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        for (const std::string& d : e.details()) std::fprintf(stderr, "  - %s\n", d.c_str());
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
}
