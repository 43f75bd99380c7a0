#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "nodal/properties.hpp"

using namespace nodal;
using fixtures::twonode;

TEST_CASE("path integral of finite-difference prices matches the objective delta", "[properties]") {
    // one firm coordinate, no basis change along the path: the other unit
    // absorbs every MW at price 30, so the integral is 30 * 40 = 1200
    const Scenario s = fixtures::twonode_envelope();
    const EnvelopeReport rep =
        envelope_check(s, {{"g1", {0.5}}}, {{"g1", {40.5}}}, 40);
    REQUIRE(rep.applicable);
    CHECK(rep.integral_estimate == Catch::Approx(1200.0).margin(1e-2));
    CHECK(rep.objective_delta == Catch::Approx(1200.0).margin(1e-6));
    CHECK(std::fabs(rep.residual) <= 1e-3);
    CHECK(rep.pass);
}

TEST_CASE("zero-length path", "[properties]") {
    const Scenario s = fixtures::twonode_envelope();
    const EnvelopeReport rep = envelope_check(s, {{"g1", {20.0}}}, {{"g1", {20.0}}}, 4);
    REQUIRE(rep.applicable);
    CHECK(rep.integral_estimate == 0.0);
    CHECK(rep.objective_delta == 0.0);
    CHECK(rep.pass);
}

TEST_CASE("L-path order reversal leaves the integral unchanged", "[properties]") {
    const Scenario s = fixtures::fivenode();
    const FirmSchedule from{{"f1", {25.0, 50.0}}, {"f2", {20.0, 15.0}}};
    const FirmSchedule to{{"f1", {55.0, 50.0}}, {"f2", {20.0, 44.0}}};
    const EnvelopeReport fwd = envelope_check(s, from, to, 30, false);
    const EnvelopeReport rev = envelope_check(s, from, to, 30, true);
    REQUIRE(fwd.applicable);
    REQUIRE(rev.applicable);
    CHECK(fwd.path_mw == Catch::Approx(59.0));
    CHECK(std::fabs(fwd.residual) <= 1e-3);
    CHECK(std::fabs(rev.residual) <= 1e-3);
    CHECK(std::fabs(fwd.integral_estimate - rev.integral_estimate) <= 1e-3);
    CHECK(fwd.objective_delta == Catch::Approx(rev.objective_delta).margin(1e-9));
}

TEST_CASE("a merit-order kink widens the tolerance instead of failing", "[properties]") {
    // o1's second block starts at 34: the marginal price jumps when the
    // firm's output crosses 40
    Scenario s = fixtures::twonode_envelope();
    s.units[1].true_curve.blocks = {{80.0, 30.0}, {120.0, 34.0}};
    const EnvelopeReport rep = envelope_check(s, {{"g1", {30.0}}}, {{"g1", {48.0}}}, 36);
    REQUIRE(rep.applicable);
    CHECK(rep.tolerance > 1e-3); // widening kicked in
    CHECK(rep.pass);
    CHECK(rep.objective_delta ==
          Catch::Approx(34.0 * 10.0 + 30.0 * 8.0).margin(1e-6)); // 30->40 at 34, 40->48 at 30
}

TEST_CASE("infeasible probes mark the report not-applicable", "[properties]") {
    const Scenario s = twonode(); // o1 cannot cover demand below g1 = 20
    const EnvelopeReport rep = envelope_check(s, {{"g1", {5.0}}}, {{"g1", {30.0}}}, 10);
    CHECK_FALSE(rep.applicable);
    CHECK_FALSE(rep.failure.empty());
    CHECK_FALSE(rep.pass);
}

TEST_CASE("envelope-passing claims never admit undeliverable schedules", "[properties]") {
    const Scenario s = fixtures::fivenode();
    std::map<std::string, TechParams> truth;
    for (const GeneratingUnit& g : s.units)
        if (g.owner == Owner::Firm) truth[g.id] = g.true_params;

    std::map<std::string, TechParams> half = truth;
    for (auto& [id, p] : half) p.p_max *= 0.5;
    std::map<std::string, TechParams> slow = truth;
    for (auto& [id, p] : slow) {
        p.ramp_up *= 0.6;
        p.ramp_down *= 0.6;
    }

    const ProjectionReport rep = projection_check(s, {truth, half, slow}, 400, 20240817);
    CHECK(rep.violations.empty());
    REQUIRE(rep.feasible_counts.size() == 3);
    for (const std::size_t c : rep.feasible_counts) CHECK(c > 100);
    CHECK(rep.union_coverage == 1.0); // the claimed set contains the truth
}

TEST_CASE("tightened claims alone cover only part of the truth", "[properties]") {
    // uncongested variant: otherwise the 50 MW line already caps the
    // firm's deliverable schedules at the claimed level
    const Scenario s = fixtures::twonode_uncongested();
    std::map<std::string, TechParams> half;
    for (const GeneratingUnit& g : s.units)
        if (g.owner == Owner::Firm) {
            half[g.id] = g.true_params;
            half[g.id].p_max *= 0.5;
        }
    const ProjectionReport rep = projection_check(s, {half}, 400, 7);
    CHECK(rep.violations.empty());
    CHECK(rep.union_coverage < 1.0);
    CHECK(rep.union_coverage > 0.0);
}

TEST_CASE("claims failing the envelope test are rejected", "[properties]") {
    const Scenario s = twonode();
    std::map<std::string, TechParams> wide;
    for (const GeneratingUnit& g : s.units)
        if (g.owner == Owner::Firm) {
            wide[g.id] = g.true_params;
            wide[g.id].p_max *= 2.0;
        }
    CHECK_THROWS_AS(projection_check(s, {wide}, 10, 1), std::invalid_argument);
}

TEST_CASE("money conservation across uplift, downlift, and exact runs", "[properties]") {
    const Scenario s = twonode();
    for (const RegulatorEstimate& est :
         {exact_estimate(s), fixtures::estimate_g1_at(s, 12.0), fixtures::estimate_g1_at(s, 8.0)}) {
        const RegulationOutcome out = run_regulation(s, truthful_offer(s), est);
        const Settlement st = settle(s, out.base_run);
        const ConservationReport rep = money_conservation_check(s, out, st);
        CHECK(rep.pass);
        CHECK(std::fabs(rep.residual) <= 1e-6);
    }
    // the downlift case really is a rebate
    const RegulationOutcome down =
        run_regulation(s, truthful_offer(s), fixtures::estimate_g1_at(s, 8.0));
    CHECK(down.uplift == Catch::Approx(-100.0));
}

TEST_CASE("projection sampling is reproducible for a fixed seed", "[properties]") {
    const Scenario s = twonode();
    std::map<std::string, TechParams> truth;
    for (const GeneratingUnit& g : s.units)
        if (g.owner == Owner::Firm) truth[g.id] = g.true_params;
    const ProjectionReport a = projection_check(s, {truth}, 200, 42);
    const ProjectionReport b = projection_check(s, {truth}, 200, 42);
    CHECK(a.feasible_counts == b.feasible_counts);
    CHECK(a.coverage_samples == b.coverage_samples);
    CHECK(a.union_coverage == b.union_coverage);
}
