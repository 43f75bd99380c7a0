#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "nodal/clearing.hpp"
#include "nodal/grid.hpp"

using namespace nodal;

TEST_CASE("two-node ptdf", "[grid]") {
    Network net;
    net.nodes = {"n1", "n2"};
    net.lines = {{"n1", "n2", 1.0, 50.0}};
    net.reference = "n1";
    const Ptdf p = compute_ptdf(net);
    CHECK(p.factor[0][0] == 0.0);
    CHECK(p.factor[0][1] == Catch::Approx(-1.0));
}

TEST_CASE("triangle ptdf by hand-reduced susceptance system", "[grid]") {
    Network net;
    net.nodes = {"n1", "n2", "n3"};
    net.lines = {{"n1", "n2", 1.0, 100.0}, {"n1", "n3", 1.0, 100.0}, {"n2", "n3", 1.0, 100.0}};
    net.reference = "n1";
    const Ptdf p = compute_ptdf(net);
    // injection at n2 withdrawn at n1: 2/3 returns on the direct line,
    // 1/3 takes the detour through n3
    CHECK(p.factor[0][1] == Catch::Approx(-2.0 / 3.0));
    CHECK(p.factor[1][1] == Catch::Approx(-1.0 / 3.0));
    CHECK(p.factor[2][1] == Catch::Approx(1.0 / 3.0));
    for (std::size_t l = 0; l < 3; ++l) CHECK(p.factor[l][0] == 0.0); // reference column
}

TEST_CASE("radial cuts have unit sensitivities", "[grid]") {
    Network net;
    net.nodes = {"a", "b", "c", "d"};
    net.lines = {{"a", "b", 2.0, 10.0}, {"b", "c", 4.0, 10.0}, {"c", "d", 8.0, 10.0}};
    net.reference = "a";
    const Ptdf p = compute_ptdf(net);
    for (std::size_t l = 0; l < net.lines.size(); ++l)
        for (std::size_t n = 0; n < net.nodes.size(); ++n) {
            const double v = p.factor[l][n];
            const double nearest = std::round(v);
            CHECK(std::fabs(v - nearest) <= 1e-12);
            CHECK((nearest == 0.0 || nearest == -1.0 || nearest == 1.0));
        }
    // everything downstream of a cut moves through it
    CHECK(p.factor[1][2] == Catch::Approx(-1.0));
    CHECK(p.factor[1][3] == Catch::Approx(-1.0));
    CHECK(p.factor[1][1] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("disconnected network is rejected with the component named", "[grid]") {
    Network net;
    net.nodes = {"n1", "n2", "n3"};
    net.lines = {{"n1", "n2", 1.0, 10.0}};
    net.reference = "n1";
    CHECK_THROWS_WITH(compute_ptdf(net), Catch::Matchers::ContainsSubstring("n3"));
}

TEST_CASE("true-envelope membership", "[grid]") {
    const TechParams truth{0.0, 100.0, 50.0, 50.0, 10.0};
    CHECK(is_within_true_envelope(truth, truth));

    TechParams overstated = truth;
    overstated.p_max = 120.0;
    CHECK_FALSE(is_within_true_envelope(overstated, truth));

    const TechParams tightened{10.0, 80.0, 30.0, 30.0, 10.0};
    CHECK(is_within_true_envelope(tightened, truth));

    TechParams wrong_initial = tightened;
    wrong_initial.p_initial = 11.0;
    CHECK_FALSE(is_within_true_envelope(wrong_initial, truth));
}

TEST_CASE("envelope membership is transitive", "[grid]") {
    std::mt19937_64 gen(4242);
    auto u = [&gen](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
    };
    for (int k = 0; k < 200; ++k) {
        const TechParams c{u(0, 20), u(40, 120), u(0, 60), u(0, 60), 15.0};
        TechParams b = c;
        b.p_min = c.p_min + u(0, 5);
        b.p_max = c.p_max - u(0, 10);
        b.ramp_up = c.ramp_up * u(0.5, 1.0);
        b.ramp_down = c.ramp_down * u(0.5, 1.0);
        TechParams a = b;
        a.p_min = b.p_min + u(0, 5);
        a.p_max = b.p_max - u(0, 10);
        a.ramp_up = b.ramp_up * u(0.5, 1.0);
        a.ramp_down = b.ramp_down * u(0.5, 1.0);
        REQUIRE(is_within_true_envelope(b, c));
        REQUIRE(is_within_true_envelope(a, b));
        CHECK(is_within_true_envelope(a, c));
    }
}

TEST_CASE("claims inside the envelope only admit deliverable schedules", "[grid]") {
    // sampled form of the projection inclusion, bounds and ramps only
    const TechParams truth{0.0, 100.0, 50.0, 50.0, 10.0};
    const TechParams claimed{10.0, 80.0, 30.0, 30.0, 10.0};
    REQUIRE(is_within_true_envelope(claimed, truth));
    std::mt19937_64 gen(99);
    auto u = [&gen](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
    };
    int accepted = 0;
    for (int k = 0; k < 100000 && accepted < 1000; ++k) {
        std::vector<double> sched(3);
        for (double& p : sched) p = u(claimed.p_min, claimed.p_max);
        if (!schedule_within_params(sched, claimed)) continue;
        ++accepted;
        CHECK(schedule_within_params(sched, truth));
    }
    CHECK(accepted >= 1000);
}

TEST_CASE("offered cost integrates the staircase", "[grid]") {
    const OfferCurve curve{{{50.0, 10.0}, {50.0, 30.0}}};
    CHECK(offered_cost(curve, 0.0) == 0.0);
    CHECK(offered_cost(curve, 50.0) == Catch::Approx(500.0));
    CHECK(offered_cost(curve, 80.0) == Catch::Approx(500.0 + 30.0 * 30.0));
    CHECK(offered_cost(curve, 100.0) == Catch::Approx(2000.0));
}

TEST_CASE("scenario validation catches field-level problems", "[grid]") {
    CHECK(validate_scenario(fixtures::twonode()).empty());

    Scenario bad = fixtures::twonode();
    bad.units[0].true_params.p_min = 150.0;
    const std::vector<std::string> issues = validate_scenario(bad);
    REQUIRE_FALSE(issues.empty());
    CHECK_THAT(issues.front(), Catch::Matchers::ContainsSubstring("units[0].params.p_min"));

    Scenario noref = fixtures::twonode();
    noref.network.reference = "nope";
    CHECK_THAT(validate_scenario(noref).front(),
               Catch::Matchers::ContainsSubstring("network.reference"));

    Scenario negcap = fixtures::twonode();
    negcap.network.lines[0].capacity = -5.0;
    CHECK_THAT(validate_scenario(negcap).front(),
               Catch::Matchers::ContainsSubstring("network.lines[0].capacity"));
}

TEST_CASE("validation probes clearing feasibility", "[grid]") {
    Scenario heavy = fixtures::twonode();
    heavy.demands[0].hours[0].fixed = 500.0; // beyond all capacity
    const std::vector<std::string> issues = validate_scenario(heavy);
    REQUIRE_FALSE(issues.empty());
    CHECK_THAT(issues.front(), Catch::Matchers::ContainsSubstring("infeasible"));
}
