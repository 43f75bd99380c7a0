#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "nodal/lp.hpp"
#include "oracle.hpp"

using namespace nodal;

namespace {

LinearProgram single_var_lp() {
    // maximize x, x <= 5, 0 <= x <= 10
    LinearProgram lp = LinearProgram::with_vars(1);
    lp.objective = {1.0};
    lp.upper = {10.0};
    lp.add_le({1.0}, 5.0);
    return lp;
}

LinearProgram two_row_lp() {
    // maximize 2x + y, x + y <= 4, x <= 3, x,y >= 0
    LinearProgram lp = LinearProgram::with_vars(2);
    lp.objective = {2.0, 1.0};
    lp.add_le({1.0, 1.0}, 4.0);
    lp.add_le({1.0, 0.0}, 3.0);
    return lp;
}

} // namespace

TEST_CASE("single binding row", "[lp]") {
    const LinearProgram lp = single_var_lp();
    const LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.primal[0] == Catch::Approx(5.0));
    CHECK(sol.row_duals[0] == Catch::Approx(1.0));
    CHECK(sol.objective_value == Catch::Approx(5.0));
}

TEST_CASE("degenerate face resolved by lowest-index tie-break", "[lp]") {
    // maximize x + y, x + y <= 3, 0 <= x,y <= 2: any split works; the
    // deterministic rule fills x first.
    LinearProgram lp = LinearProgram::with_vars(2);
    lp.objective = {1.0, 1.0};
    lp.upper = {2.0, 2.0};
    lp.add_le({1.0, 1.0}, 3.0);
    const LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective_value == Catch::Approx(3.0));
    CHECK(sol.primal[0] == Catch::Approx(2.0));
    CHECK(sol.primal[1] == Catch::Approx(1.0));
}

TEST_CASE("two-row optimum with duals, against vertex enumeration", "[lp]") {
    const LinearProgram lp = two_row_lp();
    const LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.primal[0] == Catch::Approx(3.0));
    CHECK(sol.primal[1] == Catch::Approx(1.0));
    CHECK(sol.objective_value == Catch::Approx(7.0));
    CHECK(sol.row_duals[0] == Catch::Approx(1.0));
    CHECK(sol.row_duals[1] == Catch::Approx(1.0));

    const oracle::OracleResult ref = oracle::enumerate_vertices(lp);
    REQUIRE(ref.feasible);
    CHECK(ref.best == Catch::Approx(7.0));
    CHECK(std::fabs(sol.objective_value - ref.best) < 1e-7);
}

TEST_CASE("equality rows and infeasibility detection", "[lp]") {
    LinearProgram lp = LinearProgram::with_vars(2);
    lp.objective = {1.0, -1.0};
    lp.upper = {4.0, 4.0};
    lp.add_eq({1.0, 1.0}, 3.0);
    const LpSolution sol = solve(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.primal[0] == Catch::Approx(3.0));
    CHECK(sol.primal[1] == Catch::Approx(0.0));

    LinearProgram bad = LinearProgram::with_vars(1);
    bad.objective = {1.0};
    bad.upper = {1.0};
    bad.add_eq({1.0}, 5.0);
    const LpSolution nosol = solve(bad);
    CHECK(nosol.status == LpStatus::Infeasible);
    CHECK_FALSE(nosol.infeasible_rows.empty());
}

TEST_CASE("unbounded detection through the finite sentinel", "[lp]") {
    LinearProgram lp = LinearProgram::with_vars(1);
    lp.objective = {1.0}; // max x, x unbounded above
    const LpSolution sol = solve(lp);
    CHECK(sol.status == LpStatus::Unbounded);
}

TEST_CASE("malformed input rejected before solving", "[lp]") {
    LinearProgram lp = LinearProgram::with_vars(2);
    lp.objective = {1.0, 1.0};
    lp.add_le({1.0}, 2.0); // wrong arity
    CHECK_THROWS_AS(solve(lp), std::invalid_argument);

    LinearProgram flipped = LinearProgram::with_vars(1);
    flipped.objective = {1.0};
    flipped.lower = {2.0};
    flipped.upper = {1.0};
    CHECK_THROWS_AS(solve(flipped), std::invalid_argument);
}

TEST_CASE("kkt report on exact and perturbed solutions", "[lp]") {
    const LinearProgram lp = single_var_lp();
    const LpSolution sol = solve(lp);
    const KktReport good = verify_kkt(lp, sol);
    REQUIRE(good.applicable);
    CHECK(good.pass);
    CHECK(good.max_primal_violation == Catch::Approx(0.0).margin(1e-12));
    CHECK(good.max_dual_violation == Catch::Approx(0.0).margin(1e-12));
    CHECK(good.max_slackness_violation == Catch::Approx(0.0).margin(1e-12));
    CHECK(good.duality_gap == Catch::Approx(0.0).margin(1e-12));

    LpSolution bumped = sol;
    bumped.primal[0] += 1e-3; // violates the binding row
    const KktReport bad = verify_kkt(lp, bumped);
    REQUIRE(bad.applicable);
    CHECK_FALSE(bad.pass);
    CHECK(bad.max_primal_violation == Catch::Approx(1e-3));

    LpSolution not_solved;
    not_solved.status = LpStatus::Infeasible;
    CHECK_FALSE(verify_kkt(lp, not_solved).applicable);

    const LinearProgram vertex = two_row_lp();
    const KktReport rep = verify_kkt(vertex, solve(vertex));
    CHECK(rep.duality_gap <= 1e-7);
}

TEST_CASE("feasibility oracle with boundary tolerance", "[lp]") {
    const LinearProgram lp = single_var_lp();
    CHECK(is_feasible(lp, {5.0}).feasible);
    const FeasibilityCheck off = is_feasible(lp, {5.0 + 1e-6});
    CHECK_FALSE(off.feasible);
    CHECK(off.max_violation == Catch::Approx(1e-6));
    CHECK(is_feasible(two_row_lp(), {3.0, 1.0}).feasible);
    CHECK_THROWS_AS(is_feasible(lp, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("bitwise determinism across repeated solves", "[lp]") {
    oracle::LpRng rng(991);
    for (int k = 0; k < 50; ++k) {
        const LinearProgram lp = oracle::random_lp(rng);
        const LpSolution a = solve(lp);
        const LpSolution b = solve(lp);
        REQUIRE(a.status == b.status);
        REQUIRE(a.primal.size() == b.primal.size());
        CHECK(std::memcmp(a.primal.data(), b.primal.data(), a.primal.size() * sizeof(double)) == 0);
        REQUIRE(a.row_duals.size() == b.row_duals.size());
        CHECK(std::memcmp(a.row_duals.data(), b.row_duals.data(),
                          a.row_duals.size() * sizeof(double)) == 0);
        CHECK(a.objective_value == b.objective_value);
    }
}

TEST_CASE("random LPs agree with the vertex-enumeration oracle", "[lp][slow]") {
    oracle::LpRng rng(20240811);
    int optimal_seen = 0, infeasible_seen = 0;
    for (int k = 0; k < 120; ++k) {
        const LinearProgram lp = oracle::random_lp(rng);
        const LpSolution sol = solve(lp);
        const oracle::OracleResult ref = oracle::enumerate_vertices(lp);
        if (ref.feasible) {
            REQUIRE(sol.status == LpStatus::Optimal);
            CHECK(std::fabs(sol.objective_value - ref.best) <= 1e-7 * (1.0 + std::fabs(ref.best)));
            CHECK(verify_kkt(lp, sol).pass);
            CHECK(is_feasible(lp, sol.primal).feasible);
            ++optimal_seen;
        } else {
            CHECK(sol.status == LpStatus::Infeasible);
            ++infeasible_seen;
        }
    }
    CHECK(optimal_seen > 50);
    CHECK(infeasible_seen > 5);
}

TEST_CASE("strong duality and complementary slackness on random LPs", "[lp]") {
    oracle::LpRng rng(777);
    for (int k = 0; k < 60; ++k) {
        const LinearProgram lp = oracle::random_lp(rng);
        const LpSolution sol = solve(lp);
        if (sol.status != LpStatus::Optimal) continue;
        const KktReport rep = verify_kkt(lp, sol);
        CHECK(rep.pass);
        CHECK(rep.duality_gap <= 1e-7 * (1.0 + std::fabs(sol.objective_value)));
        CHECK(rep.max_slackness_violation <= 1e-7);
    }
}
