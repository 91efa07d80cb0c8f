#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "nrm/errors.hpp"
#include "nrm/subproblems.hpp"

using namespace nrmtest;

namespace {

// Independent slack: v_t(x) minus the expected one-step value of (x, u).
double slack_oracle(const Instance& inst, const Approximation& a, int t, const StateVector& x,
                    const ActionVector& u) {
    const auto& p = inst.probs(t);
    double stay = 1.0, expected = 0.0;
    for (int j = 0; j < inst.num_products(); ++j) {
        if (!u[j]) continue;
        stay -= p[j];
        StateVector y = x;
        for (int i : inst.legs_of(j)) --y[i];
        expected += p[j] * (inst.fare(j) + eval_approx(a, t + 1, y));
    }
    expected += stay * eval_approx(a, t + 1, x);
    return eval_approx(a, t, x) - expected;
}

double exhaustive_min(const Instance& inst, const Approximation& a, int t) {
    double best = kInf;
    for (const auto& x : all_states(inst)) {
        if (t == 1 && x != inst.capacities()) continue;
        for (const auto& u : all_actions(inst))
            if (is_feasible(inst, t, x, u)) best = std::min(best, slack_oracle(inst, a, t, x, u));
    }
    return best;
}

}  // namespace

TEST_CASE("slack matches a direct recomputation") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const Instance inst = random_tiny(seed);
        const Approximation a = random_approx(inst, 2, seed % 2 == 0, seed);
        for (int t = 1; t <= inst.horizon(); ++t)
            for (const auto& x : all_states(inst))
                for (const auto& u : all_actions(inst)) {
                    if (!is_feasible(inst, t, x, u)) {
                        CHECK_THROWS_AS(reduced_cost(inst, a, t, x, u), InvalidArgument);
                        continue;
                    }
                    CHECK(reduced_cost(inst, a, t, x, u) ==
                          doctest::Approx(slack_oracle(inst, a, t, x, u)).epsilon(1e-10));
                }
    }
}

TEST_CASE("best action is optimal and flip-stable") {
    const Instance inst = tiny2(3);
    const Approximation a = random_approx(inst, 3, true, 11);
    for (int t = 1; t <= 3; ++t)
        for (const auto& x : all_states(inst)) {
            if (t == 1 && x != inst.capacities()) continue;
            ActionVector u;
            const double got = best_action(inst, a, t, x, u);
            CHECK(got == doctest::Approx(reduced_cost(inst, a, t, x, u)).epsilon(1e-12));
            double best = kInf;
            for (const auto& w : all_actions(inst))
                if (is_feasible(inst, t, x, w)) best = std::min(best, reduced_cost(inst, a, t, x, w));
            CHECK(got == doctest::Approx(best).epsilon(1e-12));
            for (int j = 0; j < inst.num_products(); ++j) {
                ActionVector f = u;
                f[j] ^= 1;
                if (is_feasible(inst, t, x, f)) CHECK(reduced_cost(inst, a, t, x, f) >= got - 1e-12);
            }
        }
}

TEST_CASE("zero approximation in the last period") {
    const Instance inst = tiny2(3);
    const Approximation a = Approximation::zero(3);
    const SeparationResult r = row_subproblem(inst, a, 3, SearchMode::Exact);
    REQUIRE(r.found());
    CHECK(r.objective == doctest::Approx(-(0.3 * 10 + 0.25 * 12 + 0.2 * 18)));
    CHECK(r.x == inst.capacities());
    CHECK(r.quality == ProofQuality::Global);
}

TEST_CASE("constant slack gives no violation") {
    // v_t(x) = sum of fares still to be earned when accepting everything is
    // not available, but xi alone with zero fares makes every slack xi_t - xi_{t+1}.
    const Instance inst = Instance::stationary({2, 1}, {0, 0}, {{0}, {1}}, {0.4, 0.4}, 3);
    Approximation a = Approximation::zero(3);
    a.xi = {3, 2, 1};
    for (int t = 1; t <= 3; ++t) {
        const SeparationResult r = row_subproblem(inst, a, t, SearchMode::Exact);
        CHECK(r.objective == doctest::Approx(1.0));
    }
}

TEST_CASE("exact search matches exhaustive enumeration; local search never beats it") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Instance inst = random_tiny(seed + 100);
        const Approximation a = random_approx(inst, 2, seed % 3 == 0, seed);
        for (int t = 1; t <= inst.horizon(); ++t) {
            const double truth = exhaustive_min(inst, a, t);
            const SeparationResult ex = row_subproblem(inst, a, t, SearchMode::Exact);
            CHECK(ex.objective == doctest::Approx(truth).epsilon(1e-10));
            CHECK(reduced_cost(inst, a, t, ex.x, ex.u) == doctest::Approx(ex.objective).epsilon(1e-10));
            LocalSearchOptions opts;
            opts.seed = seed;
            const SeparationResult loc = row_subproblem(inst, a, t, SearchMode::Local, opts);
            REQUIRE(loc.found());
            CHECK(loc.objective >= truth - 1e-10);
            CHECK(reduced_cost(inst, a, t, loc.x, loc.u) == doctest::Approx(loc.objective).epsilon(1e-10));
        }
    }
}

TEST_CASE("monotonicity slack") {
    const Instance inst = single(3, 2, 0.5, 10);
    Approximation a = Approximation::zero(2);
    a.bases = {RidgeBasis{{1.0 / 3.0}}};
    a.V = {{0.0}, {6.0}};
    // Positive V on a decreasing exponential: value increases in x.
    for (int x = 0; x < 3; ++x) {
        const StateVector s{x};
        const double expect = 6.0 * (std::exp(-x / 3.0) - std::exp(-(x + 1) / 3.0));
        CHECK(mono_slack(inst, a, 2, 0, s) == doctest::Approx(expect));
    }
    SeparationResult r = mono_subproblem(inst, a, 2, 0, SearchMode::Exact);
    CHECK(r.objective > 0.0);
    CHECK(r.x == StateVector{2});
    a.V[1][0] = -6.0;
    r = mono_subproblem(inst, a, 2, 0, SearchMode::Exact);
    CHECK(r.objective < 0.0);
    CHECK(r.x == StateVector{0});
    CHECK_FALSE(mono_subproblem(inst, a, 1, 0, SearchMode::Exact).found());
    CHECK_THROWS_AS(mono_slack(inst, a, 2, 1, StateVector{0}), InvalidArgument);

    Approximation aff = Approximation::zero(2);
    aff.baseline = AffineBaseline{{0, 0}, {{0}, {-2}}};
    CHECK(mono_subproblem(inst, aff, 2, 0, SearchMode::Exact).objective == doctest::Approx(-2.0));
}

TEST_CASE("local monotonicity search agrees on small lattices") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const Instance inst = random_tiny(seed + 7);
        const Approximation a = random_approx(inst, 2, true, seed);
        for (int t = 2; t <= inst.horizon(); ++t)
            for (int i = 0; i < inst.num_legs(); ++i) {
                const SeparationResult ex = mono_subproblem(inst, a, t, i, SearchMode::Exact);
                const SeparationResult loc = mono_subproblem(inst, a, t, i, SearchMode::Local);
                CHECK(loc.objective >= ex.objective - 1e-12);
                if (ex.found()) CHECK(mono_slack(inst, a, t, i, ex.x) == doctest::Approx(ex.objective));
            }
    }
}
