#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "nrm/algorithm.hpp"
#include "nrm/errors.hpp"
#include "nrm/flow_balance.hpp"

using namespace nrmtest;

TEST_CASE("hand-built single leg imbalance") {
    const Instance inst = single(2, 2, 0.5, 10);
    RowSets rows = RowSets::initial(inst);
    rows.add_lambda(inst, 1, StateVector{2}, ActionVector{1});
    rows.add_lambda(inst, 2, StateVector{1}, ActionVector{0});
    DualSolution d;
    d.lambda.resize(2);
    d.mu.resize(2);
    auto set = [&](double w1, double w2) {
        d.lambda[0].assign(rows.lambda(1).size(), 0.0);
        d.lambda[1].assign(rows.lambda(2).size(), 0.0);
        for (std::size_t r = 0; r < rows.lambda(1).size(); ++r)
            if (rows.lambda(1)[r].u[0]) d.lambda[0][r] = 1.0;
        for (std::size_t r = 0; r < rows.lambda(2).size(); ++r) {
            if (rows.lambda(2)[r].x == StateVector{1}) d.lambda[1][r] = w1;
            if (rows.lambda(2)[r].x == StateVector{2}) d.lambda[1][r] = w2;
        }
    };
    const double b = 0.3;
    const auto phi = [&](int x) { return std::exp(-b * x); };
    set(0.5, 0.5);
    ImbalanceProfile pr = flow_imbalance(inst, d, rows, RidgeBasis{{b}});
    CHECK(pr.ell[0] == doctest::Approx(0.0));
    CHECK(pr.ell[1] == doctest::Approx(0.0));
    set(0.0, 1.0);
    pr = flow_imbalance(inst, d, rows, RidgeBasis{{b}});
    CHECK(pr.ell[1] == doctest::Approx(-0.5 * (phi(1) - phi(2))));
    CHECK(pr.weighted == doctest::Approx(std::abs(pr.ell[1])));
}

TEST_CASE("zero duals leave only the initial-state term") {
    const Instance inst = tiny2(4);
    const RowSets rows = RowSets::initial(inst);
    DualSolution d;
    for (int t = 1; t <= 4; ++t) {
        d.lambda.emplace_back(rows.lambda(t).size(), 0.0);
        d.mu.emplace_back(rows.mu(t).size(), 0.0);
    }
    const RidgeBasis b{{0.1, 0.15}};
    CHECK(weighted_objective(inst, d, rows, b) == doctest::Approx(4.0 * eval_basis(b, inst.capacities())));
    DualSolution bad = d;
    bad.lambda[1].push_back(0.0);
    CHECK_THROWS_AS(flow_imbalance(inst, bad, rows, b), StaleDuals);
}

TEST_CASE("exact policy flows balance every direction") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Instance inst = random_tiny(seed);
        auto [rows, d] = policy_duals(inst, [&](int, const StateVector& x) { return greedy_action(inst, x); });
        Rng rng(seed);
        for (int s = 0; s < 20; ++s) {
            std::vector<double> beta(inst.num_legs());
            for (double& v : beta) v = rng.uniform(-1, 1);
            const auto pr = flow_imbalance(inst, d, rows, project_norm(beta, inst.capacities()));
            for (double l : pr.ell) CHECK(std::abs(l) <= 1e-12);
        }
    }
}

TEST_CASE("imbalance is linear in the duals after the first period") {
    const Instance inst = tiny2(3);
    auto [rows, d] = policy_duals(inst, [&](int, const StateVector& x) { return greedy_action(inst, x); });
    DualSolution d2 = d;
    for (auto& per : d2.lambda)
        for (double& v : per) v *= 2.5;
    const RidgeBasis b{{0.2, -0.05}};
    const auto p1 = flow_imbalance(inst, d, rows, b);
    const auto p2 = flow_imbalance(inst, d2, rows, b);
    // Period one carries the fixed -phi(c) term.
    const double phic = eval_basis(b, inst.capacities());
    CHECK(p2.ell[0] + phic == doctest::Approx(2.5 * (p1.ell[0] + phic)));
    for (int t = 1; t < 3; ++t) CHECK(p2.ell[t] == doctest::Approx(2.5 * p1.ell[t]));
}

TEST_CASE("master duals balance the model's directions and basis generation finds a new one") {
    const Instance inst = toy();
    const RidgeBasis b0 = project_norm(std::vector<double>{1.0 / 20, 1.0 / 6}, inst.capacities());
    RowSets rows = RowSets::initial(inst);
    // Initial rows alone carry a never-sell flow, which balances everything.
    MasterProblem m0(inst, std::nullopt, {b0});
    const MasterSolution s0 = m0.solve(rows);
    REQUIRE(s0.optimal());
    CHECK_FALSE(generate_basis(inst, s0.duals, rows).found);

    const RowGenResult rg = row_generation(inst, std::nullopt, {b0}, rows, AlgoConfig{});
    const MasterSolution& s = rg.sol;
    REQUIRE(s.optimal());
    CHECK(max_flow_residual(inst, s.duals, rows, {b0}) <= 1e-6);

    BasisGenConfig cfg;
    cfg.seed = 3;
    const BasisGenResult g = generate_basis(inst, s.duals, rows, cfg);
    REQUIRE(g.found);
    CHECK(g.objective > 0.0);
    CHECK(weighted_l1(g.basis.beta, inst.capacities()) == doctest::Approx(1.0));
    CHECK(g.objective == doctest::Approx(weighted_objective(inst, s.duals, rows, g.basis)));
}

TEST_CASE("decomposition identity") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const Instance inst = random_tiny(seed + 40);
        const Approximation a = random_approx(inst, 2, seed % 2 == 1, seed);
        std::vector<std::vector<double>> w;
        const auto pairs = policy_pairs(inst, [&](int, const StateVector& x) { return greedy_action(inst, x); }, w);
        std::vector<WeightedPair> lam;
        for (int t = 1; t <= inst.horizon(); ++t)
            for (std::size_t q = 0; q < pairs[t - 1].size(); ++q)
                lam.push_back({t, pairs[t - 1][q].first, pairs[t - 1][q].second, w[t - 1][q]});
        const Decomposition d = decomposition_check(inst, a, lam);
        CHECK(d.Xi + d.Psi + d.Phi == doctest::Approx(d.direct).epsilon(1e-10));
    }
}
