#include <doctest.h>

#include "helpers.hpp"
#include "nrm/algorithm.hpp"
#include "nrm/errors.hpp"

using namespace nrmtest;

namespace {

AlgoConfig quick() {
    AlgoConfig cfg;
    cfg.max_K = 3;
    cfg.omega_policy = 0.01;
    cfg.sim_n_max = 20'000;
    cfg.basis_time_limit_s = 2.0;
    return cfg;
}

}  // namespace

TEST_CASE("row generation reaches the fully enumerated program") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const Instance inst = random_tiny(seed + 20);
        const std::vector<RidgeBasis> bases{initial_basis(inst),
                                            project_norm(std::vector<double>(inst.num_legs(), -0.3),
                                                         inst.capacities())};
        AlgoConfig cfg;
        cfg.omega_gap = 0.0;
        cfg.subproblems = SubproblemMode::Exact;
        RowSets rows = RowSets::initial(inst);
        const RowGenResult rg = row_generation(inst, std::nullopt, bases, rows, cfg);
        REQUIRE(rg.sol.optimal());
        CHECK(rg.exact);
        CHECK(rows.has_lambda(1, inst.capacities(), ActionVector(inst.num_products(), 0)));
        CHECK(rows.total() < full_rows(inst).total() + 1);
        const MasterSolution full = solve_master(inst, std::nullopt, bases, full_rows(inst));
        REQUIRE(full.optimal());
        CHECK(rg.sol.Z_B == doctest::Approx(full.Z_B).epsilon(1e-7));
        CHECK(rg.pi_hat_sum <= 1e-6 * (1.0 + full.Z_B));

        const BoundEstimate b = estimate_bounds(inst, rg.sol, cfg);
        REQUIRE(b.Zbar);
        CHECK(b.Zhat == doctest::Approx(rg.sol.Z_B).epsilon(1e-7));
        CHECK(*b.Zbar == doctest::Approx(b.Zhat));
        CHECK(*b.Zbar >= value_iteration(inst).at(1, inst.capacities()) - 1e-7);
    }
}

TEST_CASE("initial basis") {
    const Instance inst = toy();
    const RidgeBasis b = initial_basis(inst);
    CHECK(weighted_l1(b.beta, inst.capacities()) == doctest::Approx(1.0));
    for (int i = 0; i < inst.num_legs(); ++i)
        CHECK(b.beta[i] == doctest::Approx(1.0 / (inst.capacity(i) * inst.num_legs())));
}

TEST_CASE("affine fit bounds the optimum") {
    const Instance inst = toy();
    AlgoConfig cfg = quick();
    const AaResult r = solve_aa(inst, cfg);
    const double v1 = value_iteration(inst).at(1, inst.capacities());
    CHECK(r.upper() >= v1 - 1e-6);
    CHECK(r.sim.Rbar <= v1 + 3 * r.sim.Se);
    for (const auto& w : r.baseline.W)
        for (double v : w) CHECK(v >= -1e-9);
}

TEST_CASE("basis increment runs are deterministic and produce valid bounds") {
    const Instance inst = tiny2(5);
    const double v1 = value_iteration(inst).at(1, inst.capacities());
    for (const Mode mode : {Mode::Standalone, Mode::Addon}) {
        AlgoConfig cfg = quick();
        cfg.mode = mode;
        const RunTrace a = h2pialg(inst, cfg);
        const RunTrace b = h2pialg(inst, cfg);
        REQUIRE(a.records.size() == b.records.size());
        REQUIRE_FALSE(a.records.empty());
        for (std::size_t k = 0; k < a.records.size(); ++k) {
            CHECK(a.records[k].Z_B == b.records[k].Z_B);
            CHECK(a.records[k].Rbar == b.records[k].Rbar);
            CHECK(a.records[k].K == static_cast<int>(k) + 1);
            CHECK(a.records[k].Zhat >= v1 - 1e-6);
            CHECK(a.records[k].Rbar <= v1 + 3 * a.records[k].Se + 1e-9);
        }
        CHECK(a.status == b.status);
        CHECK(a.max_flow_residual <= 1e-6);
        CHECK(a.best_upper() >= v1 - 1e-6);
        CHECK(a.baseline_record.has_value() == (mode == Mode::Addon));
    }
}

TEST_CASE("pattern-search variant") {
    const Instance inst = tiny2(4);
    AlgoConfig cfg = quick();
    cfg.max_K = 2;
    const RunTrace t = nlialg(inst, cfg);
    REQUIRE_FALSE(t.records.empty());
    const double v1 = value_iteration(inst).at(1, inst.capacities());
    for (const auto& r : t.records) CHECK(r.Zhat >= v1 - 1e-6);
}

TEST_CASE("configuration checks") {
    AlgoConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.max_K = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = AlgoConfig{};
    cfg.omega_policy = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = AlgoConfig{};
    cfg.subproblems = SubproblemMode::Local;
    CHECK_FALSE(cfg.exact_for(toy()));
    cfg.subproblems = SubproblemMode::Auto;
    CHECK(cfg.exact_for(toy()));
}
