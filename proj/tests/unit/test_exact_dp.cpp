#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "helpers.hpp"
#include "nrm/errors.hpp"
#include "nrm/simulate.hpp"

using namespace nrmtest;

namespace {

// Independent recursion over (t, x) that enumerates whole action vectors.
struct BruteForce {
    const Instance& inst;
    std::map<std::pair<int, StateVector>, double> memo;

    double value(int t, const StateVector& x) {
        if (t > inst.horizon()) return 0.0;
        auto key = std::make_pair(t, x);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        double best = -1.0;
        for (const auto& u : all_actions(inst)) {
            bool ok = true;
            for (int j = 0; j < inst.num_products(); ++j)
                if (u[j] && !can_serve(inst, x, j)) ok = false;
            if (!ok) continue;
            double v = (1.0 - inst.arrival_mass(t)) * value(t + 1, x);
            for (int j = 0; j < inst.num_products(); ++j) {
                const StateVector y = transition(inst, x, j, u);
                v += inst.prob(t, j) * ((u[j] ? inst.fare(j) : 0.0) + value(t + 1, y));
            }
            best = std::max(best, v);
        }
        return memo[key] = best;
    }
};

}  // namespace

TEST_CASE("state indexer") {
    StateIndexer idx({2, 3, 1});
    CHECK(idx.size() == 24);
    StateVector x(3, 0), y(3);
    std::uint64_t code = 0;
    do {
        CHECK(idx.encode(x) == code);
        idx.decode(code, y);
        CHECK(y == x);
        ++code;
    } while (idx.next(x));
    CHECK(code == 24);
}

TEST_CASE("single product, one period") {
    const ValueTable vt = value_iteration(single(1, 1, 0.5, 100));
    CHECK(vt.at(1, StateVector{1}) == doctest::Approx(50.0));
    CHECK(vt.at(1, StateVector{0}) == 0.0);
    CHECK(vt.at(2, StateVector{1}) == 0.0);
}

TEST_CASE("ample capacity accepts everything") {
    const Instance inst = Instance::stationary({6, 6}, {10, 12, 18}, {{0}, {1}, {0, 1}}, {0.3, 0.25, 0.2}, 5);
    double expected = 0.0;
    for (int t = 1; t <= inst.horizon(); ++t)
        for (int j = 0; j < inst.num_products(); ++j) expected += inst.prob(t, j) * inst.fare(j);
    CHECK(value_iteration(inst).at(1, inst.capacities()) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("agrees with a brute-force recursion") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const Instance inst = random_tiny(seed);
        const ValueTable vt = value_iteration(inst);
        BruteForce bf{inst, {}};
        for (int t = 1; t <= inst.horizon(); ++t)
            for (const auto& x : all_states(inst)) CHECK(vt.at(t, x) == doctest::Approx(bf.value(t, x)).epsilon(1e-12));
    }
    const Instance t = toy();
    BruteForce bf{t, {}};
    CHECK(value_iteration(t).at(1, t.capacities()) == doctest::Approx(bf.value(1, t.capacities())).epsilon(1e-12));
}

TEST_CASE("fixed point and monotonicity") {
    for (const Instance& inst : {toy(), random_tiny(4), random_tiny(9)}) {
        const ValueTable vt = value_iteration(inst, kDefaultStateCap, 3);
        CHECK(bellman_residual(inst, vt) <= 1e-10);
        for (int t = 1; t <= inst.horizon(); ++t)
            for (const auto& x : all_states(inst)) {
                const double v = vt.at(t, x);
                CHECK(v >= 0.0);
                CHECK(v >= vt.at(t + 1, x) - 1e-12);
                for (int i = 0; i < inst.num_legs(); ++i) {
                    if (x[i] == inst.capacity(i)) continue;
                    StateVector up = x;
                    ++up[i];
                    CHECK(vt.at(t, up) >= v - 1e-12);
                }
            }
    }
}

TEST_CASE("thread count does not change the table") {
    const Instance inst = toy();
    CHECK(value_iteration(inst, kDefaultStateCap, 1).raw() == value_iteration(inst, kDefaultStateCap, 4).raw());
}

TEST_CASE("bellman residual oracles") {
    const Instance inst = single(3, 4, 0.6, 10);
    ValueTable vt = value_iteration(inst);
    // Raising one entry leaves its own backup unchanged; the period before
    // sees at most the no-sale share of the bump.
    vt.set(3, StateVector{2}, vt.at(3, StateVector{2}) + 1.0);
    const double r = bellman_residual(inst, vt);
    CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r >= 1.0 - 0.6);

    for (const Instance& z : {tiny2(), random_tiny(6)}) {
        ValueTable zero(z.horizon(), z.capacities());
        std::fill(zero.raw().begin(), zero.raw().end(), 0.0);
        double expected = 0.0;
        for (int t = 1; t <= z.horizon(); ++t)
            for (const auto& x : all_states(z)) {
                double one_step = 0.0;
                for (int j = 0; j < z.num_products(); ++j)
                    if (can_serve(z, x, j)) one_step += z.prob(t, j) * z.fare(j);
                expected = std::max(expected, one_step);
            }
        CHECK(bellman_residual(z, zero) == doctest::Approx(expected).epsilon(1e-12));
    }

    ValueTable empty(inst.horizon(), inst.capacities());
    CHECK_THROWS_AS(bellman_residual(inst, empty), IncompleteTable);
}

TEST_CASE("state cap") {
    const Instance big = gen_hub_spoke(6, 40, 20, 1);
    CHECK_THROWS_AS(value_iteration(big), CapacityError);
}

TEST_CASE("value table dump round trip") {
    namespace fs = std::filesystem;
    const fs::path p = fs::temp_directory_path() / "nrm_unit_table.bin";
    const ValueTable vt = value_iteration(toy());
    save_value_table(vt, p);
    const ValueTable back = load_value_table(p);
    CHECK(back.horizon() == vt.horizon());
    CHECK(back.capacities() == vt.capacities());
    CHECK(back.raw() == vt.raw());
    {
        std::ofstream out(p, std::ios::binary);
        out << "garbage";
    }
    CHECK_THROWS_AS(load_value_table(p), ParseError);
    fs::remove(p);
}

TEST_CASE("greedy policy revenue") {
    const Instance det = single(5, 3, 1.0, 10);
    const ValueTable dv = value_iteration(det);
    CHECK(optimal_policy_revenue(det, dv, 1, 50) == 30.0);

    const Instance free = Instance::stationary({2}, {0}, {{0}}, {0.7}, 4);
    CHECK(optimal_policy_revenue(free, value_iteration(free), 1, 100) == 0.0);

    const Instance inst = toy();
    const ValueTable vt = value_iteration(inst);
    const double v1 = vt.at(1, inst.capacities());
    Decider greedy = [&](int t, std::span<const int> x, int j) {
        StateVector y(x.begin(), x.end());
        for (int i : inst.legs_of(j)) --y[i];
        return inst.fare(j) + vt.at(t + 1, y) >= vt.at(t + 1, x);
    };
    SimOptions o;
    o.omega_policy = 0.0;
    o.n_max = 100'000;
    const SimResult sim = simulate_decisions(inst, greedy, 11, o);
    CHECK(std::abs(sim.Rbar - v1) <= 3.0 * sim.Se);
    CHECK(std::abs(optimal_policy_revenue(inst, vt, 11, 100'000) - v1) <= 3.0 * sim.Se);
}
