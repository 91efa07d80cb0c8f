#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "nrm/errors.hpp"
#include "nrm/vfa.hpp"

using namespace nrmtest;

namespace {

RidgeBasis random_normed(Rng& rng, const std::vector<int>& caps) {
    std::vector<double> b(caps.size());
    for (auto& v : b) v = rng.uniform(-1.0, 1.0);
    return project_norm(b, caps);
}

StateVector random_state(Rng& rng, const std::vector<int>& caps) {
    StateVector x(caps.size());
    for (std::size_t i = 0; i < caps.size(); ++i) x[i] = rng.uniform_int(0, caps[i]);
    return x;
}

}  // namespace

TEST_CASE("ridge basis values") {
    CHECK(eval_basis(RidgeBasis{{0.3, -0.7}}, StateVector{0, 0}) == 1.0);
    const std::vector<int> caps{10, 3};
    const RidgeBasis b{{1.0 / 20.0, 1.0 / 6.0}};
    CHECK(weighted_l1(b.beta, caps) == doctest::Approx(1.0));
    CHECK(eval_basis(b, caps) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("normalised directions keep the basis within [1/e, e]") {
    Rng rng(2024);
    long violations = 0;
    for (int n = 0; n < 10'000; ++n) {
        std::vector<int> caps(static_cast<std::size_t>(rng.uniform_int(1, 6)));
        for (auto& c : caps) c = rng.uniform_int(1, 20);
        const RidgeBasis b = random_normed(rng, caps);
        const double v = eval_basis(b, random_state(rng, caps));
        if (v < std::exp(-1.0) || v > std::exp(1.0)) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("ridge basis is convex") {
    Rng rng(7);
    const std::vector<int> caps{4, 6, 3};
    for (int n = 0; n < 2000; ++n) {
        const RidgeBasis b = random_normed(rng, caps);
        std::vector<double> x(3), y(3), z(3);
        for (int i = 0; i < 3; ++i) {
            x[i] = rng.uniform(0, caps[i]);
            y[i] = rng.uniform(0, caps[i]);
        }
        const double s = rng.uniform01();
        auto phi = [&](const std::vector<double>& p) {
            double d = 0.0;
            for (int i = 0; i < 3; ++i) d += b.beta[i] * p[i];
            return std::exp(-d);
        };
        for (int i = 0; i < 3; ++i) z[i] = s * x[i] + (1 - s) * y[i];
        CHECK(phi(z) <= s * phi(x) + (1 - s) * phi(y) + 1e-12);
    }
}

TEST_CASE("projection onto the norm surface") {
    const RidgeBasis a = project_norm(std::vector<double>{0.5, 0.5}, std::vector<int>{3, 3});
    CHECK(a.beta[0] == doctest::Approx(1.0 / 6.0));
    CHECK(a.beta[1] == doctest::Approx(1.0 / 6.0));
    const RidgeBasis b = project_norm(std::vector<double>{-2, 1}, std::vector<int>{1, 1});
    CHECK(b.beta[0] == doctest::Approx(-2.0 / 3.0));
    CHECK(b.beta[1] == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(project_norm(std::vector<double>{0, 0}, std::vector<int>{1, 1}), DegenerateDirection);
    Rng rng(3);
    for (int n = 0; n < 200; ++n) {
        const std::vector<int> caps{2, 5, 9};
        CHECK(weighted_l1(random_normed(rng, caps).beta, caps) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("approximation evaluation") {
    Approximation a = Approximation::zero(3);
    a.xi = {7, 7, 7};
    CHECK(eval_approx(a, 2, StateVector{1, 1}) == 7.0);
    CHECK(eval_approx(a, 4, StateVector{1, 1}) == 0.0);

    Approximation aff = Approximation::zero(2);
    aff.baseline = AffineBaseline{{1.5, 2.0}, {{3.0, 4.0}, {0.5, 0.25}}};
    CHECK(eval_approx(aff, 1, StateVector{2, 1}) == doctest::Approx(1.5 + 6 + 4));
    CHECK(eval_approx(aff, 2, StateVector{2, 1}) == doctest::Approx(2.0 + 1 + 0.25));

    Approximation r = Approximation::zero(2);
    r.bases = {RidgeBasis{{0.0, 0.0}}};
    r.V = {{1.0}, {1.0}};
    CHECK(eval_approx(r, 1, StateVector{0, 2}) == -1.0);
    CHECK(eval_approx(r, 2, StateVector{2, 2}) == -1.0);
}

TEST_CASE("policy decisions") {
    const Instance inst = tiny2(3);
    const Approximation zero = Approximation::zero(3);
    CHECK_FALSE(decide(zero, inst, 1, StateVector{0, 2}, 0));
    CHECK_FALSE(decide(zero, inst, 2, StateVector{2, 0}, 2));
    for (int j = 0; j < 3; ++j) CHECK(decide(zero, inst, 2, StateVector{1, 1}, j));

    // Affine baseline: the bid-price rule with next-period prices.
    Approximation aff = Approximation::zero(3);
    aff.baseline = AffineBaseline{{0, 0, 0}, {{100, 100}, {9, 13}, {50, 50}}};
    CHECK(decide(aff, inst, 1, StateVector{2, 2}, 0));        // 10 >= 9
    CHECK_FALSE(decide(aff, inst, 1, StateVector{2, 2}, 1));  // 12 < 13
    CHECK_FALSE(decide(aff, inst, 1, StateVector{2, 2}, 2));  // 18 < 22
    aff.baseline->W[1] = {10, 2};
    CHECK(decide(aff, inst, 1, StateVector{2, 2}, 0));  // tie accepts
    // Last period: leftover capacity is worthless.
    for (int j = 0; j < 3; ++j) CHECK(decide(aff, inst, 3, StateVector{2, 2}, j));

    // The offsets xi never enter a decision.
    Rng rng(5);
    Approximation a = Approximation::zero(3);
    a.bases = {random_normed(rng, inst.capacities()), random_normed(rng, inst.capacities())};
    a.V = {{5, -3}, {40, 2}, {-8, 30}};
    for (int n = 0; n < 200; ++n) {
        const int t = rng.uniform_int(1, 3), j = rng.uniform_int(0, 2);
        const StateVector x = random_state(rng, inst.capacities());
        const bool before = decide(a, inst, t, x, j);
        Approximation b = a;
        for (auto& v : b.xi) v = rng.uniform(-100, 100);
        CHECK(decide(b, inst, t, x, j) == before);
    }
}

TEST_CASE("positive ridge weights give a nondecreasing approximation") {
    const Instance inst = Instance::stationary({3, 2, 2}, {1, 1, 1}, {{0}, {1}, {2}}, {0.2, 0.2, 0.2}, 2);
    Rng rng(9);
    // Nonnegative directions make each basis decreasing in x.
    auto decreasing = [&] {
        std::vector<double> b(3);
        for (auto& v : b) v = rng.uniform(0.0, 1.0);
        return project_norm(b, inst.capacities());
    };
    for (int n = 0; n < 50; ++n) {
        Approximation a = Approximation::zero(2);
        a.baseline = AffineBaseline{{1, 2}, {{rng.uniform01(), 0, 2}, {1, rng.uniform01(), 0}}};
        a.bases = {decreasing(), decreasing()};
        a.V = {{rng.uniform(0, 5), rng.uniform(0, 5)}, {rng.uniform(0, 5), rng.uniform(0, 5)}};
        for (int t = 1; t <= 2; ++t)
            for (const auto& x : all_states(inst))
                for (int i = 0; i < 3; ++i) {
                    if (x[i] == inst.capacity(i)) continue;
                    StateVector up = x;
                    ++up[i];
                    CHECK(eval_approx(a, t, up) >= eval_approx(a, t, x) - 1e-12);
                }
    }
}

TEST_CASE("approximation json round trip") {
    Approximation a = Approximation::zero(2);
    a.baseline = AffineBaseline{{1.25, -2}, {{0.1, 0.2}, {0.3, 1.0 / 3.0}}};
    a.bases = {RidgeBasis{{0.1, -0.2}}};
    a.V = {{3.5}, {1e-17}};
    a.xi = {0.7, -1.0 / 7.0};
    const Approximation b = approximation_from_json(approximation_to_json(a));
    CHECK(b.xi == a.xi);
    CHECK(b.V == a.V);
    CHECK(b.bases[0].beta == a.bases[0].beta);
    CHECK(b.baseline->theta == a.baseline->theta);
    CHECK(b.baseline->W == a.baseline->W);
    CHECK_THROWS_AS(approximation_from_json("{"), ParseError);
    CHECK_THROWS_AS(approximation_from_json(R"({"xi":[1,2],"V":[[1]],"betas":[[0.5]]})"), ValidationError);
}
