#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nrm/exact_dp.hpp"
#include "nrm/master.hpp"
#include "nrm/model.hpp"
#include "nrm/random.hpp"
#include "nrm/vfa.hpp"

namespace nrmtest {

using namespace nrm;

inline std::string data_path(const std::string& file) { return std::string(NRM_DATA_DIR) + "/" + file; }

inline Instance toy() { return load_instance(data_path("toy2leg.json")); }

/// One leg, one product.
inline Instance single(int c, int tau, double p, double f) {
    return Instance::stationary({c}, {f}, {{0}}, {p}, tau);
}

/// Two legs with capacity 2, a local product on each leg and a through product.
inline Instance tiny2(int tau = 4) {
    return Instance::stationary({2, 2}, {10, 12, 18}, {{0}, {1}, {0, 1}}, {0.3, 0.25, 0.2}, tau);
}

/// Small random instance with at most a few hundred states.
inline Instance random_tiny(std::uint64_t seed) {
    Rng rng(seed);
    const int legs = rng.uniform_int(1, 2);
    std::vector<int> caps;
    for (int i = 0; i < legs; ++i) caps.push_back(rng.uniform_int(1, 3));
    std::vector<std::vector<int>> cons;
    for (int i = 0; i < legs; ++i) cons.push_back({i});
    if (legs == 2) cons.push_back({0, 1});
    const int base = static_cast<int>(cons.size());
    for (int j = 0; j < base; ++j) cons.push_back(cons[j]);  // second fare class
    const int J = static_cast<int>(cons.size());
    const int tau = rng.uniform_int(2, 5);
    std::vector<double> fares(J);
    for (int j = 0; j < J; ++j) {
        const double low = rng.uniform(10, 50) * static_cast<double>(cons[j % base].size());
        fares[j] = j < base ? low : low * rng.uniform(2, 4);
    }
    std::vector<std::vector<double>> probs(tau, std::vector<double>(J));
    for (int t = 0; t < tau; ++t) {
        double total = 0.0;
        for (int j = 0; j < J; ++j) total += probs[t][j] = rng.uniform(0.05, 1.0);
        const double mass = rng.uniform(0.6, 0.95);
        for (int j = 0; j < J; ++j) probs[t][j] *= mass / total;
    }
    return Instance(caps, fares, cons, probs);
}

/// Every lattice state 0 <= x <= c.
inline std::vector<StateVector> all_states(const Instance& inst) {
    StateIndexer idx(inst.capacities());
    std::vector<StateVector> out;
    StateVector x(inst.num_legs(), 0);
    do {
        out.push_back(x);
    } while (idx.next(x));
    return out;
}

/// Every action vector in {0,1}^J.
inline std::vector<ActionVector> all_actions(const Instance& inst) {
    const int J = inst.num_products();
    std::vector<ActionVector> out;
    for (std::uint32_t m = 0; m < (1u << J); ++m) {
        ActionVector u(J);
        for (int j = 0; j < J; ++j) u[j] = (m >> j) & 1u;
        out.push_back(u);
    }
    return out;
}

/// Row sets holding every feasible state-action pair.
inline RowSets full_rows(const Instance& inst) {
    RowSets rows = RowSets::initial(inst);
    const auto states = all_states(inst);
    const auto actions = all_actions(inst);
    for (int t = 1; t <= inst.horizon(); ++t)
        for (const auto& x : states) {
            if (t == 1 && x != inst.capacities()) continue;
            for (const auto& u : actions)
                if (is_feasible(inst, t, x, u)) rows.add_lambda(inst, t, x, u);
        }
    return rows;
}

/// Random approximation with K directions and an optional affine part.
inline Approximation random_approx(const Instance& inst, int K, bool baseline, std::uint64_t seed) {
    Rng rng(seed);
    const int tau = inst.horizon(), I = inst.num_legs();
    Approximation a = Approximation::zero(tau);
    for (int k = 0; k < K; ++k) {
        std::vector<double> beta(I);
        for (double& b : beta) b = rng.uniform(-1, 1);
        a.bases.push_back(project_norm(beta, inst.capacities()));
    }
    a.V.assign(tau, std::vector<double>(K));
    for (int t = 0; t < tau; ++t) {
        a.xi[t] = rng.uniform(0, 100);
        for (double& v : a.V[t]) v = rng.uniform(-40, 40);
    }
    if (baseline) {
        AffineBaseline b{std::vector<double>(tau), std::vector<std::vector<double>>(tau, std::vector<double>(I))};
        for (int t = 0; t < tau; ++t) {
            b.theta[t] = rng.uniform(0, 50);
            for (double& w : b.W[t]) w = rng.uniform(0, 30);
        }
        a.baseline = std::move(b);
    }
    return a;
}

/// State-action pairs visited by a fixed policy, weighted by their exact
/// probabilities. The action in state x is u(t, x).
template <class Policy>
std::vector<std::vector<std::pair<StateVector, ActionVector>>> policy_pairs(const Instance& inst, Policy&& u,
                                                                            std::vector<std::vector<double>>& w) {
    const int tau = inst.horizon();
    std::vector<std::vector<std::pair<StateVector, ActionVector>>> pairs(tau);
    w.assign(tau, {});
    std::map<StateVector, double> dist{{inst.capacities(), 1.0}};
    for (int t = 1; t <= tau; ++t) {
        std::map<StateVector, double> next;
        const auto& p = inst.probs(t);
        for (const auto& [x, m] : dist) {
            const ActionVector a = u(t, x);
            pairs[t - 1].emplace_back(x, a);
            w[t - 1].push_back(m);
            double stay = 1.0;
            for (int j = 0; j < inst.num_products(); ++j) {
                if (!a[j]) continue;
                stay -= p[j];
                StateVector y = x;
                for (int i : inst.legs_of(j)) --y[i];
                next[y] += m * p[j];
            }
            next[x] += m * stay;
        }
        dist = std::move(next);
    }
    return pairs;
}

/// Accept whenever capacity allows.
inline ActionVector greedy_action(const Instance& inst, const StateVector& x) {
    ActionVector u(inst.num_products(), 0);
    for (int j = 0; j < inst.num_products(); ++j) u[j] = can_serve(inst, x, j) ? 1 : 0;
    return u;
}

/// Row sets and duals carrying the exact flow of a policy.
template <class Policy>
std::pair<RowSets, DualSolution> policy_duals(const Instance& inst, Policy&& u) {
    std::vector<std::vector<double>> w;
    const auto pairs = policy_pairs(inst, u, w);
    RowSets rows = RowSets::initial(inst);
    for (int t = 1; t <= inst.horizon(); ++t)
        for (const auto& [x, a] : pairs[t - 1]) rows.add_lambda(inst, t, x, a);
    DualSolution d;
    d.lambda.resize(inst.horizon());
    d.mu.resize(inst.horizon());
    for (int t = 1; t <= inst.horizon(); ++t) {
        d.lambda[t - 1].assign(rows.lambda(t).size(), 0.0);
        for (std::size_t r = 0; r < rows.lambda(t).size(); ++r)
            for (std::size_t q = 0; q < pairs[t - 1].size(); ++q)
                if (rows.lambda(t)[r].x == pairs[t - 1][q].first && rows.lambda(t)[r].u == pairs[t - 1][q].second)
                    d.lambda[t - 1][r] += w[t - 1][q];
    }
    return {std::move(rows), std::move(d)};
}

}  // namespace nrmtest
