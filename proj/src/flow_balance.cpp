#include "nrm/flow_balance.hpp"

#include <algorithm>
#include <cmath>

#include "nrm/errors.hpp"
#include "nrm/parallel.hpp"
#include "nrm/random.hpp"

namespace nrm {

namespace {

double dot(std::span<const double> beta, std::span<const int> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < beta.size(); ++i) s += beta[i] * x[i];
    return s;
}

}  // namespace

ImbalanceEvaluator::ImbalanceEvaluator(const Instance& inst, const DualSolution& duals, const RowSets& rows)
    : inst_(inst) {
    if (rows.horizon() != inst.horizon() || !duals.matches(rows))
        throw StaleDuals("flow imbalance: duals do not match the row sets");
    const int tau = inst.horizon();
    lambda_.resize(static_cast<std::size_t>(tau));
    mu_.resize(static_cast<std::size_t>(tau));
    for (int t = 1; t <= tau; ++t) {
        const auto& p = inst.probs(t);
        for (std::size_t r = 0; r < rows.lambda(t).size(); ++r) {
            const double w = duals.lambda[t - 1][r];
            if (w == 0.0) continue;
            const auto& row = rows.lambda(t)[r];
            LambdaTerm term{w, row.x, {}};
            for (int j = 0; j < inst.num_products(); ++j)
                if (row.u[j] && p[j] > 0.0) term.served.push_back(j);
            lambda_[t - 1].push_back(std::move(term));
        }
        for (std::size_t r = 0; r < rows.mu(t).size(); ++r) {
            const double w = duals.mu[t - 1][r];
            if (w == 0.0) continue;
            mu_[t - 1].push_back({w, rows.mu(t)[r].leg, rows.mu(t)[r].x});
        }
    }
}

ImbalanceProfile ImbalanceEvaluator::profile(std::span<const double> beta) const {
    const int tau = inst_.horizon();
    std::vector<double> growth(static_cast<std::size_t>(inst_.num_products()));
    for (int j = 0; j < inst_.num_products(); ++j) {
        double ba = 0.0;
        for (int i : inst_.legs_of(j)) ba += beta[i];
        growth[j] = std::expm1(ba);
    }
    ImbalanceProfile out;
    out.ell.assign(static_cast<std::size_t>(tau), 0.0);
    // Outflow of period t-1 is reused as the inflow term of period t.
    double carried = 0.0;
    for (int t = 1; t <= tau; ++t) {
        const auto& p = inst_.probs(t);
        double own = 0.0, outflow = 0.0;
        for (const auto& term : lambda_[t - 1]) {
            const double phi = std::exp(-dot(beta, term.x));
            own += term.weight * phi;
            double g = 1.0;
            for (int j : term.served) g += p[j] * growth[j];
            outflow += term.weight * phi * g;
        }
        double mono = 0.0;
        for (const auto& term : mu_[t - 1]) {
            const double phi = std::exp(-dot(beta, term.x));
            // phi(x) - phi(x + e_i) = phi(x) (1 - e^{-beta_i})
            mono += term.weight * phi * -std::expm1(-beta[term.leg]);
        }
        double ell = own - mono;
        if (t == 1) {
            ell -= std::exp(-dot(beta, inst_.capacities()));
        } else {
            ell -= carried;
        }
        carried = outflow;
        out.ell[t - 1] = ell;
        out.weighted += static_cast<double>(tau - t + 1) * std::abs(ell);
    }
    return out;
}

ImbalanceProfile flow_imbalance(const Instance& inst, const DualSolution& duals, const RowSets& rows,
                                const RidgeBasis& b) {
    return ImbalanceEvaluator(inst, duals, rows).profile(b.beta);
}

double weighted_objective(const Instance& inst, const DualSolution& duals, const RowSets& rows,
                          const RidgeBasis& b) {
    return flow_imbalance(inst, duals, rows, b).weighted;
}

double max_flow_residual(const Instance& inst, const DualSolution& duals, const RowSets& rows,
                         const std::vector<RidgeBasis>& bases) {
    ImbalanceEvaluator ev(inst, duals, rows);
    double worst = 0.0;
    for (const auto& b : bases)
        for (double l : ev.profile(b.beta).ell) worst = std::max(worst, std::abs(l));
    return worst;
}

namespace {

struct StartResult {
    std::vector<double> beta;
    double value = -1.0;
};

StartResult ascend(const ImbalanceEvaluator& ev, std::span<const int> caps, std::uint64_t seed,
                   const Deadline& deadline) {
    const int n = static_cast<int>(caps.size());
    Rng rng(seed);
    std::vector<double> raw(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double mag = rng.uniform(0.05, 1.0) / std::max(1, caps[i]);
        raw[i] = rng.uniform01() < 0.5 ? -mag : mag;
    }
    StartResult best{project_norm(raw, caps).beta, 0.0};
    best.value = ev.weighted(best.beta);

    double step = 0.25;
    while (step >= 1e-4 && !deadline.expired()) {
        bool improved = false;
        for (int i = 0; i < n && !deadline.expired(); ++i) {
            for (double dir : {1.0, -1.0}) {
                std::vector<double> trial = best.beta;
                trial[i] += dir * step / std::max(1, caps[i]);
                if (weighted_l1(trial, caps) <= 0.0) continue;
                trial = project_norm(trial, caps).beta;
                const double v = ev.weighted(trial);
                if (v > best.value + 1e-12) {
                    best.beta = std::move(trial);
                    best.value = v;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    return best;
}

}  // namespace

BasisGenResult generate_basis(const Instance& inst, const DualSolution& duals, const RowSets& rows,
                              const BasisGenConfig& cfg) {
    ImbalanceEvaluator ev(inst, duals, rows);
    const Deadline deadline = cfg.deadline.sub(cfg.time_limit_s);
    const int starts = std::max(1, cfg.starts);
    std::vector<StartResult> results(static_cast<std::size_t>(starts));
    parallel_for(results.size(), cfg.threads, [&](std::size_t s) {
        if (s > 0 && deadline.expired()) return;
        results[s] = ascend(ev, inst.capacities(), derive_seed(cfg.seed, s), deadline);
    });
    BasisGenResult out;
    for (int s = 0; s < starts; ++s) {
        if (results[s].beta.empty()) continue;
        if (out.start < 0 || results[s].value > out.objective) {
            out.start = s;
            out.objective = results[s].value;
            out.basis.beta = results[s].beta;
        }
    }
    out.found = out.objective > cfg.tolerance;
    return out;
}

Decomposition decomposition_check(const Instance& inst, const Approximation& approx,
                                  const std::vector<WeightedPair>& lambda) {
    const int tau = inst.horizon();
    if (approx.horizon() != tau) throw InvalidArgument("decomposition_check: horizon mismatch");
    for (const auto& w : lambda) {
        if (!(w.weight >= 0.0)) throw InvalidArgument("decomposition_check: weights must be nonnegative");
        if (w.t < 1 || w.t > tau || !is_feasible(inst, w.t, w.x, w.u))
            throw InvalidArgument("decomposition_check: infeasible pair");
    }
    Decomposition d;
    d.Xi = approx.xi[0];
    const int K = approx.num_bases();
    // Per basis and period: inflow sum_t lambda phi and outflow sum_t lambda phi (1 + ...).
    std::vector<std::vector<double>> own(static_cast<std::size_t>(K), std::vector<double>(tau + 1, 0.0));
    auto outflow = own;
    for (const auto& w : lambda) {
        const auto& p = inst.probs(w.t);
        double revenue = 0.0;
        for (int j = 0; j < inst.num_products(); ++j)
            if (w.u[j]) revenue += p[j] * inst.fare(j);

        double expected_next = eval_approx(approx, w.t + 1, w.x);
        for (int j = 0; j < inst.num_products(); ++j) {
            if (!w.u[j]) continue;
            StateVector y = w.x;
            for (int i : inst.legs_of(j)) --y[i];
            expected_next += p[j] * (eval_approx(approx, w.t + 1, y) - eval_approx(approx, w.t + 1, w.x));
        }
        d.direct += w.weight * (eval_approx(approx, w.t, w.x) - revenue - expected_next);
        d.Xi -= w.weight * revenue;

        double psi_next = approx.psi(w.t + 1, w.x);
        for (int j = 0; j < inst.num_products(); ++j)
            if (w.u[j] && approx.baseline) psi_next -= p[j] * approx.baseline->drop(w.t + 1, inst.column(j));
        d.Psi += w.weight * (approx.psi(w.t, w.x) - psi_next);

        for (int k = 0; k < K; ++k) {
            const double phi = eval_basis(approx.bases[k], w.x);
            double g = 1.0;
            for (int j = 0; j < inst.num_products(); ++j) {
                if (!w.u[j]) continue;
                double ba = 0.0;
                for (int i : inst.legs_of(j)) ba += approx.bases[k].beta[i];
                g += p[j] * std::expm1(ba);
            }
            own[k][w.t] += w.weight * phi;
            outflow[k][w.t] += w.weight * phi * g;
        }
    }
    for (int k = 0; k < K; ++k) {
        d.Phi -= approx.V[0][k] * eval_basis(approx.bases[k], inst.capacities());
        for (int t = 2; t <= tau; ++t) d.Phi -= approx.V[t - 1][k] * (own[k][t] - outflow[k][t - 1]);
    }
    return d;
}

}  // namespace nrm
