#include "nrm/subproblems.hpp"

#include <cmath>

#include "nrm/errors.hpp"
#include "nrm/exact_dp.hpp"
#include "nrm/random.hpp"

namespace nrm {

const char* to_string(ProofQuality q) {
    switch (q) {
        case ProofQuality::Global: return "global";
        case ProofQuality::Local: return "local";
        case ProofQuality::TimeLimited: return "time-limited";
    }
    return "unknown";
}

namespace {

/// Slack evaluation at fixed (approximation, t) with per-product factors
/// e^{beta_k . a_j} computed once.
class RowEvaluator {
public:
    RowEvaluator(const Instance& inst, const Approximation& a, int t) : inst_(inst), a_(a), t_(t) {
        const int K = a.num_bases();
        growth_.assign(static_cast<std::size_t>(inst.num_products()) * K, 0.0);
        for (int j = 0; j < inst.num_products(); ++j)
            for (int k = 0; k < K; ++k) {
                double ba = 0.0;
                for (int i : inst.legs_of(j)) ba += a.bases[k].beta[i];
                growth_[static_cast<std::size_t>(j) * K + k] = std::expm1(ba);
            }
        phi_.resize(static_cast<std::size_t>(K));
    }

    /// Fills u with the optimal action at x and returns the slack.
    double at(std::span<const int> x, ActionVector& u) {
        const int K = a_.num_bases();
        const bool last = t_ >= a_.horizon();
        for (int k = 0; k < K; ++k) phi_[k] = eval_basis(a_.bases[k], x);
        double now = a_.psi(t_, x) + a_.xi[t_ - 1];
        for (int k = 0; k < K; ++k) now -= a_.V[t_ - 1][k] * phi_[k];
        double next = 0.0;
        if (!last) {
            next = a_.psi(t_ + 1, x) + a_.xi[t_];
            for (int k = 0; k < K; ++k) next -= a_.V[t_][k] * phi_[k];
        }
        double slack = now - next;
        const auto& p = inst_.probs(t_);
        u.assign(static_cast<std::size_t>(inst_.num_products()), 0);
        for (int j = 0; j < inst_.num_products(); ++j) {
            if (!can_serve(inst_, x, j)) continue;
            double gain = inst_.fare(j);
            if (!last) {
                if (a_.baseline) gain -= a_.baseline->drop(t_ + 1, inst_.column(j));
                for (int k = 0; k < K; ++k)
                    gain -= a_.V[t_][k] * phi_[k] * growth_[static_cast<std::size_t>(j) * K + k];
            }
            const double contrib = p[j] * gain;
            if (contrib >= 0.0) {
                u[j] = 1;
                slack -= contrib;
            }
        }
        return slack;
    }

private:
    const Instance& inst_;
    const Approximation& a_;
    int t_;
    std::vector<double> growth_;
    std::vector<double> phi_;
};

Deadline effective_deadline(const LocalSearchOptions& opts) { return opts.deadline.sub(opts.time_limit_s); }

/// Multi-start steepest descent over +-1 coordinate moves on the lattice
/// box [lo, hi]. `eval` returns the objective at a state.
template <typename Eval>
SeparationResult lattice_search(const std::vector<int>& lo, const std::vector<int>& hi, Eval&& eval,
                                const LocalSearchOptions& opts, std::uint64_t stream) {
    const int n = static_cast<int>(lo.size());
    const Deadline deadline = effective_deadline(opts);
    Rng rng(derive_seed(opts.seed, stream));
    std::vector<StateVector> starts;
    starts.push_back(hi);
    starts.push_back(lo);
    for (int s = 0; s < opts.random_starts; ++s) {
        StateVector x(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) x[i] = rng.uniform_int(lo[i], hi[i]);
        starts.push_back(std::move(x));
    }

    SeparationResult best;
    best.quality = ProofQuality::Local;
    bool timed_out = false;
    for (const auto& start : starts) {
        if (deadline.expired() && best.found()) {
            timed_out = true;
            break;
        }
        StateVector x = start;
        double fx = eval(x);
        while (true) {
            if (deadline.expired()) {
                timed_out = true;
                break;
            }
            StateVector best_y;
            double best_f = fx;
            StateVector y = x;
            for (int i = 0; i < n; ++i) {
                for (int d : {-1, 1}) {
                    const int v = x[i] + d;
                    if (v < lo[i] || v > hi[i]) continue;
                    y[i] = v;
                    const double fy = eval(y);
                    if (fy < best_f - 1e-12) {
                        best_f = fy;
                        best_y = y;
                    }
                    y[i] = x[i];
                }
            }
            if (best_y.empty()) break;
            x = std::move(best_y);
            fx = best_f;
        }
        if (!best.found() || fx < best.objective) {
            best.x = x;
            best.objective = fx;
        }
        if (timed_out) break;
    }
    if (timed_out) best.quality = ProofQuality::TimeLimited;
    return best;
}

void check_period(const Approximation& a, const Instance& inst, int t) {
    if (t < 1 || t > inst.horizon()) throw InvalidArgument("subproblem: period out of range");
    if (a.horizon() != inst.horizon()) throw InvalidArgument("subproblem: approximation horizon mismatch");
}

}  // namespace

double reduced_cost(const Instance& inst, const Approximation& approx, int t, std::span<const int> x,
                    std::span<const std::uint8_t> u) {
    check_period(approx, inst, t);
    if (!is_feasible(inst, t, x, u)) throw InvalidArgument("reduced_cost: infeasible state-action pair");
    const auto& p = inst.probs(t);
    double slack = eval_approx(approx, t, x) - eval_approx(approx, t + 1, x);
    for (int j = 0; j < inst.num_products(); ++j)
        if (u[j]) slack -= p[j] * (inst.fare(j) + continuation_delta(approx, inst, t, x, j));
    return slack;
}

double best_action(const Instance& inst, const Approximation& approx, int t, std::span<const int> x,
                   ActionVector& u) {
    check_period(approx, inst, t);
    RowEvaluator ev(inst, approx, t);
    return ev.at(x, u);
}

SeparationResult row_subproblem(const Instance& inst, const Approximation& approx, int t, SearchMode mode,
                                const LocalSearchOptions& opts) {
    check_period(approx, inst, t);
    RowEvaluator ev(inst, approx, t);
    ActionVector u;
    SeparationResult res;
    res.t = t;
    if (t == 1) {
        res.x = inst.full_state();
        res.objective = ev.at(res.x, res.u);
        return res;
    }
    if (mode == SearchMode::Exact) {
        // Descending order so that ties resolve towards fuller states.
        StateIndexer idx(inst.capacities());
        StateVector x(static_cast<std::size_t>(inst.num_legs()), 0);
        for (std::uint64_t code = idx.size(); code-- > 0;) {
            idx.decode(code, x);
            const double f = ev.at(x, u);
            if (!res.found() || f < res.objective) {
                res.x = x;
                res.u = u;
                res.objective = f;
            }
        }
        return res;
    }
    const std::vector<int> lo(static_cast<std::size_t>(inst.num_legs()), 0);
    auto found = lattice_search(lo, inst.capacities(), [&](const StateVector& x) { return ev.at(x, u); }, opts,
                                static_cast<std::uint64_t>(t));
    found.t = t;
    found.objective = ev.at(found.x, found.u);
    return found;
}

double mono_slack(const Instance& inst, const Approximation& approx, int t, int leg, std::span<const int> x) {
    check_period(approx, inst, t);
    if (leg < 0 || leg >= inst.num_legs()) throw InvalidArgument("mono_slack: leg out of range");
    StateVector up(x.begin(), x.end());
    ++up[leg];
    double v = approx.baseline ? approx.baseline->W[t - 1][leg] : 0.0;
    for (int k = 0; k < approx.num_bases(); ++k)
        v += approx.V[t - 1][k] * (eval_basis(approx.bases[k], x) - eval_basis(approx.bases[k], up));
    return v;
}

SeparationResult mono_subproblem(const Instance& inst, const Approximation& approx, int t, int leg,
                                 SearchMode mode, const LocalSearchOptions& opts) {
    check_period(approx, inst, t);
    if (leg < 0 || leg >= inst.num_legs()) throw InvalidArgument("mono_subproblem: leg out of range");
    SeparationResult res;
    res.t = t;
    res.leg = leg;
    if (t == 1 || inst.capacity(leg) == 0) return res;
    std::vector<int> hi = inst.capacities();
    --hi[leg];
    auto eval = [&](const StateVector& x) { return mono_slack(inst, approx, t, leg, x); };
    if (mode == SearchMode::Exact) {
        StateIndexer idx(hi);
        StateVector x(static_cast<std::size_t>(inst.num_legs()), 0);
        for (std::uint64_t code = idx.size(); code-- > 0;) {
            idx.decode(code, x);
            const double f = eval(x);
            if (!res.found() || f < res.objective) {
                res.x = x;
                res.objective = f;
            }
        }
        return res;
    }
    const std::vector<int> lo(static_cast<std::size_t>(inst.num_legs()), 0);
    auto found = lattice_search(lo, hi, eval, opts, 0x6d6f6e6fULL * 1000 + static_cast<std::uint64_t>(t) * 64 + leg);
    found.t = t;
    found.leg = leg;
    return found;
}

}  // namespace nrm
