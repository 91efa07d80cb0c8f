#include "nrm/algorithm.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <iostream>
#include <set>

#include "nrm/errors.hpp"
#include "nrm/flow_balance.hpp"

namespace nrm {

const char* to_string(Mode m) { return m == Mode::Addon ? "addon" : "standalone"; }

const char* to_string(SubproblemMode m) {
    switch (m) {
        case SubproblemMode::Auto: return "auto";
        case SubproblemMode::Exact: return "exact";
        case SubproblemMode::Local: return "local";
    }
    return "unknown";
}

void AlgoConfig::validate() const {
    auto unit = [](double v, const char* name) {
        if (!(v > 0.0 && v < 1.0)) throw InvalidArgument(std::string(name) + " must lie in (0, 1)");
    };
    unit(omega_gap, "omega_gap");
    unit(omega_policy, "omega_policy");
    unit(omega_pgap, "omega_pgap");
    if (!(subproblem_time_limit_s > 0.0)) throw InvalidArgument("subproblem time limit must be positive");
    if (!(basis_time_limit_s > 0.0)) throw InvalidArgument("basis time limit must be positive");
    if (!(max_wall_s > 0.0)) throw InvalidArgument("wall-clock limit must be positive");
    if (max_K < 1) throw InvalidArgument("max_K must be at least 1");
    if (row_starts < 0 || basis_starts < 1) throw InvalidArgument("multistart counts out of range");
    if (threads < 1) throw InvalidArgument("threads must be positive");
    if (sim_n_max < 2) throw InvalidArgument("sim_n_max must be at least 2");
}

bool AlgoConfig::exact_for(const Instance& inst) const {
    switch (subproblems) {
        case SubproblemMode::Exact: return true;
        case SubproblemMode::Local: return false;
        case SubproblemMode::Auto: return inst.state_count() <= exact_state_limit;
    }
    return false;
}

double RunTrace::best_upper() const {
    double best = kInf;
    for (const auto& r : records) best = std::min(best, r.Zhat);
    return best;
}

RidgeBasis initial_basis(const Instance& inst) {
    RidgeBasis b;
    for (int i = 0; i < inst.num_legs(); ++i)
        b.beta.push_back(inst.capacity(i) > 0 ? 1.0 / (inst.capacity(i) * static_cast<double>(inst.num_legs())) : 0.0);
    return b;
}

namespace {

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

std::vector<int> shuffled(int lo, int hi, Rng& rng) {
    std::vector<int> v;
    for (int t = lo; t <= hi; ++t) v.push_back(t);
    for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[rng.below(k)]);
    return v;
}

struct PendingLambda {
    int t;
    StateVector x;
    ActionVector u;
};

struct PendingMu {
    int t;
    int leg;
    StateVector x;
};

}  // namespace

RowGenResult row_generation(const Instance& inst, MasterProblem& master, RowSets& rows, const AlgoConfig& cfg,
                            bool monotonicity_rows, Rng& rng, const Deadline& deadline) {
    const int tau = inst.horizon();
    const bool exact = cfg.exact_for(inst);
    const SearchMode mode = exact ? SearchMode::Exact : SearchMode::Local;
    monotonicity_rows = monotonicity_rows && !master.is_affine() && master.num_bases() > 0;
    RowGenResult out;
    out.exact = exact;
    std::uint64_t search_counter = 0;

    while (true) {
        ++out.rounds;
        out.sol = master.solve(rows);
        if (!out.sol.optimal()) return out;
        if (cfg.check_flow_balance && !master.is_affine() && master.num_bases() > 0 && !out.sol.bound_active) {
            const double r = max_flow_residual(inst, out.sol.duals, rows, master.bases());
            out.max_flow_residual = std::max(out.max_flow_residual, r);
#ifndef NDEBUG
            if (r > 1e-6) throw Error("dual flow balance violated after a master solve");
#endif
        }
        const Approximation& a = out.sol.approx;
        // Round-off in the master grows with the size of the ridge weights.
        double v_max = 0.0;
        for (const auto& row : out.sol.approx.V)
            for (double v : row) v_max = std::max(v_max, std::abs(v));
        const double tol = 1e-7 * (1.0 + std::abs(out.sol.Z_B)) + 1e-9 * v_max;

        LocalSearchOptions opts;
        opts.random_starts = cfg.row_starts;
        opts.time_limit_s = cfg.subproblem_time_limit_s;
        opts.deadline = deadline;

        std::vector<PendingLambda> pending;
        std::set<std::tuple<int, StateVector, ActionVector>> queued;
        auto queue = [&](int t, const StateVector& x, const ActionVector& u) {
            if (rows.has_lambda(t, x, u) || !queued.emplace(t, x, u).second) return false;
            pending.push_back({t, x, u});
            return true;
        };

        out.pi_hat.assign(static_cast<std::size_t>(tau), 0.0);
        int stalled_period = 0;
        for (int t : shuffled(1, tau, rng)) {
            opts.seed = derive_seed(cfg.seed, (static_cast<std::uint64_t>(out.rounds) << 20) + search_counter++);
            const SeparationResult res = row_subproblem(inst, a, t, mode, opts);
            if (res.quality == ProofQuality::TimeLimited) out.exact = false;
            out.pi_hat[t - 1] = std::max(0.0, -res.objective);
            if (!(res.objective < -tol)) continue;
            if (!queue(t, res.x, res.u) && rows.has_lambda(t, res.x, res.u)) stalled_period = t;
            // The same pair may cut off other periods as well.
            for (int s = 1; s <= tau; ++s) {
                if (s == t || (s == 1 && res.x != inst.capacities())) continue;
                if (reduced_cost(inst, a, s, res.x, res.u) < -tol) queue(s, res.x, res.u);
            }
        }
        out.pi_hat_sum = 0.0;
        for (double v : out.pi_hat) out.pi_hat_sum += v;

        std::vector<PendingMu> pending_mu;
        if (monotonicity_rows) {
            std::set<std::tuple<int, int, StateVector>> queued_mu;
            auto queue_mu = [&](int t, int leg, const StateVector& x) {
                if (rows.has_mu(t, leg, x) || !queued_mu.emplace(t, leg, x).second) return;
                pending_mu.push_back({t, leg, x});
            };
            for (int t : shuffled(2, tau, rng)) {
                const int leg = static_cast<int>(rng.below(static_cast<std::uint64_t>(inst.num_legs())));
                opts.seed = derive_seed(cfg.seed, (static_cast<std::uint64_t>(out.rounds) << 20) + search_counter++);
                const SeparationResult res = mono_subproblem(inst, a, t, leg, mode, opts);
                if (!res.found() || !(res.objective < -tol)) continue;
                queue_mu(t, leg, res.x);
                for (int s = 2; s <= tau; ++s)
                    for (int i = 0; i < inst.num_legs(); ++i) {
                        if ((s == t && i == leg) || res.x[i] >= inst.capacity(i)) continue;
                        if (mono_slack(inst, a, s, i, res.x) < -tol) queue_mu(s, i, res.x);
                    }
            }
        }

        const bool cr_met = out.pi_hat_sum <= cfg.omega_gap * out.sol.Z_B && !out.sol.bound_active;
        if (cfg.verbose)
            std::cerr << "  round " << out.rounds << ": Z_B=" << out.sol.Z_B << " sum(pi)=" << out.pi_hat_sum
                      << " new rows=" << pending.size() + pending_mu.size() << "\n";
        if ((cr_met && pending_mu.empty()) || (pending.empty() && pending_mu.empty())) {
            if (!cr_met && stalled_period > 0)
                throw StallError(stalled_period, "row generation regenerated an existing row in period " +
                                                     std::to_string(stalled_period));
            return out;
        }
        if (deadline.expired() || out.rounds >= cfg.max_rowgen_rounds) {
            out.truncated = true;
            return out;
        }
        for (const auto& p : pending) rows.add_lambda(inst, p.t, p.x, p.u);
        for (const auto& p : pending_mu) rows.add_mu(inst, p.t, p.leg, p.x);
    }
}

RowGenResult row_generation(const Instance& inst, const std::optional<AffineBaseline>& baseline,
                            const std::vector<RidgeBasis>& bases, RowSets& rows, const AlgoConfig& cfg) {
    MasterProblem master(inst, baseline, bases);
    Rng rng(derive_seed(cfg.seed, 0x726f77));
    return row_generation(inst, master, rows, cfg, cfg.monotonicity_rows_at_K1 && bases.size() == 1, rng);
}

BoundEstimate estimate_bounds(const Instance& inst, const MasterSolution& sol, const AlgoConfig& cfg,
                              bool want_exact) {
    BoundEstimate b;
    const bool exact = cfg.exact_for(inst);
    LocalSearchOptions opts;
    opts.random_starts = cfg.row_starts;
    opts.time_limit_s = cfg.subproblem_time_limit_s;
    opts.seed = derive_seed(cfg.seed, 0x626e64);
    double local_sum = 0.0;
    for (int t = 1; t <= inst.horizon(); ++t)
        local_sum += std::max(0.0, -row_subproblem(inst, sol.approx, t, exact ? SearchMode::Exact : SearchMode::Local,
                                                   opts)
                                        .objective);
    b.Zhat = sol.Z_B + local_sum;
    if (exact) {
        b.Zbar = b.Zhat;
    } else if (!want_exact) {
        b.reason = "not requested";
    } else if (inst.state_count() > cfg.exact_state_limit * 100) {
        b.reason = "state space too large for exact separation";
    } else {
        double sum = 0.0;
        for (int t = 1; t <= inst.horizon(); ++t)
            sum += std::max(0.0, -row_subproblem(inst, sol.approx, t, SearchMode::Exact).objective);
        b.Zbar = sol.Z_B + sum;
    }
    return b;
}

namespace {

SimOptions sim_options(const AlgoConfig& cfg) {
    SimOptions o;
    o.omega_policy = cfg.omega_policy;
    o.n_max = cfg.sim_n_max;
    o.threads = cfg.threads;
    return o;
}

std::uint64_t sim_seed(const AlgoConfig& cfg) { return derive_seed(cfg.seed, 0x73696d); }

TraceRecord make_record(int K, const RowGenResult& rg, const SimResult& sim, const RowSets& rows, double start_cpu) {
    TraceRecord r;
    r.K = K;
    r.Z_B = rg.sol.Z_B;
    r.Zhat = rg.Zhat();
    if (rg.exact) r.Zbar = r.Zhat;
    r.Rbar = sim.Rbar;
    r.Se = sim.Se;
    r.N = sim.N;
    r.rows_total = static_cast<long>(rows.total());
    r.cpu_s = cpu_seconds() - start_cpu;
    r.flow_residual = rg.max_flow_residual;
    return r;
}

void log_record(const AlgoConfig& cfg, const std::string& algo, const TraceRecord& r) {
    if (!cfg.verbose) return;
    std::cerr << algo << " K=" << r.K << " Z_B=" << r.Z_B << " Zhat=" << r.Zhat << " Rbar=" << r.Rbar
              << " Se=" << r.Se << " N=" << r.N << " rows=" << r.rows_total << " cpu=" << r.cpu_s << "s\n";
}

}  // namespace

AaResult solve_aa(const Instance& inst, const AlgoConfig& cfg, const Deadline& deadline) {
    cfg.validate();
    const double start = cpu_seconds();
    AaResult res;
    res.rows = RowSets::initial(inst);
    MasterProblem master = MasterProblem::affine(inst, cfg.aa_nonnegative);
    Rng rng(derive_seed(cfg.seed, 0x6161));
    res.rowgen = row_generation(inst, master, res.rows, cfg, false, rng, deadline);
    if (!res.rowgen.sol.optimal())
        throw Error(std::string("affine master ended with status ") + to_string(res.rowgen.sol.status));
    res.baseline = *res.rowgen.sol.approx.baseline;
    res.sim = simulate_policy(inst, res.rowgen.sol.approx, sim_seed(cfg), sim_options(cfg));
    res.record = make_record(0, res.rowgen, res.sim, res.rows, start);
    log_record(cfg, "aa", res.record);
    return res;
}

namespace {

struct Setup {
    std::optional<AffineBaseline> baseline;
    RowSets rows;
    std::optional<TraceRecord> baseline_record;
};

Setup prepare(const Instance& inst, const AlgoConfig& cfg, const Deadline& deadline) {
    Setup s;
    if (cfg.mode == Mode::Addon) {
        AaResult aa = solve_aa(inst, cfg, deadline);
        s.baseline = aa.baseline;
        s.rows = std::move(aa.rows);
        s.baseline_record = aa.record;
    } else {
        s.rows = RowSets::initial(inst);
    }
    return s;
}

void note_record(RunTrace& trace, const TraceRecord& rec, const Approximation& approx,
                 const TraceObserver& observer) {
    trace.records.push_back(rec);
    trace.final_approx = approx;
    trace.max_flow_residual = std::max(trace.max_flow_residual, rec.flow_residual);
    if (rec.Rbar > trace.best_Rbar) {
        trace.best_Rbar = rec.Rbar;
        trace.best_K = rec.K;
        trace.best_approx = approx;
    }
    if (observer) observer(rec);
}

/// Common stopping tests after a record; returns true to stop.
bool should_stop(RunTrace& trace, const TraceRecord& rec, const AlgoConfig& cfg, const Deadline& deadline,
                 const RowGenResult& rg) {
    if (rg.truncated || deadline.expired()) {
        trace.status = "wall-clock";
        trace.truncated = true;
        return true;
    }
    if (rec.Zhat > 0.0 && std::abs(1.0 - rec.Rbar / rec.Zhat) < cfg.omega_pgap) {
        trace.status = "ck-met";
        return true;
    }
    if (rec.K >= cfg.max_K) {
        trace.status = "max-K";
        return true;
    }
    return false;
}

}  // namespace

RunTrace h2pialg(const Instance& inst, const AlgoConfig& cfg, const TraceObserver& observer) {
    cfg.validate();
    const double start = cpu_seconds();
    const Deadline deadline(cfg.max_wall_s);
    RunTrace trace;
    trace.algo = "h2pialg";
    trace.mode = cfg.mode;
    Setup setup = prepare(inst, cfg, deadline);
    trace.baseline_record = setup.baseline_record;
    RowSets& rows = setup.rows;
    MasterProblem master(inst, setup.baseline, {initial_basis(inst)});
    Rng rng(derive_seed(cfg.seed, 0x683270));

    for (int K = 1;; ++K) {
        RowGenResult rg = row_generation(inst, master, rows, cfg, cfg.monotonicity_rows_at_K1 && K == 1, rng, deadline);
        if (!rg.sol.optimal()) {
            if (cfg.verbose) std::cerr << "master status " << to_string(rg.sol.status) << "\n";
            trace.status = "master-failed";
            break;
        }
        const SimResult sim = simulate_policy(inst, rg.sol.approx, sim_seed(cfg), sim_options(cfg));
        const TraceRecord rec = make_record(K, rg, sim, rows, start);
        log_record(cfg, trace.algo, rec);
        note_record(trace, rec, rg.sol.approx, observer);
        if (should_stop(trace, rec, cfg, deadline, rg)) break;

        BasisGenConfig bcfg;
        bcfg.starts = cfg.basis_starts;
        bcfg.time_limit_s = cfg.basis_time_limit_s;
        bcfg.seed = derive_seed(cfg.seed, 0x62617300ULL + static_cast<std::uint64_t>(K));
        bcfg.threads = cfg.threads;
        bcfg.deadline = deadline;
        const BasisGenResult gb = generate_basis(inst, rg.sol.duals, rows, bcfg);
        if (!gb.found) {
            trace.status = "imbalance-exhausted";
            break;
        }
        master.add_basis(gb.basis);
        const MasterSolution after = master.solve(rows);
        trace.additions.push_back({K, gb.objective, rg.sol.Z_B, after.optimal() ? after.Z_B : kInf,
                                   rg.sol.dual_degenerate});
    }
    return trace;
}

RunTrace nlialg(const Instance& inst, const AlgoConfig& cfg, const TraceObserver& observer) {
    cfg.validate();
    const double start = cpu_seconds();
    const Deadline deadline(cfg.max_wall_s);
    RunTrace trace;
    trace.algo = "nlialg-local";
    trace.mode = cfg.mode;
    Setup setup = prepare(inst, cfg, deadline);
    trace.baseline_record = setup.baseline_record;
    RowSets& rows = setup.rows;
    MasterProblem master(inst, setup.baseline, {initial_basis(inst)});
    Rng rng(derive_seed(cfg.seed, 0x6e6c69));
    const auto& caps = inst.capacities();

    for (int K = 1;; ++K) {
        RowGenResult rg = row_generation(inst, master, rows, cfg, false, rng, deadline);
        if (!rg.sol.optimal()) {
            if (cfg.verbose) std::cerr << "master status " << to_string(rg.sol.status) << "\n";
            trace.status = "master-failed";
            break;
        }
        // Pattern search on the directions with the LP re-solved at each probe.
        const Deadline step_deadline = deadline.sub(cfg.basis_time_limit_s);
        double best = rg.Zhat();
        for (double step = 0.2; step >= 0.0125 && !step_deadline.expired(); step *= 0.5) {
            bool improved = true;
            while (improved && !step_deadline.expired()) {
                improved = false;
                for (int k = 0; k < master.num_bases() && !step_deadline.expired(); ++k) {
                    for (int i = 0; i < inst.num_legs() && !step_deadline.expired(); ++i) {
                        for (double dir : {1.0, -1.0}) {
                            std::vector<RidgeBasis> trial = master.bases();
                            std::vector<double> beta = trial[k].beta;
                            beta[i] += dir * step / std::max(1, caps[i]);
                            if (weighted_l1(beta, caps) <= 1e-12) continue;
                            trial[k] = project_norm(beta, caps);
                            const std::vector<RidgeBasis> saved = master.bases();
                            master.set_bases(trial);
                            std::optional<RowGenResult> probe;
                            try {
                                probe = row_generation(inst, master, rows, cfg, false, rng, step_deadline);
                            } catch (const StallError&) {
                                // A numerically stuck probe is simply rejected.
                            }
                            if (probe && probe->sol.optimal() && !probe->truncated && !probe->sol.bound_active &&
                                probe->Zhat() < best - 1e-9) {
                                best = probe->Zhat();
                                rg = std::move(*probe);
                                improved = true;
                                break;
                            }
                            master.set_bases(saved);
                        }
                    }
                }
            }
        }
        // Rows may have grown during probing; settle the accepted directions.
        rg = row_generation(inst, master, rows, cfg, false, rng, deadline);
        if (!rg.sol.optimal()) {
            if (cfg.verbose) std::cerr << "master status " << to_string(rg.sol.status) << "\n";
            trace.status = "master-failed";
            break;
        }
        const SimResult sim = simulate_policy(inst, rg.sol.approx, sim_seed(cfg), sim_options(cfg));
        const TraceRecord rec = make_record(K, rg, sim, rows, start);
        log_record(cfg, trace.algo, rec);
        note_record(trace, rec, rg.sol.approx, observer);
        if (should_stop(trace, rec, cfg, deadline, rg)) break;

        BasisGenConfig bcfg;
        bcfg.starts = cfg.basis_starts;
        bcfg.time_limit_s = cfg.basis_time_limit_s;
        bcfg.seed = derive_seed(cfg.seed, 0x62617300ULL + static_cast<std::uint64_t>(K));
        bcfg.threads = cfg.threads;
        bcfg.deadline = deadline;
        const BasisGenResult gb = generate_basis(inst, rg.sol.duals, rows, bcfg);
        if (!gb.found) {
            trace.status = "imbalance-exhausted";
            break;
        }
        master.add_basis(gb.basis);
        const MasterSolution after = master.solve(rows);
        trace.additions.push_back({K, gb.objective, rg.sol.Z_B, after.optimal() ? after.Z_B : kInf,
                                   rg.sol.dual_degenerate});
    }
    return trace;
}

}  // namespace nrm
