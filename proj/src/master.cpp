#include "nrm/master.hpp"

#include <cmath>

#include "nrm/errors.hpp"

namespace nrm {

RowSets::RowSets(int horizon)
    : lambda_(static_cast<std::size_t>(horizon)),
      mu_(static_cast<std::size_t>(horizon)),
      seen_lambda_(static_cast<std::size_t>(horizon)),
      seen_mu_(static_cast<std::size_t>(horizon)) {}

RowSets RowSets::initial(const Instance& inst) {
    RowSets rows(inst.horizon());
    const ActionVector none(static_cast<std::size_t>(inst.num_products()), 0);
    const StateVector empty(static_cast<std::size_t>(inst.num_legs()), 0);
    for (int t = 1; t <= inst.horizon(); ++t) {
        rows.add_lambda(inst, t, inst.full_state(), none);
        if (t >= 2) rows.add_lambda(inst, t, empty, none);
    }
    return rows;
}

bool RowSets::add_lambda(const Instance& inst, int t, const StateVector& x, const ActionVector& u) {
    if (t < 1 || t > horizon()) throw InvalidArgument("RowSets: period out of range");
    if (!is_feasible(inst, t, x, u)) throw InvalidArgument("RowSets: infeasible state-action pair");
    if (!seen_lambda_[t - 1].emplace(x, u).second) return false;
    lambda_[t - 1].push_back({x, u});
    return true;
}

bool RowSets::add_mu(const Instance& inst, int t, int leg, const StateVector& x) {
    if (t < 1 || t > horizon()) throw InvalidArgument("RowSets: period out of range");
    if (leg < 0 || leg >= inst.num_legs() || static_cast<int>(x.size()) != inst.num_legs())
        throw InvalidArgument("RowSets: bad monotonicity row");
    if (t == 1 || x[leg] >= inst.capacity(leg)) throw InvalidArgument("RowSets: monotonicity row needs x_i < c_i");
    for (int i = 0; i < inst.num_legs(); ++i)
        if (x[i] < 0 || x[i] > inst.capacity(i)) throw InvalidArgument("RowSets: state outside the lattice");
    if (!seen_mu_[t - 1].emplace(leg, x).second) return false;
    mu_[t - 1].push_back({leg, x});
    return true;
}

bool RowSets::has_lambda(int t, const StateVector& x, const ActionVector& u) const {
    return seen_lambda_[t - 1].count({x, u}) > 0;
}

bool RowSets::has_mu(int t, int leg, const StateVector& x) const { return seen_mu_[t - 1].count({leg, x}) > 0; }

std::size_t RowSets::total_lambda() const {
    std::size_t n = 0;
    for (const auto& l : lambda_) n += l.size();
    return n;
}

std::size_t RowSets::total_mu() const {
    std::size_t n = 0;
    for (const auto& m : mu_) n += m.size();
    return n;
}

bool DualSolution::matches(const RowSets& rows) const {
    if (static_cast<int>(lambda.size()) != rows.horizon() || static_cast<int>(mu.size()) != rows.horizon())
        return false;
    for (int t = 1; t <= rows.horizon(); ++t)
        if (lambda[t - 1].size() != rows.lambda(t).size() || mu[t - 1].size() != rows.mu(t).size()) return false;
    return true;
}

MasterProblem::MasterProblem(const Instance& inst, std::optional<AffineBaseline> baseline,
                             std::vector<RidgeBasis> bases)
    : inst_(&inst),
      tau_(inst.horizon()),
      legs_(inst.num_legs()),
      baseline_(std::move(baseline)),
      bases_(std::move(bases)) {
    for (const auto& b : bases_)
        if (static_cast<int>(b.beta.size()) != legs_) throw InvalidArgument("MasterProblem: basis dimension mismatch");
    synced_lambda_.assign(static_cast<std::size_t>(tau_), 0);
    synced_mu_.assign(static_cast<std::size_t>(tau_), 0);
    // Few rows can leave the ridge master unbounded, and nearly dependent
    // directions can send the weights far out. Box them well beyond any
    // value a fitted approximation needs; row generation cuts the box away.
    double revenue = 0.0;
    for (int t = 1; t <= tau_; ++t)
        for (int j = 0; j < inst.num_products(); ++j) revenue += inst.prob(t, j) * inst.fare(j);
    box_ = kSafeguardScale * std::max(1.0, revenue);
    rebuild();
}

MasterProblem MasterProblem::affine(const Instance& inst, bool nonnegative_bid_prices) {
    MasterProblem m(inst, std::nullopt, {});
    m.affine_ = true;
    m.nonneg_ = nonnegative_bid_prices;
    m.box_ = 0.0;
    m.rebuild();
    return m;
}

void MasterProblem::declare_variables() {
    lp_ = LinearProgram{};
    const auto& c = inst_->capacities();
    if (affine_) {
        for (int t = 1; t <= tau_; ++t) lp_.add_variable("theta_" + std::to_string(t), -kInf, kInf, t == 1 ? 1.0 : 0.0);
        for (int t = 1; t <= tau_; ++t)
            for (int i = 0; i < legs_; ++i)
                lp_.add_variable("W_" + std::to_string(t) + "_" + std::to_string(i), nonneg_ ? 0.0 : -kInf, kInf,
                                 t == 1 ? c[i] : 0.0);
        return;
    }
    const double lo = box_ > 0.0 ? -box_ : -kInf, hi = box_ > 0.0 ? box_ : kInf;
    for (int t = 1; t <= tau_; ++t) lp_.add_variable("xi_" + std::to_string(t), lo, hi, t == 1 ? 1.0 : 0.0);
    for (int k = 0; k < num_bases(); ++k) {
        const double phi_c = eval_basis(bases_[k], c);
        // Period 1 only visits c, where V_{1,k} duplicates xi_1; pin it to zero.
        for (int t = 1; t <= tau_; ++t)
            lp_.add_variable("V_" + std::to_string(t) + "_" + std::to_string(k), t == 1 ? 0.0 : lo, t == 1 ? 0.0 : hi,
                             t == 1 ? -phi_c : 0.0);
    }
    lp_.objective_offset = baseline_ ? baseline_->eval(1, c) : 0.0;
}

void MasterProblem::rebuild() {
    declare_variables();
    for (const auto& row : order_) lp_.add_row(row.is_mu ? mu_row(row.t, row.mono) : lambda_row(row.t, row.lam));
}

void MasterProblem::append(const StoredRow& row) {
    lp_.add_row(row.is_mu ? mu_row(row.t, row.mono) : lambda_row(row.t, row.lam));
    order_.push_back(row);
}

void MasterProblem::add_basis(RidgeBasis b) {
    if (affine_) throw InvalidArgument("MasterProblem: the affine master has no ridge terms");
    if (static_cast<int>(b.beta.size()) != legs_) throw InvalidArgument("MasterProblem: basis dimension mismatch");
    bases_.push_back(std::move(b));
    rebuild();
}

void MasterProblem::set_bases(std::vector<RidgeBasis> bases) {
    if (affine_) throw InvalidArgument("MasterProblem: the affine master has no ridge terms");
    for (const auto& b : bases)
        if (static_cast<int>(b.beta.size()) != legs_) throw InvalidArgument("MasterProblem: basis dimension mismatch");
    if (bases.size() != bases_.size()) last_ = LpSolution{};
    bases_ = std::move(bases);
    rebuild();
}

LpRow MasterProblem::lambda_row(int t, const LambdaRow& r) const {
    const Instance& inst = *inst_;
    LpRow row;
    row.sense = Sense::GE;
    const auto& p = inst.probs(t);
    double revenue = 0.0;
    for (int j = 0; j < inst.num_products(); ++j)
        if (r.u[j]) revenue += p[j] * inst.fare(j);
    const bool last = t == tau_;

    if (affine_) {
        row.coefs.emplace_back(theta(t), 1.0);
        for (int i = 0; i < legs_; ++i)
            if (r.x[i] != 0) row.coefs.emplace_back(w(t, i), r.x[i]);
        if (!last) {
            row.coefs.emplace_back(theta(t + 1), -1.0);
            for (int i = 0; i < legs_; ++i) {
                double expected = r.x[i];
                for (int j = 0; j < inst.num_products(); ++j)
                    if (r.u[j]) expected -= p[j] * inst.consumption(i, j);
                if (expected != 0.0) row.coefs.emplace_back(w(t + 1, i), -expected);
            }
        }
        row.rhs = revenue;
        return row;
    }

    row.coefs.emplace_back(xi(t), 1.0);
    if (!last) row.coefs.emplace_back(xi(t + 1), -1.0);
    for (int k = 0; k < num_bases(); ++k) {
        const auto& beta = bases_[k].beta;
        const double phi = eval_basis(bases_[k], r.x);
        row.coefs.emplace_back(v(t, k), -phi);
        if (!last) {
            double growth = 1.0;
            for (int j = 0; j < inst.num_products(); ++j) {
                if (!r.u[j] || p[j] == 0.0) continue;
                double ba = 0.0;
                for (int i : inst.legs_of(j)) ba += beta[i];
                growth += p[j] * std::expm1(ba);
            }
            row.coefs.emplace_back(v(t + 1, k), phi * growth);
        }
    }
    double rhs = revenue;
    if (baseline_) {
        rhs -= baseline_->eval(t, r.x);
        if (!last) {
            rhs += baseline_->eval(t + 1, r.x);
            for (int j = 0; j < inst.num_products(); ++j)
                if (r.u[j]) rhs -= p[j] * baseline_->drop(t + 1, inst.column(j));
        }
    }
    row.rhs = rhs;
    return row;
}

LpRow MasterProblem::mu_row(int t, const MuRow& r) const {
    LpRow row;
    row.sense = Sense::GE;
    if (affine_) {
        row.coefs.emplace_back(w(t, r.leg), 1.0);
        row.rhs = 0.0;
        return row;
    }
    StateVector up = r.x;
    ++up[r.leg];
    for (int k = 0; k < num_bases(); ++k)
        row.coefs.emplace_back(v(t, k), eval_basis(bases_[k], r.x) - eval_basis(bases_[k], up));
    row.rhs = baseline_ ? -baseline_->W[t - 1][r.leg] : 0.0;
    return row;
}

void MasterProblem::sync(const RowSets& rows) {
    if (rows.horizon() != tau_) throw InvalidArgument("MasterProblem: row sets have the wrong horizon");
    for (int t = 1; t <= tau_; ++t) {
        const auto& lam = rows.lambda(t);
        const auto& mono = rows.mu(t);
        if (lam.size() < synced_lambda_[t - 1] || mono.size() < synced_mu_[t - 1])
            throw InvalidArgument("MasterProblem: row sets may only grow");
        for (std::size_t r = synced_lambda_[t - 1]; r < lam.size(); ++r) append({false, t, r, lam[r], MuRow{}});
        for (std::size_t r = synced_mu_[t - 1]; r < mono.size(); ++r) append({true, t, r, LambdaRow{}, mono[r]});
        synced_lambda_[t - 1] = lam.size();
        synced_mu_[t - 1] = mono.size();
    }
}

MasterSolution MasterProblem::solve(const RowSets& rows) {
    sync(rows);
    LpSolution lp_sol = last_.optimal() ? solve_warm(lp_, last_, tol_) : nrm::solve(lp_, tol_);
    if (!lp_sol.optimal() && lp_sol.warm_started) lp_sol = nrm::solve(lp_, tol_);
    last_ = lp_sol;

    MasterSolution sol;
    sol.status = lp_sol.status;
    sol.iterations = lp_sol.iterations;
    if (!lp_sol.optimal()) return sol;
    sol.Z_B = lp_sol.objective;
    sol.dual_degenerate = lp_sol.dual_degenerate;

    Approximation& a = sol.approx;
    a.xi.assign(static_cast<std::size_t>(tau_), 0.0);
    a.V.assign(static_cast<std::size_t>(tau_), std::vector<double>(static_cast<std::size_t>(num_bases()), 0.0));
    if (affine_) {
        AffineBaseline ab;
        ab.theta.resize(static_cast<std::size_t>(tau_));
        ab.W.assign(static_cast<std::size_t>(tau_), std::vector<double>(static_cast<std::size_t>(legs_)));
        for (int t = 1; t <= tau_; ++t) {
            ab.theta[t - 1] = lp_sol.primal[theta(t)];
            for (int i = 0; i < legs_; ++i) ab.W[t - 1][i] = lp_sol.primal[w(t, i)];
        }
        a.baseline = std::move(ab);
    } else {
        a.baseline = baseline_;
        a.bases = bases_;
        for (int t = 1; t <= tau_; ++t) {
            a.xi[t - 1] = lp_sol.primal[xi(t)];
            for (int k = 0; k < num_bases(); ++k) a.V[t - 1][k] = lp_sol.primal[v(t, k)];
        }
        if (box_ > 0.0)
            for (double value : lp_sol.primal)
                if (std::abs(value) >= box_ * (1.0 - 1e-9)) sol.bound_active = true;
    }

    sol.duals.lambda.resize(static_cast<std::size_t>(tau_));
    sol.duals.mu.resize(static_cast<std::size_t>(tau_));
    for (int t = 1; t <= tau_; ++t) {
        sol.duals.lambda[t - 1].assign(rows.lambda(t).size(), 0.0);
        sol.duals.mu[t - 1].assign(rows.mu(t).size(), 0.0);
    }
    for (std::size_t r = 0; r < order_.size(); ++r) {
        const auto& s = order_[r];
        auto& target = s.is_mu ? sol.duals.mu[s.t - 1] : sol.duals.lambda[s.t - 1];
        target[s.index] = lp_sol.duals[r];
    }
    return sol;
}

LinearProgram build_master(const Instance& inst, const std::optional<AffineBaseline>& baseline,
                           const std::vector<RidgeBasis>& bases, const RowSets& rows) {
    MasterProblem m(inst, baseline, bases);
    m.sync(rows);
    return m.lp();
}

MasterSolution solve_master(const Instance& inst, const std::optional<AffineBaseline>& baseline,
                            const std::vector<RidgeBasis>& bases, const RowSets& rows) {
    MasterProblem m(inst, baseline, bases);
    return m.solve(rows);
}

LinearProgram build_aa_master(const Instance& inst, const RowSets& rows, bool nonnegative_bid_prices) {
    MasterProblem m = MasterProblem::affine(inst, nonnegative_bid_prices);
    m.sync(rows);
    return m.lp();
}

}  // namespace nrm
