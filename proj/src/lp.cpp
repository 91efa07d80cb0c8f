// Revised simplex applied to the dual of the stored LP.
//
// Every row and finite bound is rewritten as g'x >= h. The dual
//   max h'y  s.t.  G'y = c,  y >= 0
// has one equality per primal variable, so the basis has the size of the
// (small) variable set no matter how many rows row generation appends.
// Appended rows become new dual columns, which leaves the previous basis
// feasible; that is the warm start. The primal solution is recovered as the
// negated simplex multipliers.

#include "nrm/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>

#include "nrm/errors.hpp"
#include "nrm/random.hpp"

namespace nrm {

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

int LinearProgram::add_variable(std::string name, double lower, double upper, double objective) {
    if (by_name_.count(name)) throw InvalidArgument("LinearProgram: duplicate variable name " + name);
    if (lower > upper) throw InvalidArgument("LinearProgram: empty bounds for " + name);
    const int k = num_variables();
    by_name_.emplace(name, k);
    vars_.push_back({std::move(name), lower, upper, objective});
    return k;
}

int LinearProgram::add_row(LpRow row) {
    for (const auto& [k, v] : row.coefs) {
        if (k < 0 || k >= num_variables())
            throw InvalidArgument("LinearProgram: row " + row.name + " references an unknown variable");
        if (!std::isfinite(v)) throw InvalidArgument("LinearProgram: row " + row.name + " has a non-finite coefficient");
    }
    rows_.push_back(std::move(row));
    return num_rows() - 1;
}

int LinearProgram::add_row(std::string name, Sense sense, double rhs, std::vector<std::pair<int, double>> coefs) {
    return add_row(LpRow{std::move(name), sense, rhs, std::move(coefs)});
}

int LinearProgram::find_variable(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
}

namespace {

enum : std::uint8_t { kRow = 0, kLower = 1, kUpper = 2, kArtificial = 3 };

struct Column {
    BasisKey key;
    std::vector<std::pair<int, double>> entries;
    double h = 0.0;  // dual objective coefficient
};

struct KeyHash {
    std::size_t operator()(const BasisKey& k) const {
        return (static_cast<std::size_t>(k.index) << 4) ^ (static_cast<std::size_t>(k.kind) << 1) ^
               static_cast<std::size_t>(k.sign > 0);
    }
};

std::vector<Column> dual_columns(const LinearProgram& lp) {
    std::vector<Column> cols;
    cols.reserve(static_cast<std::size_t>(lp.num_rows()) + 2 * static_cast<std::size_t>(lp.num_variables()));
    for (int r = 0; r < lp.num_rows(); ++r) {
        const auto& row = lp.row(r);
        auto push = [&](std::int8_t sign) {
            Column c{{kRow, sign, r}, row.coefs, sign * row.rhs};
            if (sign < 0)
                for (auto& e : c.entries) e.second = -e.second;
            cols.push_back(std::move(c));
        };
        if (row.sense != Sense::LE) push(+1);
        if (row.sense != Sense::GE) push(-1);
    }
    for (int k = 0; k < lp.num_variables(); ++k) {
        const auto& v = lp.variable(k);
        if (std::isfinite(v.lower)) cols.push_back({{kLower, +1, k}, {{k, 1.0}}, v.lower});
        if (std::isfinite(v.upper)) cols.push_back({{kUpper, -1, k}, {{k, -1.0}}, -v.upper});
    }
    return cols;
}

class DualSimplex {
public:
    DualSimplex(const LinearProgram& lp, const LpTolerances& tol, bool zero_cost)
        : lp_(lp), tol_(tol), n_(lp.num_variables()), cols_(dual_columns(lp)) {
        c_.resize(n_);
        for (int k = 0; k < n_; ++k) c_[k] = zero_cost ? 0.0 : lp.variable(k).objective;
        true_c_ = c_;
        for (int k = 0; k < n_; ++k) {
            const std::int8_t s = c_[k] < 0 ? -1 : 1;
            cols_.push_back({{kArtificial, s, k}, {{k, static_cast<double>(s)}}, 0.0});
        }
        first_artificial_ = static_cast<int>(cols_.size()) - n_;
        in_basis_.assign(cols_.size(), -1);
    }

    LpSolution run(const LpSolution* hint) {
        LpSolution sol;
        bool warm = hint && try_warm(*hint);
        if (!warm) cold_basis();
        sol.warm_started = warm;

        if (has_basic_artificial_value()) {
            phase_ = 1;
            const LpStatus s1 = iterate();
            if (s1 == LpStatus::IterationLimit) return finish(sol, s1);
            refactor();
            if (phase1_objective() > tol_.feasibility * (1.0 + c_norm())) return finish(sol, LpStatus::Infeasible);
            drive_out_artificials();
        }
        phase_ = 2;
        LpStatus s2 = iterate();
        if (perturbed_) {
            c_ = true_c_;
            perturbed_ = false;
            if (s2 != LpStatus::Optimal) return finish(sol, s2);
            if (!refactor() || !restore_feasibility()) {
                sol.numerically_unstable = true;
                return finish(sol, LpStatus::IterationLimit);
            }
            s2 = iterate();
        }
        // Updated inverses drift; confirm optimality on a fresh factorization.
        for (int pass = 0; pass < 5 && s2 == LpStatus::Optimal; ++pass) {
            if (!refactor()) {
                s2 = LpStatus::IterationLimit;
                break;
            }
            if (!values_feasible()) {
                sol.numerically_unstable = true;
                break;
            }
            if (!has_negative_reduced_cost()) return finish(sol, s2);
            s2 = iterate();
        }
        if (s2 == LpStatus::Optimal && !has_negative_reduced_cost() && values_feasible()) return finish(sol, s2);
        if (s2 == LpStatus::Optimal) s2 = LpStatus::IterationLimit;
        sol.numerically_unstable = true;
        return finish(sol, s2);
    }

private:
    bool is_artificial(int q) const { return q >= first_artificial_; }

    double cost(int q) const {
        if (phase_ == 1) return is_artificial(q) ? 1.0 : 0.0;
        return is_artificial(q) ? 0.0 : -cols_[q].h;
    }

    double c_norm() const {
        double m = 0.0;
        for (double v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    void cold_basis() {
        // A rejected warm start may have left marks and flipped artificials.
        std::fill(in_basis_.begin(), in_basis_.end(), -1);
        for (int k = 0; k < n_; ++k) {
            auto& col = cols_[first_artificial_ + k];
            const std::int8_t s = c_[k] < 0 ? -1 : 1;
            col.key.sign = s;
            col.entries = {{k, static_cast<double>(s)}};
        }
        basis_.resize(n_);
        for (int k = 0; k < n_; ++k) {
            basis_[k] = first_artificial_ + k;
            in_basis_[basis_[k]] = k;
        }
        refactor();
    }

    /// Rebuilds the basis from keys; fills new variables with artificials.
    bool try_warm(const LpSolution& hint) {
        if (hint.basis.empty()) return false;
        std::unordered_map<BasisKey, int, KeyHash> where;
        for (int q = 0; q < first_artificial_; ++q) where.emplace(cols_[q].key, q);
        std::vector<int> chosen;
        for (const auto& key : hint.basis) {
            if (key.kind == kArtificial) {
                if (key.index >= n_) return false;
                chosen.push_back(first_artificial_ + key.index);
                continue;
            }
            auto it = where.find(key);
            if (it == where.end()) return false;
            chosen.push_back(it->second);
        }
        const int old_n = static_cast<int>(chosen.size());
        if (old_n > n_) return false;
        for (int k = old_n; k < n_; ++k) chosen.push_back(first_artificial_ + k);
        basis_ = chosen;
        std::fill(in_basis_.begin(), in_basis_.end(), -1);
        for (int r = 0; r < n_; ++r) {
            if (in_basis_[basis_[r]] >= 0) return false;
            in_basis_[basis_[r]] = r;
        }
        if (!refactor()) return false;
        // An artificial may enter with either sign; pick the one that makes it nonnegative.
        for (int r = 0; r < n_; ++r) {
            const int q = basis_[r];
            if (is_artificial(q) && y_(r) < 0) {
                cols_[q].key.sign = static_cast<std::int8_t>(-cols_[q].key.sign);
                for (auto& e : cols_[q].entries) e.second = -e.second;
            }
        }
        if (!refactor()) return false;
        for (int r = 0; r < n_; ++r)
            if (y_(r) < -tol_.feasibility) return false;
        return true;
    }

    bool refactor() {
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n_, n_);
        for (int r = 0; r < n_; ++r)
            for (const auto& [k, v] : cols_[basis_[r]].entries) B(k, r) = v;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        if (n_ > 0 && !(lu.rcond() > 1e-14)) return false;
        binv_ = lu.inverse();
        if (!binv_.allFinite()) return false;
        y_ = binv_ * Eigen::Map<const Eigen::VectorXd>(c_.data(), n_);
        since_refactor_ = 0;
        return true;
    }

    bool values_feasible() const {
        for (int r = 0; r < n_; ++r)
            if (y_(r) < -10.0 * tol_.feasibility) return false;
        return true;
    }

    bool has_negative_reduced_cost() const {
        const Eigen::VectorXd w = multipliers();
        for (int q = 0; q < first_artificial_; ++q)
            if (in_basis_[q] < 0 && reduced_cost(q, w) < -tol_.optimality) return true;
        return false;
    }

    bool has_basic_artificial_value() const {
        for (int r = 0; r < n_; ++r)
            if (is_artificial(basis_[r]) && y_(r) > 0.0) return true;
        return false;
    }

    double phase1_objective() const {
        double s = 0.0;
        for (int r = 0; r < n_; ++r)
            if (is_artificial(basis_[r])) s += std::max(0.0, y_(r));
        return s;
    }

    Eigen::VectorXd multipliers() const {
        Eigen::VectorXd cb(n_);
        for (int r = 0; r < n_; ++r) cb(r) = cost(basis_[r]);
        return binv_.transpose() * cb;
    }

    double reduced_cost(int q, const Eigen::VectorXd& w) const {
        double d = cost(q);
        for (const auto& [k, v] : cols_[q].entries) d -= w(k) * v;
        return d;
    }

    Eigen::VectorXd direction(int q) const {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n_);
        for (const auto& [k, v] : cols_[q].entries) a += binv_.col(k) * v;
        return a;
    }

    void pivot(int r, int q, const Eigen::VectorXd& alpha) {
        const double piv = alpha(r);
        binv_.row(r) /= piv;
        y_(r) /= piv;
        for (int i = 0; i < n_; ++i) {
            if (i == r || alpha(i) == 0.0) continue;
            binv_.row(i) -= alpha(i) * binv_.row(r);
            y_(i) -= alpha(i) * y_(r);
        }
        // The relaxed ratio test may leave tiny negative values behind.
        for (int i = 0; i < n_; ++i)
            if (y_(i) < 0.0 && y_(i) > -tol_.feasibility) y_(i) = 0.0;
        in_basis_[basis_[r]] = -1;
        basis_[r] = q;
        in_basis_[q] = r;
        ++iterations_;
        if (++since_refactor_ >= tol_.refactor_every) refactor();
    }

    int stuck_artificial(const Eigen::VectorXd& alpha) const {
        // Zero-valued artificials must not grow once phase 1 is over.
        int leave = -1;
        if (phase_ != 2) return leave;
        for (int r = 0; r < n_; ++r)
            if (is_artificial(basis_[r]) && std::abs(alpha(r)) > 1e-7 &&
                (leave < 0 || basis_[r] < basis_[leave]))
                leave = r;
        return leave;
    }

    /// Textbook minimum ratio with ties broken by the smallest column index.
    int bland_leaving(const Eigen::VectorXd& alpha) const {
        int leave = stuck_artificial(alpha);
        if (leave >= 0) return leave;
        // Tiny pivots would wreck the factorization; skip them relative to the column.
        double a_max = 0.0;
        for (int r = 0; r < n_; ++r) a_max = std::max(a_max, alpha(r));
        const double threshold = std::max(tol_.pivot, 1e-6 * a_max);
        double ratio = kInf;
        for (int r = 0; r < n_; ++r) {
            const double a = alpha(r);
            if (a <= threshold) continue;
            const double q = std::max(0.0, y_(r)) / a;
            if (leave < 0 || q < ratio - 1e-12 || (q <= ratio + 1e-12 && basis_[r] < basis_[leave])) {
                ratio = std::min(ratio, q);
                leave = r;
            }
        }
        return leave;
    }

    /// Two-pass ratio test: the first pass finds the largest step allowed
    /// with values relaxed by the feasibility tolerance, the second picks
    /// the largest pivot among rows blocking within that step.
    int choose_leaving(const Eigen::VectorXd& alpha) const {
        int leave = stuck_artificial(alpha);
        if (leave >= 0) return leave;
        double bound = kInf;
        for (int r = 0; r < n_; ++r) {
            const double a = alpha(r);
            if (a <= tol_.pivot) continue;
            bound = std::min(bound, (std::max(0.0, y_(r)) + tol_.feasibility) / a);
        }
        if (!std::isfinite(bound)) return -1;
        for (int r = 0; r < n_; ++r) {
            const double a = alpha(r);
            if (a <= tol_.pivot || std::max(0.0, y_(r)) / a > bound) continue;
            if (leave < 0 || a > alpha(leave)) leave = r;
        }
        return leave;
    }

    double objective_value() const {
        double v = 0.0;
        for (int r = 0; r < n_; ++r) v += cost(basis_[r]) * y_(r);
        return v;
    }

    LpStatus iterate() {
        // Bland's rule takes over once the objective stops moving, and stays.
        long stalled = 0;
        double best_obj = objective_value();
        bool bland = false;
        while (true) {
            if (iterations_ >= tol_.max_iterations) return LpStatus::IterationLimit;
            bland = bland || stalled >= tol_.bland_after;
            const Eigen::VectorXd w = multipliers();
            int enter = -1;
            double best = -tol_.optimality;
            const int limit = phase_ == 1 ? static_cast<int>(cols_.size()) : first_artificial_;
            for (int q = 0; q < limit; ++q) {
                if (in_basis_[q] >= 0) continue;
                const double d = reduced_cost(q, w);
                if (d < best) {
                    enter = q;
                    if (bland) break;
                    best = d;
                }
            }
            if (enter < 0) return LpStatus::Optimal;

            const Eigen::VectorXd alpha = direction(enter);
            const int leave = bland ? bland_leaving(alpha) : choose_leaving(alpha);
            if (leave < 0) return LpStatus::Unbounded;
            pivot(leave, enter, alpha);
            if (phase_ == 2 && stalled >= kPerturbAfter && !perturbed_ && !perturbation_used_) {
                perturb();
                best_obj = objective_value();
                stalled = 0;
                continue;
            }
            const double obj = objective_value();
            if (obj < best_obj - 1e-9 * (1.0 + std::abs(best_obj))) {
                best_obj = obj;
                stalled = 0;
            } else {
                ++stalled;
            }
        }
    }

    /// Shifts the right-hand side by B e for a small random e > 0, which
    /// adds e to the basic values: the basis stays feasible while
    /// degenerate ties are broken.
    void perturb() {
        perturbation_used_ = true;
        perturbed_ = true;
        for (int r = 0; r < n_; ++r) {
            const std::uint64_t h = splitmix64(static_cast<std::uint64_t>(basis_[r]) * 0x9e37ULL + 17);
            const double e = tol_.perturbation * (1.0 + std::abs(y_(r))) *
                             (0.5 + 0.5 * static_cast<double>(h >> 11) * 0x1.0p-53);
            for (const auto& [k, v] : cols_[basis_[r]].entries) c_[k] += e * v;
            y_(r) += e;
        }
    }

    /// Dual simplex pivots that remove negative values left behind when
    /// the objective shift is undone; reduced costs stay nonnegative.
    bool restore_feasibility() {
        const long limit = iterations_ + 10L * n_ + 100;
        while (iterations_ < limit) {
            int r = -1;
            for (int i = 0; i < n_; ++i)
                if (y_(i) < -tol_.feasibility && (r < 0 || y_(i) < y_(r))) r = i;
            if (r < 0) {
                for (int i = 0; i < n_; ++i) y_(i) = std::max(0.0, y_(i));
                return true;
            }
            const Eigen::VectorXd w = multipliers();
            const Eigen::VectorXd row = binv_.row(r).transpose();
            int enter = -1;
            double best_ratio = kInf, best_a = 0.0;
            for (int q = 0; q < first_artificial_; ++q) {
                if (in_basis_[q] >= 0) continue;
                double a = 0.0;
                for (const auto& [k, v] : cols_[q].entries) a += row(k) * v;
                if (a >= -tol_.pivot) continue;
                const double ratio = std::max(0.0, reduced_cost(q, w)) / -a;
                if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && -a > best_a)) {
                    best_ratio = ratio;
                    best_a = -a;
                    enter = q;
                }
            }
            if (enter < 0) return false;
            pivot(r, enter, direction(enter));
        }
        return false;
    }

    void drive_out_artificials() {
        for (int r = 0; r < n_; ++r) {
            if (!is_artificial(basis_[r])) continue;
            for (int q = 0; q < first_artificial_; ++q) {
                if (in_basis_[q] >= 0) continue;
                const Eigen::VectorXd alpha = direction(q);
                if (std::abs(alpha(r)) > 1e-7) {
                    pivot(r, q, alpha);
                    break;
                }
            }
        }
        refactor();
    }

    LpSolution finish(LpSolution& sol, LpStatus status) {
        sol.iterations = iterations_;
        if (status == LpStatus::Unbounded) {
            // The dual is unbounded, so the primal has no feasible point.
            sol.status = LpStatus::Infeasible;
            return sol;
        }
        if (status != LpStatus::Optimal) {
            sol.status = status;
            return sol;
        }
        refactor();
        const Eigen::VectorXd w = multipliers();
        sol.status = LpStatus::Optimal;
        sol.primal.resize(n_);
        for (int k = 0; k < n_; ++k) sol.primal[k] = -w(k);
        sol.objective = lp_.objective_offset;
        for (int k = 0; k < n_; ++k) sol.objective += lp_.variable(k).objective * sol.primal[k];
        sol.duals.assign(static_cast<std::size_t>(lp_.num_rows()), 0.0);
        for (int r = 0; r < n_; ++r) {
            const auto& key = cols_[basis_[r]].key;
            if (key.kind == kRow) sol.duals[key.index] += key.sign * std::max(0.0, y_(r));
        }
        for (int q = 0; q < first_artificial_; ++q) {
            if (in_basis_[q] >= 0) continue;
            if (std::abs(reduced_cost(q, w)) <= 1e-9 * (1.0 + std::abs(cols_[q].h))) {
                sol.dual_degenerate = true;
                break;
            }
        }
        sol.basis.reserve(n_);
        for (int r = 0; r < n_; ++r) sol.basis.push_back(cols_[basis_[r]].key);
        return sol;
    }

    const LinearProgram& lp_;
    LpTolerances tol_;
    int n_;
    std::vector<Column> cols_;
    std::vector<double> c_;
    std::vector<double> true_c_;
    bool perturbed_ = false;
    bool perturbation_used_ = false;
    static constexpr long kPerturbAfter = 20;
    int first_artificial_ = 0;
    std::vector<int> basis_;
    std::vector<int> in_basis_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd y_;
    int phase_ = 1;
    long iterations_ = 0;
    int since_refactor_ = 0;
};

LpSolution solve_impl(const LinearProgram& lp, const LpTolerances& tol, const LpSolution* hint) {
    DualSimplex ds(lp, tol, false);
    LpSolution sol = ds.run(hint);
    if (sol.numerically_unstable) {
        // Retry from scratch with frequent refactorization and a stricter pivot threshold.
        LpTolerances careful = tol;
        careful.refactor_every = std::max(1, std::min(tol.refactor_every, 20));
        careful.pivot = std::max(tol.pivot, 1e-7);
        DualSimplex retry(lp, careful, false);
        LpSolution again = retry.run(nullptr);
        again.iterations += sol.iterations;
        sol = std::move(again);
    }
    if (sol.status == LpStatus::Infeasible && sol.primal.empty()) {
        // Either the dual has no feasible point (primal unbounded or
        // infeasible) or the dual is unbounded (primal infeasible). A zero
        // objective separates the first case.
        DualSimplex probe(lp, tol, true);
        const LpSolution zero = probe.run(nullptr);
        const bool primal_feasible = zero.status == LpStatus::Optimal;
        LpSolution out;
        out.iterations = sol.iterations + zero.iterations;
        out.status = primal_feasible ? LpStatus::Unbounded : LpStatus::Infeasible;
        return out;
    }
    return sol;
}

}  // namespace

LpSolution solve(const LinearProgram& lp, const LpTolerances& tol) { return solve_impl(lp, tol, nullptr); }

LpSolution solve_warm(const LinearProgram& lp, const LpSolution& hint, const LpTolerances& tol) {
    return solve_impl(lp, tol, hint.optimal() ? &hint : nullptr);
}

LpSolution add_rows_and_resolve(LinearProgram& lp, const std::vector<LpRow>& new_rows, const LpSolution& prior,
                                const LpTolerances& tol) {
    for (const auto& r : new_rows) lp.add_row(r);
    return solve_warm(lp, prior, tol);
}

void write_mps(const LinearProgram& lp, std::ostream& out, const std::string& name) {
    std::vector<std::string> row_names(static_cast<std::size_t>(lp.num_rows()));
    for (int r = 0; r < lp.num_rows(); ++r) row_names[r] = "R" + std::to_string(r);
    std::vector<std::vector<std::pair<int, double>>> by_var(static_cast<std::size_t>(lp.num_variables()));
    for (int r = 0; r < lp.num_rows(); ++r)
        for (const auto& [k, v] : lp.row(r).coefs) by_var[k].emplace_back(r, v);
    auto var_name = [&](int k) { return "C" + std::to_string(k); };

    out << std::setprecision(17);
    out << "NAME " << name << "\nROWS\n N OBJ\n";
    for (int r = 0; r < lp.num_rows(); ++r) {
        const char* s = lp.row(r).sense == Sense::GE ? "G" : lp.row(r).sense == Sense::LE ? "L" : "E";
        out << " " << s << " " << row_names[r] << "\n";
    }
    out << "COLUMNS\n";
    for (int k = 0; k < lp.num_variables(); ++k) {
        if (lp.variable(k).objective != 0.0) out << " " << var_name(k) << " OBJ " << lp.variable(k).objective << "\n";
        for (const auto& [r, v] : by_var[k]) out << " " << var_name(k) << " " << row_names[r] << " " << v << "\n";
    }
    out << "RHS\n";
    for (int r = 0; r < lp.num_rows(); ++r)
        if (lp.row(r).rhs != 0.0) out << " RHS " << row_names[r] << " " << lp.row(r).rhs << "\n";
    if (lp.objective_offset != 0.0) out << " RHS OBJ " << -lp.objective_offset << "\n";
    out << "BOUNDS\n";
    for (int k = 0; k < lp.num_variables(); ++k) {
        const auto& v = lp.variable(k);
        const bool lo = std::isfinite(v.lower), up = std::isfinite(v.upper);
        if (!lo && !up) {
            out << " FR BND " << var_name(k) << "\n";
        } else if (lo && up && v.lower == v.upper) {
            out << " FX BND " << var_name(k) << " " << v.lower << "\n";
        } else {
            if (lo) out << " LO BND " << var_name(k) << " " << v.lower << "\n";
            else out << " MI BND " << var_name(k) << "\n";
            if (up) out << " UP BND " << var_name(k) << " " << v.upper << "\n";
        }
    }
    out << "ENDATA\n";
}

}  // namespace nrm
