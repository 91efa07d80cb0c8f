#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "nrm/lp.hpp"
#include "nrm/model.hpp"
#include "nrm/vfa.hpp"

namespace nrm {

struct LambdaRow {
    StateVector x;
    ActionVector u;
};

/// Monotonicity row: value must not drop when leg `leg` gains a unit at x.
struct MuRow {
    int leg;
    StateVector x;
};

/// Generated constraint index sets, one list per period, without duplicates.
class RowSets {
public:
    explicit RowSets(int horizon = 0);

    /// {(c, 0)} in the first period, {(c, 0), (0, 0)} afterwards.
    static RowSets initial(const Instance& inst);

    int horizon() const { return static_cast<int>(lambda_.size()); }

    /// Adds a state-action row; returns false for duplicates. Throws
    /// InvalidArgument for infeasible pairs.
    bool add_lambda(const Instance& inst, int t, const StateVector& x, const ActionVector& u);
    /// Adds a monotonicity row (requires x_leg < c_leg); false for duplicates.
    bool add_mu(const Instance& inst, int t, int leg, const StateVector& x);

    bool has_lambda(int t, const StateVector& x, const ActionVector& u) const;
    bool has_mu(int t, int leg, const StateVector& x) const;

    const std::vector<LambdaRow>& lambda(int t) const { return lambda_[t - 1]; }
    const std::vector<MuRow>& mu(int t) const { return mu_[t - 1]; }

    std::size_t total_lambda() const;
    std::size_t total_mu() const;
    std::size_t total() const { return total_lambda() + total_mu(); }

private:
    std::vector<std::vector<LambdaRow>> lambda_;
    std::vector<std::vector<MuRow>> mu_;
    std::vector<std::set<std::pair<StateVector, ActionVector>>> seen_lambda_;
    std::vector<std::set<std::pair<int, StateVector>>> seen_mu_;
};

/// Row duals aligned with RowSets: lambda[t-1][r] belongs to rows.lambda(t)[r].
struct DualSolution {
    std::vector<std::vector<double>> lambda;
    std::vector<std::vector<double>> mu;

    /// True when the shapes match `rows`.
    bool matches(const RowSets& rows) const;
};

struct MasterSolution {
    LpStatus status = LpStatus::Infeasible;
    Approximation approx;
    double Z_B = 0.0;
    DualSolution duals;
    bool dual_degenerate = false;
    long iterations = 0;
    /// A safeguard bound on xi or V is tight; the restricted master needs
    /// more rows before the solution means anything for the unbounded LP.
    bool bound_active = false;

    bool optimal() const { return status == LpStatus::Optimal; }
};

/// Restricted master LP with incremental rows and warm starts.
///
/// The ridge form has variables xi_t and V_{t,k} with the baseline and the
/// directions beta_k held fixed. The affine form has variables theta_t and
/// W_{t,i} and no ridge terms.
/// Holds a pointer to the instance, which must outlive the master.
class MasterProblem {
public:
    MasterProblem(const Instance& inst, std::optional<AffineBaseline> baseline, std::vector<RidgeBasis> bases);
    static MasterProblem affine(const Instance& inst, bool nonnegative_bid_prices = true);

    bool is_affine() const { return affine_; }
    int num_bases() const { return static_cast<int>(bases_.size()); }
    const std::vector<RidgeBasis>& bases() const { return bases_; }
    const std::optional<AffineBaseline>& baseline() const { return baseline_; }

    /// Appends a direction; rows already present get the new coefficients.
    void add_basis(RidgeBasis b);
    /// Replaces every direction (same count keeps the warm start usable).
    void set_bases(std::vector<RidgeBasis> bases);

    /// Appends the rows of `rows` not yet in the LP. Row sets may only grow.
    void sync(const RowSets& rows);
    /// Syncs and solves, warm-starting from the previous basis.
    MasterSolution solve(const RowSets& rows);

    const LinearProgram& lp() const { return lp_; }
    /// Bound on |xi_t| and |V_{t,k}|: kSafeguardScale times the expected
    /// revenue of accepting every request. Zero for the affine master.
    double safeguard_bound() const { return box_; }
    static constexpr double kSafeguardScale = 1e3;
    const LpTolerances& tolerances() const { return tol_; }
    LpTolerances& tolerances() { return tol_; }

private:
    /// Copy of a row already in the LP, so the LP can be rebuilt when the
    /// directions change. `index` is the position inside its RowSets list.
    struct StoredRow {
        bool is_mu;
        int t;
        std::size_t index;
        LambdaRow lam;
        MuRow mono;
    };

    void rebuild();
    void declare_variables();
    void append(const StoredRow& row);
    LpRow lambda_row(int t, const LambdaRow& r) const;
    LpRow mu_row(int t, const MuRow& r) const;
    int xi(int t) const { return t - 1; }
    int v(int t, int k) const { return tau_ + k * tau_ + (t - 1); }
    int theta(int t) const { return t - 1; }
    int w(int t, int i) const { return tau_ + (t - 1) * legs_ + i; }

    const Instance* inst_;
    bool affine_ = false;
    bool nonneg_ = true;
    int tau_;
    int legs_;
    std::optional<AffineBaseline> baseline_;
    std::vector<RidgeBasis> bases_;
    LinearProgram lp_;
    LpTolerances tol_;
    std::vector<StoredRow> order_;  // order_[r] is LP row r
    std::vector<std::size_t> synced_lambda_;
    std::vector<std::size_t> synced_mu_;
    LpSolution last_;
    double box_ = 0.0;
};

LinearProgram build_master(const Instance& inst, const std::optional<AffineBaseline>& baseline,
                           const std::vector<RidgeBasis>& bases, const RowSets& rows);
MasterSolution solve_master(const Instance& inst, const std::optional<AffineBaseline>& baseline,
                            const std::vector<RidgeBasis>& bases, const RowSets& rows);
LinearProgram build_aa_master(const Instance& inst, const RowSets& rows, bool nonnegative_bid_prices = true);

}  // namespace nrm
