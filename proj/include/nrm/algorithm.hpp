#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nrm/lp.hpp"
#include "nrm/master.hpp"
#include "nrm/model.hpp"
#include "nrm/random.hpp"
#include "nrm/simulate.hpp"
#include "nrm/subproblems.hpp"
#include "nrm/timer.hpp"
#include "nrm/vfa.hpp"

namespace nrm {

enum class Mode { Standalone, Addon };
enum class SubproblemMode { Auto, Exact, Local };

const char* to_string(Mode m);
const char* to_string(SubproblemMode m);

struct AlgoConfig {
    double omega_gap = 0.001;
    double omega_policy = 0.001;
    double omega_pgap = 0.01;
    double subproblem_time_limit_s = 5.0;
    double basis_time_limit_s = 30.0;
    int max_K = 12;
    double max_wall_s = kInf;
    int row_starts = 8;
    int basis_starts = 20;
    std::uint64_t seed = 1;
    Mode mode = Mode::Standalone;
    bool monotonicity_rows_at_K1 = true;
    SubproblemMode subproblems = SubproblemMode::Auto;
    /// Auto mode enumerates exactly up to this many lattice states.
    std::uint64_t exact_state_limit = 100'000;
    int threads = 1;
    bool aa_nonnegative = true;
    long sim_n_max = 200'000;
    int max_rowgen_rounds = 5000;
    /// Evaluate the dual flow-balance residual after every master solve.
    bool check_flow_balance = true;
    /// Progress lines on stderr.
    bool verbose = false;

    /// Throws InvalidArgument when a field is out of range.
    void validate() const;
    /// Exact enumeration for this instance?
    bool exact_for(const Instance& inst) const;
};

struct TraceRecord {
    int K = 0;
    double Z_B = 0.0;
    double Zhat = 0.0;
    /// Valid upper bound from exact separation; NaN when not computed.
    double Zbar = std::numeric_limits<double>::quiet_NaN();
    double Rbar = 0.0;
    double Se = 0.0;
    long N = 0;
    long rows_total = 0;
    double cpu_s = 0.0;
    /// max |ell_t| over in-model directions after the last master solve.
    double flow_residual = 0.0;
};

/// Effect of one basis addition with the row sets held fixed.
struct BasisAddition {
    int K_before = 0;
    double imbalance = 0.0;
    double Z_B_before = 0.0;
    double Z_B_after = 0.0;
    bool dual_degenerate = false;
};

struct RunTrace {
    std::string algo;
    Mode mode = Mode::Standalone;
    std::vector<TraceRecord> records;
    std::vector<BasisAddition> additions;
    Approximation final_approx;
    Approximation best_approx;
    double best_Rbar = -kInf;
    int best_K = 0;
    /// converged reason: ck-met, max-K, imbalance-exhausted, wall-clock, master-failed
    std::string status;
    bool truncated = false;
    double max_flow_residual = 0.0;
    /// Affine baseline figures in add-on mode.
    std::optional<TraceRecord> baseline_record;

    /// Smallest Zhat over the records.
    double best_upper() const;
};

struct RowGenResult {
    MasterSolution sol;
    /// sum_t max(0, -best slack) from the last separation round.
    double pi_hat_sum = 0.0;
    std::vector<double> pi_hat;
    /// Separation was exact, so Z_B + pi_hat_sum bounds the program value.
    bool exact = false;
    int rounds = 0;
    bool truncated = false;
    double max_flow_residual = 0.0;

    double Zhat() const { return sol.Z_B + pi_hat_sum; }
};

/// Row generation on an existing master. Row sets grow in place; rows found
/// in the final round (after the stopping test passed) are not added, so
/// the returned duals match `rows`.
RowGenResult row_generation(const Instance& inst, MasterProblem& master, RowSets& rows, const AlgoConfig& cfg,
                            bool monotonicity_rows, Rng& rng, const Deadline& deadline = {});

/// Convenience form with a fresh master.
RowGenResult row_generation(const Instance& inst, const std::optional<AffineBaseline>& baseline,
                            const std::vector<RidgeBasis>& bases, RowSets& rows, const AlgoConfig& cfg);

struct AaResult {
    AffineBaseline baseline;
    RowSets rows;
    RowGenResult rowgen;
    SimResult sim;
    TraceRecord record;
    double upper() const { return rowgen.Zhat(); }
};

/// Fits the affine approximation by row generation and simulates its policy.
AaResult solve_aa(const Instance& inst, const AlgoConfig& cfg, const Deadline& deadline = {});

struct BoundEstimate {
    double Zhat = 0.0;
    std::optional<double> Zbar;
    std::string reason;  // why Zbar is absent
};

/// Zhat from the configured separation; Zbar from exact separation when the
/// state space is small enough.
BoundEstimate estimate_bounds(const Instance& inst, const MasterSolution& sol, const AlgoConfig& cfg,
                              bool want_exact = true);

/// Initial direction beta_i = 1 / (c_i I).
RidgeBasis initial_basis(const Instance& inst);

/// Progress callback, invoked after every trace record.
using TraceObserver = std::function<void(const TraceRecord&)>;

RunTrace h2pialg(const Instance& inst, const AlgoConfig& cfg, const TraceObserver& observer = {});

/// Alternates LP solves with pattern search on the directions; a local
/// stand-in for a global solver of the nonlinear master.
RunTrace nlialg(const Instance& inst, const AlgoConfig& cfg, const TraceObserver& observer = {});

}  // namespace nrm
