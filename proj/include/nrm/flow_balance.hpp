#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nrm/master.hpp"
#include "nrm/model.hpp"
#include "nrm/timer.hpp"
#include "nrm/vfa.hpp"

namespace nrm {

struct ImbalanceProfile {
    std::vector<double> ell;  // ell[t-1]
    double weighted = 0.0;    // sum_t (tau - t + 1) |ell_t|
};

/// Compact view of the nonzero duals, for repeated imbalance evaluation
/// at many directions.
class ImbalanceEvaluator {
public:
    /// Throws StaleDuals when the duals do not belong to `rows`.
    ImbalanceEvaluator(const Instance& inst, const DualSolution& duals, const RowSets& rows);

    ImbalanceProfile profile(std::span<const double> beta) const;
    double weighted(std::span<const double> beta) const { return profile(beta).weighted; }

private:
    struct LambdaTerm {
        double weight;
        StateVector x;
        std::vector<int> served;  // products with u_j = 1 and p_{t,j} > 0
    };
    struct MuTerm {
        double weight;
        int leg;
        StateVector x;
    };

    const Instance& inst_;
    std::vector<std::vector<LambdaTerm>> lambda_;
    std::vector<std::vector<MuTerm>> mu_;
};

/// Flow imbalance per period: zero exactly when the dual equality of a
/// weight column with direction beta holds.
ImbalanceProfile flow_imbalance(const Instance& inst, const DualSolution& duals, const RowSets& rows,
                                const RidgeBasis& b);

double weighted_objective(const Instance& inst, const DualSolution& duals, const RowSets& rows,
                          const RidgeBasis& b);

/// max over directions in `bases` and periods of |ell_t|.
double max_flow_residual(const Instance& inst, const DualSolution& duals, const RowSets& rows,
                         const std::vector<RidgeBasis>& bases);

struct BasisGenConfig {
    int starts = 20;
    double time_limit_s = 30.0;
    std::uint64_t seed = 0;
    int threads = 1;
    /// Objectives at or below this count as no violation.
    double tolerance = 1e-9;
    Deadline deadline{};
};

struct BasisGenResult {
    RidgeBasis basis;
    double objective = 0.0;
    bool found = false;
    int start = -1;
};

/// Multi-start projected coordinate ascent of the weighted imbalance on
/// the surface sum_i c_i |beta_i| = 1.
BasisGenResult generate_basis(const Instance& inst, const DualSolution& duals, const RowSets& rows,
                              const BasisGenConfig& cfg = {});

/// Weighted state-action pair for the decomposition identity.
struct WeightedPair {
    int t;
    StateVector x;
    ActionVector u;
    double weight;
};

struct Decomposition {
    double Xi = 0.0;
    double Psi = 0.0;
    double Phi = 0.0;
    double direct = 0.0;
};

/// Splits sum_t sum_(x,u) lambda (v_t(x) - expected one-step value) into
/// offset, baseline and ridge parts. Holds for weights with unit mass
/// on (c, .) in period 1 and equal mass in every period.
Decomposition decomposition_check(const Instance& inst, const Approximation& approx,
                                  const std::vector<WeightedPair>& lambda);

}  // namespace nrm
