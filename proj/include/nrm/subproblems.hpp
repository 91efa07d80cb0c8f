#pragma once

#include <cstdint>
#include <limits>
#include <span>

#include "nrm/model.hpp"
#include "nrm/timer.hpp"
#include "nrm/vfa.hpp"

namespace nrm {

enum class SearchMode { Exact, Local };
enum class ProofQuality { Global, Local, TimeLimited };

const char* to_string(ProofQuality q);

struct SeparationResult {
    int t = 0;
    StateVector x;
    ActionVector u;  // empty for monotonicity rows
    int leg = -1;    // set for monotonicity rows
    /// Row slack at the candidate; negative means violated. +inf when the
    /// period has no admissible candidate.
    double objective = std::numeric_limits<double>::infinity();
    ProofQuality quality = ProofQuality::Global;

    bool found() const { return !x.empty(); }
};

struct LocalSearchOptions {
    int random_starts = 8;
    double time_limit_s = 5.0;
    std::uint64_t seed = 0;
    /// Overall budget shared with the caller; the earlier limit wins.
    Deadline deadline{};
};

/// Slack of the approximate-program row (t, x, u). Throws InvalidArgument
/// for infeasible pairs.
double reduced_cost(const Instance& inst, const Approximation& approx, int t, std::span<const int> x,
                    std::span<const std::uint8_t> u);

/// Slack-minimising action at a fixed state and its slack. Each product
/// enters the slack additively, so the choice is made product by product.
double best_action(const Instance& inst, const Approximation& approx, int t, std::span<const int> x,
                   ActionVector& u);

SeparationResult row_subproblem(const Instance& inst, const Approximation& approx, int t, SearchMode mode,
                                const LocalSearchOptions& opts = {});

/// W_{t,i} + sum_k V_{t,k} (phi_k(x) - phi_k(x + e_i)).
double mono_slack(const Instance& inst, const Approximation& approx, int t, int leg, std::span<const int> x);

/// Minimises mono_slack over states with x_leg < c_leg. Period 1 has no
/// such state and returns a result without a candidate.
SeparationResult mono_subproblem(const Instance& inst, const Approximation& approx, int t, int leg,
                                 SearchMode mode, const LocalSearchOptions& opts = {});

}  // namespace nrm
