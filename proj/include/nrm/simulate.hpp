#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "nrm/model.hpp"
#include "nrm/vfa.hpp"

namespace nrm {

struct SimResult {
    double Rbar = 0.0;
    double Se = 0.0;
    long N = 0;
    std::uint64_t seed = 0;
    /// Mean revenue was zero while revenues varied; the ratio test was skipped.
    bool undefined_ratio = false;
    /// Per-replication revenues, kept only on request.
    std::vector<double> revenues;
};

struct SimOptions {
    double omega_policy = 0.001;
    long n_max = 200'000;
    /// Replications before the first stopping check; 0 picks 2 for
    /// instances without randomness and `check_every` otherwise.
    long min_reps = 0;
    long check_every = 500;
    int threads = 1;
    bool keep_revenues = false;
};

/// Accept decision for product j in state x at period t.
using Decider = std::function<bool(int t, std::span<const int> x, int j)>;

/// Revenue of one replication driven by uniform draws from `seed`.
double simulate_once(const Instance& inst, const Decider& decide, std::uint64_t seed);

/// Monte-Carlo evaluation with relative standard-error stopping.
SimResult simulate_decisions(const Instance& inst, const Decider& decide, std::uint64_t seed,
                             const SimOptions& opts = {});

/// Evaluates the policy induced by an approximation.
SimResult simulate_policy(const Instance& inst, const Approximation& approx, double omega_policy,
                          std::uint64_t seed, long n_max, int threads = 1);
SimResult simulate_policy(const Instance& inst, const Approximation& approx, std::uint64_t seed,
                          const SimOptions& opts);

/// |1 - Rbar / Zhat| < omega_pgap. Throws InvalidArgument when Zhat <= 0.
bool ck_met(const SimResult& sim, double Zhat, double omega_pgap);

/// CSV with columns replication,revenue.
void write_revenues_csv(const SimResult& sim, const std::filesystem::path& path);

}  // namespace nrm
