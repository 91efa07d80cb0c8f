#include "nrm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "nrm/errors.hpp"
#include "nrm/parallel.hpp"
#include "nrm/random.hpp"

namespace nrm {

double simulate_once(const Instance& inst, const Decider& decide, std::uint64_t seed) {
    Rng rng(seed);
    StateVector x = inst.full_state();
    double revenue = 0.0;
    for (int t = 1; t <= inst.horizon(); ++t) {
        // One draw per period, split by cumulative probabilities.
        const double r = rng.uniform01();
        const auto& p = inst.probs(t);
        double acc = 0.0;
        int arrival = -1;
        for (int j = 0; j < inst.num_products(); ++j) {
            acc += p[j];
            if (r < acc) {
                arrival = j;
                break;
            }
        }
        if (arrival < 0 || !can_serve(inst, x, arrival) || !decide(t, x, arrival)) continue;
        revenue += inst.fare(arrival);
        for (int i : inst.legs_of(arrival)) --x[i];
    }
    return revenue;
}

SimResult simulate_decisions(const Instance& inst, const Decider& decide, std::uint64_t seed,
                             const SimOptions& opts) {
    if (opts.n_max < 2) throw InvalidArgument("simulate: n_max must be at least 2");
    if (!(opts.omega_policy >= 0.0 && opts.omega_policy < 1.0))
        throw InvalidArgument("simulate: omega_policy must lie in [0, 1)");
    const long every = std::max<long>(1, opts.check_every);
    long first = opts.min_reps > 0 ? opts.min_reps : (inst.deterministic_arrivals() ? 2 : every);
    first = std::clamp<long>(first, 2, opts.n_max);

    SimResult res;
    res.seed = seed;
    std::vector<double> revenues;
    revenues.reserve(static_cast<std::size_t>(std::min<long>(opts.n_max, 1'000'000)));
    double sum = 0.0, sum_sq = 0.0;
    long target = first;
    while (true) {
        const std::size_t begin = revenues.size();
        revenues.resize(static_cast<std::size_t>(target));
        parallel_for(revenues.size() - begin, opts.threads, [&](std::size_t k) {
            const std::size_t n = begin + k;
            revenues[n] = simulate_once(inst, decide, derive_seed(seed, n));
        });
        // Sequential accumulation keeps results independent of the thread count.
        for (std::size_t n = begin; n < revenues.size(); ++n) {
            sum += revenues[n];
            sum_sq += revenues[n] * revenues[n];
        }
        const double N = static_cast<double>(revenues.size());
        res.N = static_cast<long>(revenues.size());
        res.Rbar = sum / N;
        res.Se = std::sqrt(std::max(0.0, sum_sq / N - res.Rbar * res.Rbar) / N);
        if (res.N >= opts.n_max) break;
        if (res.Rbar == 0.0) {
            if (res.Se == 0.0) break;
            res.undefined_ratio = true;
        } else if (res.Se / std::abs(res.Rbar) <= opts.omega_policy) {
            break;
        }
        target = std::min(opts.n_max, (res.N / every + 1) * every);
    }
    if (res.Rbar == 0.0 && res.Se > 0.0) res.undefined_ratio = true;
    if (opts.keep_revenues) res.revenues = std::move(revenues);
    return res;
}

SimResult simulate_policy(const Instance& inst, const Approximation& approx, std::uint64_t seed,
                          const SimOptions& opts) {
    Decider d = [&](int t, std::span<const int> x, int j) { return decide(approx, inst, t, x, j); };
    return simulate_decisions(inst, d, seed, opts);
}

SimResult simulate_policy(const Instance& inst, const Approximation& approx, double omega_policy,
                          std::uint64_t seed, long n_max, int threads) {
    SimOptions opts;
    opts.omega_policy = omega_policy;
    opts.n_max = n_max;
    opts.threads = threads;
    return simulate_policy(inst, approx, seed, opts);
}

bool ck_met(const SimResult& sim, double Zhat, double omega_pgap) {
    if (!(Zhat > 0.0)) throw InvalidArgument("ck_met: bound estimate must be positive");
    return std::abs(1.0 - sim.Rbar / Zhat) < omega_pgap;
}

void write_revenues_csv(const SimResult& sim, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("simulate: cannot write " + path.string());
    out << "replication,revenue\n" << std::setprecision(17);
    for (std::size_t n = 0; n < sim.revenues.size(); ++n) out << n << "," << sim.revenues[n] << "\n";
}

}  // namespace nrm
