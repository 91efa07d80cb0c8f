#include "nrm/exact_dp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "nrm/errors.hpp"
#include "nrm/parallel.hpp"
#include "nrm/simulate.hpp"

namespace nrm {

StateIndexer::StateIndexer(std::vector<int> capacities) : capacities_(std::move(capacities)) {
    const int n = static_cast<int>(capacities_.size());
    strides_.assign(static_cast<std::size_t>(n), 1);
    size_ = 1;
    for (int i = n - 1; i >= 0; --i) {
        strides_[i] = size_;
        const auto radix = static_cast<std::uint64_t>(capacities_[i]) + 1;
        if (size_ > std::numeric_limits<std::uint64_t>::max() / radix)
            throw CapacityError("state space does not fit in 64 bits");
        size_ *= radix;
    }
}

std::uint64_t StateIndexer::encode(std::span<const int> x) const {
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < strides_.size(); ++i) code += static_cast<std::uint64_t>(x[i]) * strides_[i];
    return code;
}

void StateIndexer::decode(std::uint64_t code, std::span<int> x) const {
    for (std::size_t i = 0; i < strides_.size(); ++i) {
        x[i] = static_cast<int>(code / strides_[i]);
        code %= strides_[i];
    }
}

bool StateIndexer::next(std::span<int> x) const {
    for (int i = static_cast<int>(capacities_.size()) - 1; i >= 0; --i) {
        if (x[i] < capacities_[i]) {
            ++x[i];
            return true;
        }
        x[i] = 0;
    }
    return false;
}

ValueTable::ValueTable(int horizon, std::vector<int> capacities)
    : horizon_(horizon), index_(std::move(capacities)) {
    values_.assign(static_cast<std::size_t>(horizon + 1) * index_.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::uint64_t s = 0; s < index_.size(); ++s) set_code(horizon + 1, s, 0.0);
}

namespace {

/// Code offset of a_j and whether x can serve j, evaluated per product.
struct ProductStep {
    std::uint64_t offset = 0;
    const std::vector<int>* legs = nullptr;
};

std::vector<ProductStep> product_steps(const Instance& inst, const StateIndexer& idx) {
    std::vector<ProductStep> steps(static_cast<std::size_t>(inst.num_products()));
    for (int j = 0; j < inst.num_products(); ++j) {
        steps[j].legs = &inst.legs_of(j);
        for (int i : inst.legs_of(j)) steps[j].offset += idx.stride(i);
    }
    return steps;
}

double backup_at(const Instance& inst, const ValueTable& vt, const std::vector<ProductStep>& steps, int t,
                 std::uint64_t code, std::span<const int> x) {
    const double stay = vt.at_code(t + 1, code);
    double v = stay;
    const auto& p = inst.probs(t);
    for (int j = 0; j < inst.num_products(); ++j) {
        if (p[j] == 0.0) continue;
        bool ok = true;
        for (int i : *steps[j].legs) ok = ok && x[i] >= 1;
        if (!ok) continue;
        const double gain = inst.fare(j) + vt.at_code(t + 1, code - steps[j].offset) - stay;
        if (gain > 0.0) v += p[j] * gain;
    }
    return v;
}

}  // namespace

ValueTable value_iteration(const Instance& inst, std::uint64_t state_cap, int threads) {
    const std::uint64_t states = inst.state_count();
    if (states == std::numeric_limits<std::uint64_t>::max() ||
        states > state_cap / static_cast<std::uint64_t>(inst.horizon()))
        throw CapacityError("value iteration needs " + std::to_string(states) + " states x " +
                            std::to_string(inst.horizon()) + " periods, above the cap of " +
                            std::to_string(state_cap) + "; use the approximate pipeline instead");
    ValueTable vt(inst.horizon(), inst.capacities());
    const auto& idx = vt.states();
    const auto steps = product_steps(inst, idx);
    const int legs = inst.num_legs();
    const std::uint64_t chunk = 4096;
    const std::uint64_t chunks = (idx.size() + chunk - 1) / chunk;
    for (int t = inst.horizon(); t >= 1; --t) {
        parallel_for(chunks, threads, [&](std::size_t c) {
            std::vector<int> x(static_cast<std::size_t>(legs));
            const std::uint64_t lo = c * chunk;
            const std::uint64_t hi = std::min(idx.size(), lo + chunk);
            idx.decode(lo, x);
            for (std::uint64_t s = lo; s < hi; ++s) {
                vt.raw()[static_cast<std::size_t>(t - 1) * idx.size() + s] = backup_at(inst, vt, steps, t, s, x);
                idx.next(x);
            }
        });
    }
    return vt;
}

double bellman_backup(const Instance& inst, const ValueTable& vt, int t, std::span<const int> x) {
    if (t < 1 || t > vt.horizon()) throw InvalidArgument("bellman_backup: period out of range");
    const auto steps = product_steps(inst, vt.states());
    return backup_at(inst, vt, steps, t, vt.states().encode(x), x);
}

double bellman_residual(const Instance& inst, const ValueTable& vt) {
    if (vt.horizon() != inst.horizon() || vt.capacities() != inst.capacities())
        throw InvalidArgument("bellman_residual: table does not match the instance");
    const auto& idx = vt.states();
    const auto steps = product_steps(inst, idx);
    std::vector<int> x(static_cast<std::size_t>(inst.num_legs()));
    for (std::uint64_t s = 0; s < idx.size(); ++s)
        for (int t = 1; t <= vt.horizon() + 1; ++t)
            if (std::isnan(vt.at_code(t, s))) {
                idx.decode(s, x);
                std::string where;
                for (int v : x) where += (where.empty() ? "" : ",") + std::to_string(v);
                throw IncompleteTable("value table has no entry for t=" + std::to_string(t) + ", x=(" + where + ")");
            }
    double worst = 0.0;
    for (int t = 1; t <= vt.horizon(); ++t) {
        std::fill(x.begin(), x.end(), 0);
        for (std::uint64_t s = 0; s < idx.size(); ++s, idx.next(x))
            worst = std::max(worst, std::abs(vt.at_code(t, s) - backup_at(inst, vt, steps, t, s, x)));
    }
    return worst;
}

double optimal_policy_revenue(const Instance& inst, const ValueTable& vt, std::uint64_t seed, long replications,
                              int threads) {
    const auto& idx = vt.states();
    Decider greedy = [&](int t, std::span<const int> x, int j) {
        if (!can_serve(inst, x, j)) return false;
        const std::uint64_t code = idx.encode(x);
        std::uint64_t off = 0;
        for (int i : inst.legs_of(j)) off += idx.stride(i);
        return inst.fare(j) + vt.at_code(t + 1, code - off) >= vt.at_code(t + 1, code);
    };
    SimOptions opts;
    opts.omega_policy = 0.0;
    opts.n_max = replications;
    opts.min_reps = replications;
    opts.threads = threads;
    return simulate_decisions(inst, greedy, seed, opts).Rbar;
}

namespace {

constexpr char kMagic[8] = {'N', 'R', 'M', 'V', 'T', 'B', 'L', '1'};

template <typename T>
void put_le(std::ofstream& out, T v) {
    static_assert(std::endian::native == std::endian::little, "binary dump assumes a little-endian host");
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_le(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("value table: truncated file");
    return v;
}

}  // namespace

void save_value_table(const ValueTable& vt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("value table: cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    put_le<std::int32_t>(out, vt.horizon());
    put_le<std::int32_t>(out, static_cast<std::int32_t>(vt.capacities().size()));
    for (int c : vt.capacities()) put_le<std::int32_t>(out, c);
    for (double v : vt.raw()) put_le<double>(out, v);
}

ValueTable load_value_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("value table: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ParseError("value table: bad header");
    const int horizon = get_le<std::int32_t>(in);
    const int legs = get_le<std::int32_t>(in);
    if (horizon < 1 || legs < 1) throw ParseError("value table: bad dimensions");
    std::vector<int> caps(static_cast<std::size_t>(legs));
    for (int& c : caps) c = get_le<std::int32_t>(in);
    ValueTable vt(horizon, caps);
    for (double& v : vt.raw()) v = get_le<double>(in);
    return vt;
}

}  // namespace nrm
