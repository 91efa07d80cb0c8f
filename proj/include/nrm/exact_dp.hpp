#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nrm/model.hpp"

namespace nrm {

/// Mixed-radix encoding of lattice states 0 <= x <= c. Leg 0 varies slowest,
/// so increasing codes enumerate states in lexicographic order.
class StateIndexer {
public:
    StateIndexer() = default;
    explicit StateIndexer(std::vector<int> capacities);

    std::uint64_t size() const { return size_; }
    std::uint64_t encode(std::span<const int> x) const;
    void decode(std::uint64_t code, std::span<int> x) const;
    std::uint64_t stride(int leg) const { return strides_[leg]; }
    const std::vector<int>& capacities() const { return capacities_; }

    /// Advances x to the next state in lexicographic order; false after the last.
    bool next(std::span<int> x) const;

private:
    std::vector<int> capacities_;
    std::vector<std::uint64_t> strides_;
    std::uint64_t size_ = 0;
};

/// Dense table of v_t(x) for t = 1..horizon+1; the last period is the
/// terminal zero. Entries that were never filled hold NaN.
class ValueTable {
public:
    ValueTable() = default;
    ValueTable(int horizon, std::vector<int> capacities);

    int horizon() const { return horizon_; }
    const StateIndexer& states() const { return index_; }
    const std::vector<int>& capacities() const { return index_.capacities(); }

    double at(int t, std::span<const int> x) const { return at_code(t, index_.encode(x)); }
    double at_code(int t, std::uint64_t code) const { return values_[offset(t) + code]; }
    void set(int t, std::span<const int> x, double v) { values_[offset(t) + index_.encode(x)] = v; }
    void set_code(int t, std::uint64_t code, double v) { values_[offset(t) + code] = v; }

    const std::vector<double>& raw() const { return values_; }
    std::vector<double>& raw() { return values_; }

private:
    std::size_t offset(int t) const { return static_cast<std::size_t>(t - 1) * index_.size(); }

    int horizon_ = 0;
    StateIndexer index_;
    std::vector<double> values_;
};

inline constexpr std::uint64_t kDefaultStateCap = 10'000'000;

/// Backward induction on the optimality equations.
/// Throws CapacityError when states x periods exceeds `state_cap`.
ValueTable value_iteration(const Instance& inst, std::uint64_t state_cap = kDefaultStateCap, int threads = 1);

/// One Bellman backup of `vt` at (t, x) using v_{t+1} from the table.
double bellman_backup(const Instance& inst, const ValueTable& vt, int t, std::span<const int> x);

/// max over (t, x) of |v_t(x) - backup|. Throws IncompleteTable on NaN entries.
double bellman_residual(const Instance& inst, const ValueTable& vt);

/// Mean revenue of the policy greedy with respect to `vt`.
double optimal_policy_revenue(const Instance& inst, const ValueTable& vt, std::uint64_t seed, long replications,
                              int threads = 1);

/// Binary dump: magic, horizon, num_legs, capacities, then little-endian doubles.
void save_value_table(const ValueTable& vt, const std::filesystem::path& path);
ValueTable load_value_table(const std::filesystem::path& path);

}  // namespace nrm
