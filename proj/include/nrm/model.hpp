#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nrm {

/// Remaining units per leg.
using StateVector = std::vector<int>;
/// Accept indicators per product (0 or 1).
using ActionVector = std::vector<std::uint8_t>;

/// Network revenue management instance.
///
/// Periods are numbered 1..horizon, legs 0..num_legs-1 and products
/// 0..num_products-1. At most one request arrives per period; product j
/// arrives in period t with probability prob(t, j).
class Instance {
public:
    Instance() = default;

    /// Builds and validates an instance. `legs_of_product[j]` lists the
    /// legs product j consumes; `probs` holds one row per period.
    Instance(std::vector<int> capacities, std::vector<double> fares,
             std::vector<std::vector<int>> legs_of_product,
             std::vector<std::vector<double>> probs, std::string name = {});

    /// Same, with one probability row used in every period.
    static Instance stationary(std::vector<int> capacities, std::vector<double> fares,
                               std::vector<std::vector<int>> legs_of_product,
                               std::vector<double> probs, int horizon, std::string name = {});

    int num_legs() const { return static_cast<int>(capacities_.size()); }
    int num_products() const { return static_cast<int>(fares_.size()); }
    int horizon() const { return static_cast<int>(probs_.size()); }

    const std::vector<int>& capacities() const { return capacities_; }
    int capacity(int leg) const { return capacities_[leg]; }
    const std::vector<double>& fares() const { return fares_; }
    double fare(int j) const { return fares_[j]; }

    /// a_ij in {0, 1}.
    int consumption(int leg, int j) const { return consumption_[static_cast<std::size_t>(j) * num_legs() + leg]; }
    /// Column a_j of the consumption matrix.
    std::span<const int> column(int j) const {
        return {consumption_.data() + static_cast<std::size_t>(j) * num_legs(), static_cast<std::size_t>(num_legs())};
    }
    const std::vector<int>& legs_of(int j) const { return legs_of_product_[j]; }

    double prob(int t, int j) const { return probs_[t - 1][j]; }
    const std::vector<double>& probs(int t) const { return probs_[t - 1]; }
    /// Probability that some request arrives in period t.
    double arrival_mass(int t) const { return arrival_mass_[t - 1]; }
    bool is_stationary() const { return stationary_; }

    const std::string& name() const { return name_; }

    /// Number of lattice states prod_i (c_i + 1); saturates at UINT64_MAX.
    std::uint64_t state_count() const;

    /// Expected total seat demand over the horizon divided by total seats.
    double load_factor() const;

    /// True when every period's outcome is certain (no randomness).
    bool deterministic_arrivals() const;

    StateVector full_state() const { return capacities_; }

    friend bool operator==(const Instance& a, const Instance& b) {
        return a.capacities_ == b.capacities_ && a.fares_ == b.fares_ &&
               a.legs_of_product_ == b.legs_of_product_ && a.probs_ == b.probs_;
    }

private:
    void validate_and_index();

    std::vector<int> capacities_;
    std::vector<double> fares_;
    std::vector<std::vector<int>> legs_of_product_;
    std::vector<int> consumption_;  // product-major J x I
    std::vector<std::vector<double>> probs_;
    std::vector<double> arrival_mass_;
    bool stationary_ = false;
    std::string name_;
};

/// True iff (x, u) is a feasible state-action pair in period t.
bool is_feasible(const Instance& inst, int t, std::span<const int> x, std::span<const std::uint8_t> u);

/// True iff x >= a_j componentwise.
bool can_serve(const Instance& inst, std::span<const int> x, int j);

/// State after the period: x - a_j u_j when product j arrived, x otherwise.
StateVector transition(const Instance& inst, std::span<const int> x, std::optional<int> arrival,
                       std::span<const std::uint8_t> u);

/// Hub-and-spoke network with `locations` non-hub cities, two fare classes.
Instance gen_hub_spoke(int locations, int horizon, int capacity, std::uint64_t seed);

/// Hub-and-spoke capacity from the benchmark table, if (locations, horizon)
/// is one of the tabulated combinations.
std::optional<int> hub_spoke_table_capacity(int locations, int horizon);

struct BusLineSpec {
    /// Fare multiplier per fare class, applied to the sum of leg base fares.
    std::vector<double> fare_classes{1.0, 3.0};
    /// Relative demand weight of each fare class.
    std::vector<double> class_weights{1.0, 1.0 / 3.0};
    double leg_fare_lo = 5.0;
    double leg_fare_hi = 15.0;
    double load_factor = 1.6;
    /// Independent copies of the line placed side by side.
    int lines = 1;
};

/// Bus line(s) of consecutive legs; products are all origin-destination
/// runs of consecutive legs in every fare class.
Instance gen_bus_line(int num_legs, int horizon, std::vector<int> capacities, const BusLineSpec& spec,
                      std::uint64_t seed);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& inst, const std::filesystem::path& path);
Instance parse_instance(const std::string& text);
std::string dump_instance(const Instance& inst);

/// FNV-1a hash of the canonical serialization.
std::uint64_t instance_hash(const Instance& inst);

}  // namespace nrm
