#include "nrm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nrm/errors.hpp"

namespace nrm {

namespace {

constexpr double kProbSlack = 1e-12;

}  // namespace

Instance::Instance(std::vector<int> capacities, std::vector<double> fares,
                   std::vector<std::vector<int>> legs_of_product, std::vector<std::vector<double>> probs,
                   std::string name)
    : capacities_(std::move(capacities)),
      fares_(std::move(fares)),
      legs_of_product_(std::move(legs_of_product)),
      probs_(std::move(probs)),
      name_(std::move(name)) {
    validate_and_index();
}

Instance Instance::stationary(std::vector<int> capacities, std::vector<double> fares,
                              std::vector<std::vector<int>> legs_of_product, std::vector<double> probs,
                              int horizon, std::string name) {
    if (horizon < 1) throw ValidationError("horizon must be positive");
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(horizon), probs);
    Instance inst(std::move(capacities), std::move(fares), std::move(legs_of_product), std::move(rows),
                  std::move(name));
    inst.stationary_ = true;
    return inst;
}

void Instance::validate_and_index() {
    const int legs = num_legs();
    const int products = num_products();
    if (legs < 1) throw ValidationError("num_legs must be positive");
    if (products < 1) throw ValidationError("num_products must be positive");
    if (probs_.empty()) throw ValidationError("horizon must be positive");
    if (static_cast<int>(legs_of_product_.size()) != products)
        throw ValidationError("consumption must list one leg set per product");
    for (int i = 0; i < legs; ++i)
        if (capacities_[i] < 0) throw ValidationError("capacities must be nonnegative (leg " + std::to_string(i) + ")");
    for (int j = 0; j < products; ++j)
        if (!(fares_[j] >= 0.0) || !std::isfinite(fares_[j]))
            throw ValidationError("fares must be finite and nonnegative (product " + std::to_string(j) + ")");

    consumption_.assign(static_cast<std::size_t>(legs) * products, 0);
    for (int j = 0; j < products; ++j) {
        auto& legs_j = legs_of_product_[j];
        if (legs_j.empty())
            throw ValidationError("every product consumes at least one leg (product " + std::to_string(j) + ")");
        std::sort(legs_j.begin(), legs_j.end());
        for (std::size_t k = 0; k < legs_j.size(); ++k) {
            const int i = legs_j[k];
            if (i < 0 || i >= legs)
                throw ValidationError("consumption leg index out of range (product " + std::to_string(j) + ")");
            if (k > 0 && legs_j[k - 1] == i)
                throw ValidationError("consumption entries are 0/1; duplicate leg in product " + std::to_string(j));
            consumption_[static_cast<std::size_t>(j) * legs + i] = 1;
        }
    }

    arrival_mass_.assign(probs_.size(), 0.0);
    for (std::size_t t = 0; t < probs_.size(); ++t) {
        const auto& row = probs_[t];
        if (static_cast<int>(row.size()) != products)
            throw ValidationError("arrival probabilities of period " + std::to_string(t + 1) +
                                  " must have one entry per product");
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0 && p <= 1.0))
                throw ValidationError("arrival probabilities must lie in [0,1] (period " + std::to_string(t + 1) + ")");
            sum += p;
        }
        if (sum > 1.0 + kProbSlack) {
            std::ostringstream msg;
            msg << "at most one arrival per period: sum of arrival probabilities is " << sum << " in period "
                << (t + 1);
            throw ValidationError(msg.str());
        }
        arrival_mass_[t] = std::min(sum, 1.0);
    }
    stationary_ = std::all_of(probs_.begin(), probs_.end(), [&](const auto& r) { return r == probs_.front(); });
}

std::uint64_t Instance::state_count() const {
    std::uint64_t n = 1;
    for (int c : capacities_) {
        const auto k = static_cast<std::uint64_t>(c) + 1;
        if (n > std::numeric_limits<std::uint64_t>::max() / k) return std::numeric_limits<std::uint64_t>::max();
        n *= k;
    }
    return n;
}

double Instance::load_factor() const {
    double seats = 0.0;
    for (int c : capacities_) seats += c;
    double demand = 0.0;
    for (int t = 1; t <= horizon(); ++t)
        for (int j = 0; j < num_products(); ++j) demand += prob(t, j) * static_cast<double>(legs_of_product_[j].size());
    return seats > 0 ? demand / seats : std::numeric_limits<double>::infinity();
}

bool Instance::deterministic_arrivals() const {
    for (const auto& row : probs_) {
        const bool none = std::all_of(row.begin(), row.end(), [](double p) { return p == 0.0; });
        const bool sure = std::any_of(row.begin(), row.end(), [](double p) { return p == 1.0; });
        if (!none && !sure) return false;
    }
    return true;
}

bool can_serve(const Instance& inst, std::span<const int> x, int j) {
    for (int i : inst.legs_of(j))
        if (x[i] < 1) return false;
    return true;
}

bool is_feasible(const Instance& inst, int t, std::span<const int> x, std::span<const std::uint8_t> u) {
    if (static_cast<int>(x.size()) != inst.num_legs() || static_cast<int>(u.size()) != inst.num_products())
        throw InvalidArgument("is_feasible: state/action dimension mismatch");
    if (t < 1 || t > inst.horizon()) throw InvalidArgument("is_feasible: period out of range");
    for (int i = 0; i < inst.num_legs(); ++i) {
        if (x[i] < 0 || x[i] > inst.capacity(i)) return false;
        if (t == 1 && x[i] != inst.capacity(i)) return false;
    }
    for (int j = 0; j < inst.num_products(); ++j) {
        if (u[j] > 1) return false;
        if (u[j] == 1 && !can_serve(inst, x, j)) return false;
    }
    return true;
}

StateVector transition(const Instance& inst, std::span<const int> x, std::optional<int> arrival,
                       std::span<const std::uint8_t> u) {
    if (static_cast<int>(x.size()) != inst.num_legs() || static_cast<int>(u.size()) != inst.num_products())
        throw InvalidArgument("transition: state/action dimension mismatch");
    StateVector next(x.begin(), x.end());
    if (!arrival) return next;
    const int j = *arrival;
    if (j < 0 || j >= inst.num_products()) throw InvalidArgument("transition: product index out of range");
    if (u[j] == 0) return next;
    for (int i : inst.legs_of(j)) {
        if (next[i] < 1)
            throw StateUnderflow("transition: accepting product " + std::to_string(j) + " would empty leg " +
                                 std::to_string(i) + " below zero");
        --next[i];
    }
    return next;
}

}  // namespace nrm
