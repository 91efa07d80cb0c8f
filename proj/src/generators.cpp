#include <algorithm>
#include <numeric>

#include "nrm/errors.hpp"
#include "nrm/model.hpp"
#include "nrm/random.hpp"

namespace nrm {

namespace {

/// Rescales raw weights so that expected seat demand over the horizon equals
/// `target` times total seats. A period cannot carry more than one arrival,
/// so the total probability is capped at 1.
std::vector<double> scale_to_load_factor(const std::vector<double>& raw, const std::vector<std::vector<int>>& legs,
                                         double seats, int horizon, double target) {
    double seat_weight = 0.0;
    double mass = 0.0;
    for (std::size_t j = 0; j < raw.size(); ++j) {
        seat_weight += raw[j] * static_cast<double>(legs[j].size());
        mass += raw[j];
    }
    double scale = target * seats / (static_cast<double>(horizon) * seat_weight);
    scale = std::min(scale, 1.0 / mass);
    std::vector<double> p(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) p[j] = raw[j] * scale;
    // Guard against rounding pushing the sum past 1.
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    if (sum > 1.0)
        for (double& v : p) v /= sum;
    return p;
}

}  // namespace

std::optional<int> hub_spoke_table_capacity(int locations, int horizon) {
    static constexpr int kLocations[] = {2, 3, 5, 10, 20};
    static constexpr int kHorizons[] = {20, 50, 100, 200, 500, 1000};
    static constexpr int kCapacity[6][5] = {
        {3, 2, 2, 1, 1},     {8, 6, 4, 2, 1},       {17, 12, 8, 5, 2},
        {33, 25, 17, 9, 5}, {83, 62, 41, 23, 12}, {165, 124, 83, 45, 24},
    };
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 5; ++c)
            if (kHorizons[r] == horizon && kLocations[c] == locations) return kCapacity[r][c];
    return std::nullopt;
}

Instance gen_hub_spoke(int locations, int horizon, int capacity, std::uint64_t seed) {
    if (locations < 2) throw InvalidArgument("gen_hub_spoke: need at least 2 non-hub locations");
    if (horizon < 1) throw InvalidArgument("gen_hub_spoke: horizon must be positive");
    if (capacity < 1) throw InvalidArgument("gen_hub_spoke: capacity must be positive");
    Rng rng(seed);
    const int legs = 2 * locations;  // leg 2l: location l to hub; leg 2l+1: hub to location l

    std::vector<double> low(legs), high(legs);
    for (int i = 0; i < legs; ++i) {
        low[i] = rng.uniform(20.0, 120.0);
        high[i] = low[i] * rng.uniform(2.0, 5.0);
    }

    std::vector<std::vector<int>> itineraries;
    for (int i = 0; i < legs; ++i) itineraries.push_back({i});
    for (int from = 0; from < locations; ++from)
        for (int to = 0; to < locations; ++to)
            if (from != to) itineraries.push_back({2 * from, 2 * to + 1});

    std::vector<double> fares;
    std::vector<std::vector<int>> consumption;
    std::vector<double> raw;
    for (int cls = 0; cls < 2; ++cls) {
        const auto& base = cls == 0 ? low : high;
        for (const auto& it : itineraries) {
            double fare = 0.0;
            for (int i : it) fare += base[i];
            if (it.size() > 1) fare *= rng.uniform(0.8, 1.0);
            fares.push_back(fare);
            consumption.push_back(it);
            raw.push_back(rng.uniform(0.5, 1.5) * (cls == 0 ? 1.0 : 1.0 / 3.0));
        }
    }
    auto probs = scale_to_load_factor(raw, consumption, static_cast<double>(legs) * capacity, horizon, 1.6);
    return Instance::stationary(std::vector<int>(legs, capacity), std::move(fares), std::move(consumption),
                                std::move(probs), horizon,
                                "hub-spoke-L" + std::to_string(locations) + "-tau" + std::to_string(horizon));
}

Instance gen_bus_line(int num_legs, int horizon, std::vector<int> capacities, const BusLineSpec& spec,
                      std::uint64_t seed) {
    if (num_legs < 2) throw InvalidArgument("gen_bus_line: need at least 2 legs");
    if (horizon < 1) throw InvalidArgument("gen_bus_line: horizon must be positive");
    if (spec.lines < 1) throw InvalidArgument("gen_bus_line: lines must be positive");
    if (spec.fare_classes.empty() || spec.fare_classes.size() != spec.class_weights.size())
        throw InvalidArgument("gen_bus_line: fare_classes and class_weights must match and be nonempty");
    if (capacities.size() == 1) capacities.assign(static_cast<std::size_t>(num_legs), capacities.front());
    if (static_cast<int>(capacities.size()) != num_legs)
        throw InvalidArgument("gen_bus_line: capacities must have one entry or one per leg");

    Rng rng(seed);
    std::vector<int> all_caps;
    std::vector<double> fares, raw;
    std::vector<std::vector<int>> consumption;
    for (int line = 0; line < spec.lines; ++line) {
        const int offset = line * num_legs;
        all_caps.insert(all_caps.end(), capacities.begin(), capacities.end());
        std::vector<double> base(static_cast<std::size_t>(num_legs));
        for (double& b : base) b = rng.uniform(spec.leg_fare_lo, spec.leg_fare_hi);
        for (std::size_t cls = 0; cls < spec.fare_classes.size(); ++cls) {
            for (int len = 1; len <= num_legs; ++len) {
                for (int first = 0; first + len <= num_legs; ++first) {
                    std::vector<int> run(static_cast<std::size_t>(len));
                    std::iota(run.begin(), run.end(), offset + first);
                    double fare = 0.0;
                    for (int k = first; k < first + len; ++k) fare += base[k];
                    fares.push_back(fare * spec.fare_classes[cls]);
                    consumption.push_back(std::move(run));
                    raw.push_back(rng.uniform(0.5, 1.5) * spec.class_weights[cls]);
                }
            }
        }
    }
    const double seats = std::accumulate(all_caps.begin(), all_caps.end(), 0.0);
    auto probs = scale_to_load_factor(raw, consumption, seats, horizon, spec.load_factor);
    return Instance::stationary(std::move(all_caps), std::move(fares), std::move(consumption), std::move(probs),
                                horizon, "bus-line-I" + std::to_string(num_legs));
}

}  // namespace nrm
