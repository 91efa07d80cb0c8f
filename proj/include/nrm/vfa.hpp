#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nrm/model.hpp"

namespace nrm {

/// psi_t(x) = theta_t + sum_i W_{t,i} x_i.
struct AffineBaseline {
    std::vector<double> theta;           // tau entries
    std::vector<std::vector<double>> W;  // tau x I

    int horizon() const { return static_cast<int>(theta.size()); }
    /// Value at period t; zero beyond the horizon.
    double eval(int t, std::span<const int> x) const;
    /// psi_t(x) - psi_t(x - a_j) for the consumption column a_j.
    double drop(int t, std::span<const int> a) const;
};

/// phi(x; beta) = exp(-beta . x).
struct RidgeBasis {
    std::vector<double> beta;
};

double eval_basis(const RidgeBasis& b, std::span<const int> x);

/// sum_i c_i |beta_i|.
double weighted_l1(std::span<const double> beta, std::span<const int> capacities);

/// Rescales beta onto the surface sum_i c_i |beta_i| = 1.
/// Throws DegenerateDirection when the weighted norm is zero.
RidgeBasis project_norm(std::span<const double> beta, std::span<const int> capacities);

/// psi_t(x) + xi_t - sum_k V_{t,k} phi(x; beta_k).
struct Approximation {
    std::optional<AffineBaseline> baseline;
    std::vector<double> xi;              // tau entries
    std::vector<std::vector<double>> V;  // tau x K
    std::vector<RidgeBasis> bases;

    /// Zero approximation with K = 0.
    static Approximation zero(int horizon);

    int horizon() const { return static_cast<int>(xi.size()); }
    int num_bases() const { return static_cast<int>(bases.size()); }
    double psi(int t, std::span<const int> x) const { return baseline ? baseline->eval(t, x) : 0.0; }
};

/// Approximate value at period t; 0 for t beyond the horizon.
double eval_approx(const Approximation& a, int t, std::span<const int> x);

/// v(t+1, x - a_j) - v(t+1, x); zero in the last period. Requires x >= a_j.
double continuation_delta(const Approximation& a, const Instance& inst, int t, std::span<const int> x, int j);

/// Accept product j in state x at period t.
bool decide(const Approximation& a, const Instance& inst, int t, std::span<const int> x, int j);

std::string approximation_to_json(const Approximation& a);
Approximation approximation_from_json(const std::string& text);
void save_approximation(const Approximation& a, const std::filesystem::path& path);
Approximation load_approximation(const std::filesystem::path& path);

}  // namespace nrm
