#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace nrm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { GE, LE, EQ };
enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus s);

/// Numerical settings shared by every solve.
struct LpTolerances {
    double feasibility = 1e-7;
    double optimality = 1e-9;
    double pivot = 1e-10;
    /// Consecutive degenerate pivots before switching to Bland's rule.
    int bland_after = 1000;
    int refactor_every = 100;
    /// Relative size of the random shift given to basic values once pivots
    /// stop making progress; undone before returning. Zero disables it.
    double perturbation = 1e-6;
    long max_iterations = 200'000;
};

struct LpVariable {
    std::string name;
    double lower = -kInf;
    double upper = kInf;
    double objective = 0.0;
};

struct LpRow {
    std::string name;
    Sense sense = Sense::GE;
    double rhs = 0.0;
    std::vector<std::pair<int, double>> coefs;  // (variable index, coefficient)
};

/// min c'x + offset subject to rows and variable bounds.
class LinearProgram {
public:
    int add_variable(std::string name, double lower, double upper, double objective);
    int add_row(LpRow row);
    int add_row(std::string name, Sense sense, double rhs, std::vector<std::pair<int, double>> coefs);

    int num_variables() const { return static_cast<int>(vars_.size()); }
    int num_rows() const { return static_cast<int>(rows_.size()); }
    const std::vector<LpVariable>& variables() const { return vars_; }
    const std::vector<LpRow>& rows() const { return rows_; }
    const LpVariable& variable(int k) const { return vars_[k]; }
    const LpRow& row(int r) const { return rows_[r]; }
    int find_variable(const std::string& name) const;

    void set_objective(int var, double c) { vars_[var].objective = c; }
    double objective_offset = 0.0;

private:
    std::vector<LpVariable> vars_;
    std::vector<LpRow> rows_;
    std::unordered_map<std::string, int> by_name_;
};

/// Identity of a basic column of the internal dual tableau. Stable when
/// rows are appended, which is what makes warm starts possible.
struct BasisKey {
    std::uint8_t kind;  // 0 row, 1 lower bound, 2 upper bound, 3 artificial
    std::int8_t sign;
    std::int32_t index;
    friend bool operator==(const BasisKey&, const BasisKey&) = default;
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0;
    std::vector<double> primal;
    /// One dual per row. For a min problem a binding >= row has a
    /// nonnegative dual and a binding <= row a nonpositive one.
    std::vector<double> duals;
    long iterations = 0;
    /// Some nonbasic column has zero reduced cost: the row duals need not
    /// be unique.
    bool dual_degenerate = false;
    bool warm_started = false;
    /// Refactorization exposed drift the solve could not repair.
    bool numerically_unstable = false;
    std::vector<BasisKey> basis;

    bool optimal() const { return status == LpStatus::Optimal; }
};

LpSolution solve(const LinearProgram& lp, const LpTolerances& tol = {});

/// Solve starting from the basis of `hint` when it is still usable.
LpSolution solve_warm(const LinearProgram& lp, const LpSolution& hint, const LpTolerances& tol = {});

/// Appends rows to `lp` and re-solves from the prior optimal basis.
LpSolution add_rows_and_resolve(LinearProgram& lp, const std::vector<LpRow>& new_rows, const LpSolution& prior,
                                const LpTolerances& tol = {});

/// Free-format MPS export.
void write_mps(const LinearProgram& lp, std::ostream& out, const std::string& name = "NRM");

}  // namespace nrm
