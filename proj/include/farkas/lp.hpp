#pragma once

#include "farkas/rational.hpp"

#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace farkas {

inline constexpr double kStrictEpsilon = 1e-9;
inline constexpr double kCheckTolerance = 1e-6;

enum class VarType { Continuous, Binary };
enum class Relation { Le, Eq, Ge };
enum class Sense { Minimize, Maximize };

struct Variable {
    std::string name;
    std::optional<Rational> lower;  // none = -inf
    std::optional<Rational> upper;  // none = +inf
    VarType type = VarType::Continuous;
};

using LinExpr = std::vector<std::pair<std::size_t, Rational>>;

struct Constraint {
    std::string name;
    LinExpr coeffs;
    Relation rel = Relation::Le;
    Rational rhs;
    // Only for Le/Ge: the row is meant as < / >.
    bool strict = false;
};

// binary = 0 implies var = 0. Lowered to big-M rows using `bound`, or the variable's own bounds.
struct Indicator {
    std::size_t binary;
    std::size_t var;
    std::optional<double> bound;
};

class LinSystem {
public:
    std::size_t add_var(std::string name, std::optional<Rational> lower = Rational(0),
                        std::optional<Rational> upper = std::nullopt, VarType type = VarType::Continuous);
    std::size_t add_binary(std::string name);
    std::size_t add_constraint(std::string name, LinExpr coeffs, Relation rel, Rational rhs, bool strict = false);
    void add_indicator(std::size_t binary, std::size_t var, std::optional<double> bound = std::nullopt);
    void set_objective(Sense sense, std::vector<std::pair<std::size_t, double>> coeffs);

    std::size_t num_vars() const { return vars_.size(); }
    std::size_t num_constraints() const { return rows_.size(); }
    const std::vector<Variable>& vars() const { return vars_; }
    std::vector<Variable>& vars() { return vars_; }
    const std::vector<Constraint>& constraints() const { return rows_; }
    const std::vector<Indicator>& indicators() const { return indicators_; }
    bool has_objective() const { return hasObjective_; }
    Sense sense() const { return sense_; }
    const std::vector<std::pair<std::size_t, double>>& objective() const { return objective_; }
    bool has_strict() const;
    bool has_integers() const;
    std::optional<std::size_t> find_var(const std::string& name) const;

private:
    std::vector<Variable> vars_;
    std::vector<Constraint> rows_;
    std::vector<Indicator> indicators_;
    bool hasObjective_ = false;
    Sense sense_ = Sense::Minimize;
    std::vector<std::pair<std::size_t, double>> objective_;
};

struct SolveLimits {
    double timeSeconds = std::numeric_limits<double>::infinity();
    double mipGap = 0.0;
    // Strict rows: feasible iff the maximised shared slack exceeds this.
    double strictEpsilon = kStrictEpsilon;
    // Minimum shared slack imposed on strict rows of systems that carry their own objective.
    double strictFloor = 1e-7;
    // Path prefix for an LP text dump of every solved system (empty: none).
    std::string dumpPath;
    // Optional MIP start, one value per variable of the system.
    std::vector<double> mipStart;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, Unbounded, Unknown };

const char* status_name(SolveStatus s);

struct SolveOutcome {
    SolveStatus status = SolveStatus::Unknown;
    std::vector<double> values;  // empty unless a solution is available
    std::optional<double> objective;
    std::optional<double> slack;  // maximised strict slack
    double gap = 0.0;
    bool timedOut = false;
    std::string reason;

    bool has_solution() const { return !values.empty(); }
};

class SolverBackend {
public:
    virtual ~SolverBackend() = default;
    virtual std::string name() const = 0;
    virtual SolveOutcome solve(const LinSystem& system, const SolveLimits& limits) const = 0;
};

// Backend selected by name; empty selects $FARKAS_SOLVER, defaulting to "highs".
std::shared_ptr<const SolverBackend> make_solver(const std::string& name = "");

SolveOutcome solve(const LinSystem& system, const SolveLimits& limits = {});

enum class CheckMode { Tolerance, Exact };

struct Violation {
    std::string what;  // constraint or variable name
    double residual;   // amount by which the condition fails
};

struct CheckResult {
    bool ok = true;
    std::vector<Violation> violations;
};

struct CheckOptions {
    CheckMode mode = CheckMode::Tolerance;
    double tolerance = kCheckTolerance;
    double strictEpsilon = kStrictEpsilon;
};

// Re-evaluates every row and bound; indicators and integrality included.
CheckResult check_assignment(const LinSystem& system, const std::vector<Rational>& values, const CheckOptions& options = {});

std::vector<Rational> to_rationals(const std::vector<double>& values);

// CPLEX-style LP text.
void write_lp(const LinSystem& system, std::ostream& out);

}  // namespace farkas
