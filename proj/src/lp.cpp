#include "farkas/lp.hpp"

#include "farkas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>

namespace farkas {

std::size_t LinSystem::add_var(std::string name, std::optional<Rational> lower, std::optional<Rational> upper,
                               VarType type) {
    vars_.push_back({std::move(name), std::move(lower), std::move(upper), type});
    return vars_.size() - 1;
}

std::size_t LinSystem::add_binary(std::string name) {
    return add_var(std::move(name), Rational(0), Rational(1), VarType::Binary);
}

std::size_t LinSystem::add_constraint(std::string name, LinExpr coeffs, Relation rel, Rational rhs, bool strict) {
    for (const auto& [v, c] : coeffs) {
        if (v >= vars_.size()) throw Error(ErrorCode::ShapeMismatch, "constraint '" + name + "' uses an undeclared variable");
    }
    if (strict && rel == Relation::Eq) throw Error(ErrorCode::ShapeMismatch, "strict equality in '" + name + "'");
    // Merge duplicate variables and drop zeros.
    std::sort(coeffs.begin(), coeffs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    LinExpr merged;
    for (auto& [v, c] : coeffs) {
        if (!merged.empty() && merged.back().first == v) {
            merged.back().second += c;
        } else {
            merged.emplace_back(v, std::move(c));
        }
    }
    std::erase_if(merged, [](const auto& e) { return e.second == 0; });
    rows_.push_back({std::move(name), std::move(merged), rel, std::move(rhs), strict});
    return rows_.size() - 1;
}

void LinSystem::add_indicator(std::size_t binary, std::size_t var, std::optional<double> bound) {
    if (binary >= vars_.size() || var >= vars_.size() || vars_[binary].type != VarType::Binary) {
        throw Error(ErrorCode::ShapeMismatch, "malformed indicator");
    }
    indicators_.push_back({binary, var, bound});
}

void LinSystem::set_objective(Sense sense, std::vector<std::pair<std::size_t, double>> coeffs) {
    hasObjective_ = true;
    sense_ = sense;
    objective_ = std::move(coeffs);
}

bool LinSystem::has_strict() const {
    return std::any_of(rows_.begin(), rows_.end(), [](const Constraint& c) { return c.strict; });
}

bool LinSystem::has_integers() const {
    return std::any_of(vars_.begin(), vars_.end(), [](const Variable& v) { return v.type == VarType::Binary; });
}

std::optional<std::size_t> LinSystem::find_var(const std::string& name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i].name == name) return i;
    }
    return std::nullopt;
}

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Feasible: return "feasible";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::Unknown: return "unknown";
    }
    return "?";
}

std::unique_ptr<SolverBackend> make_highs_backend();

std::shared_ptr<const SolverBackend> make_solver(const std::string& name) {
    std::string chosen = name;
    if (chosen.empty()) {
        const char* env = std::getenv("FARKAS_SOLVER");
        chosen = env && *env ? env : "highs";
    }
    std::transform(chosen.begin(), chosen.end(), chosen.begin(), [](unsigned char c) { return std::tolower(c); });
    if (chosen == "highs") return make_highs_backend();
    throw Error(ErrorCode::BackendUnavailable, "no solver backend named '" + chosen + "'");
}

SolveOutcome solve(const LinSystem& system, const SolveLimits& limits) { return make_solver()->solve(system, limits); }

std::vector<Rational> to_rationals(const std::vector<double>& values) {
    std::vector<Rational> out;
    out.reserve(values.size());
    for (double v : values) out.emplace_back(v);
    return out;
}

CheckResult check_assignment(const LinSystem& system, const std::vector<Rational>& values, const CheckOptions& options) {
    CheckResult result;
    if (values.size() != system.num_vars()) {
        throw Error(ErrorCode::ShapeMismatch, "assignment has " + std::to_string(values.size()) + " entries, system has " +
                                                  std::to_string(system.num_vars()) + " variables");
    }
    const bool exact = options.mode == CheckMode::Exact;
    const Rational tol = exact ? Rational(0) : Rational(options.tolerance);
    const Rational strictMargin = exact ? Rational(0) : Rational(options.strictEpsilon);

    // excess > 0 means "need excess <= tol"; strict rows need -excess >= margin (> 0 in exact mode).
    auto fail = [&](const std::string& what, const Rational& amount) {
        result.ok = false;
        result.violations.push_back({what, amount.get_d()});
    };
    auto check_le = [&](const std::string& what, const Rational& excess, bool strict) {
        if (strict) {
            Rational slack = -excess;
            if (exact ? slack <= 0 : slack < strictMargin) fail(what, excess);
        } else if (excess > tol) {
            fail(what, excess);
        }
    };

    for (std::size_t i = 0; i < system.num_vars(); ++i) {
        const auto& v = system.vars()[i];
        if (v.lower) check_le(v.name + " >= lower", *v.lower - values[i], false);
        if (v.upper) check_le(v.name + " <= upper", values[i] - *v.upper, false);
        if (v.type == VarType::Binary) {
            Rational d0 = abs(values[i]), d1 = abs(values[i] - 1);
            Rational dist = d0 < d1 ? d0 : d1;
            if (dist > tol) fail(v.name + " integral", dist);
        }
    }
    for (const auto& row : system.constraints()) {
        Rational lhs;
        for (const auto& [v, c] : row.coeffs) lhs += c * values[v];
        Rational diff = lhs - row.rhs;
        switch (row.rel) {
            case Relation::Le: check_le(row.name, diff, row.strict); break;
            case Relation::Ge: check_le(row.name, -diff, row.strict); break;
            case Relation::Eq:
                if (abs(diff) > tol) fail(row.name, abs(diff));
                break;
        }
    }
    for (const auto& ind : system.indicators()) {
        if (abs(values[ind.binary]) <= tol && abs(values[ind.var]) > tol) {
            fail(system.vars()[ind.var].name + " indicator", abs(values[ind.var]));
        }
    }
    return result;
}

namespace {

void write_expr(std::ostream& out, const LinSystem& system, const std::vector<std::pair<std::size_t, double>>& terms) {
    if (terms.empty()) {
        out << " 0";
        return;
    }
    for (const auto& [v, c] : terms) {
        out << (c < 0 ? " - " : " + ") << std::abs(c) << ' ' << system.vars()[v].name;
    }
}

}  // namespace

void write_lp(const LinSystem& system, std::ostream& out) {
    out.precision(17);
    out << (system.has_objective() && system.sense() == Sense::Maximize ? "Maximize" : "Minimize") << "\n obj:";
    write_expr(out, system, system.has_objective() ? system.objective() : std::vector<std::pair<std::size_t, double>>{});
    out << "\nSubject To\n";
    for (const auto& row : system.constraints()) {
        std::vector<std::pair<std::size_t, double>> terms;
        for (const auto& [v, c] : row.coeffs) terms.emplace_back(v, c.get_d());
        out << ' ' << row.name << ':';
        write_expr(out, system, terms);
        const char* rel = row.rel == Relation::Eq ? "=" : row.rel == Relation::Le ? (row.strict ? "<" : "<=")
                                                                                  : (row.strict ? ">" : ">=");
        out << ' ' << rel << ' ' << row.rhs.get_d() << '\n';
    }
    for (const auto& ind : system.indicators()) {
        out << " ind_" << system.vars()[ind.var].name << ": " << system.vars()[ind.binary].name << " = 0 -> "
            << system.vars()[ind.var].name << " = 0\n";
    }
    out << "Bounds\n";
    for (const auto& v : system.vars()) {
        if (v.type == VarType::Binary) continue;
        out << ' ';
        if (v.lower) out << v.lower->get_d(); else out << "-inf";
        out << " <= " << v.name << " <= ";
        if (v.upper) out << v.upper->get_d(); else out << "+inf";
        out << '\n';
    }
    bool anyBinary = false;
    for (const auto& v : system.vars()) {
        if (v.type != VarType::Binary) continue;
        if (!anyBinary) out << "Binaries\n";
        anyBinary = true;
        out << ' ' << v.name << '\n';
    }
    out << "End\n";
}

}  // namespace farkas
