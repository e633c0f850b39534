#include "farkas/errors.hpp"
#include "farkas/lp.hpp"

#include <Highs.h>

#include <cmath>
#include <fstream>

namespace farkas {

namespace {

struct Lowered {
    std::vector<double> cost, colLower, colUpper, rowLower, rowUpper;
    std::vector<HighsInt> start{0}, index;
    std::vector<double> value;
    std::vector<HighsInt> integrality;
    bool anyInteger = false;
    HighsInt slackCol = -1;

    void add_row(const std::vector<std::pair<HighsInt, double>>& terms, double lo, double hi) {
        for (const auto& [c, v] : terms) {
            index.push_back(c);
            value.push_back(v);
        }
        start.push_back(static_cast<HighsInt>(index.size()));
        rowLower.push_back(lo);
        rowUpper.push_back(hi);
    }
};

Lowered lower_system(const LinSystem& sys, double slackLower) {
    Lowered m;
    const HighsInt n = static_cast<HighsInt>(sys.num_vars());
    for (const auto& v : sys.vars()) {
        m.colLower.push_back(v.lower ? v.lower->get_d() : -kHighsInf);
        m.colUpper.push_back(v.upper ? v.upper->get_d() : kHighsInf);
        bool integer = v.type == VarType::Binary;
        m.integrality.push_back(integer ? 1 : 0);
        m.anyInteger = m.anyInteger || integer;
    }
    m.cost.assign(n, 0.0);
    if (sys.has_objective()) {
        for (const auto& [v, c] : sys.objective()) m.cost[v] += c;
    }
    if (sys.has_strict()) {
        m.slackCol = n;
        m.colLower.push_back(slackLower);
        m.colUpper.push_back(1.0);
        m.cost.push_back(0.0);
        m.integrality.push_back(0);
    }
    for (const auto& row : sys.constraints()) {
        std::vector<std::pair<HighsInt, double>> terms;
        for (const auto& [v, c] : row.coeffs) terms.emplace_back(static_cast<HighsInt>(v), c.get_d());
        double rhs = row.rhs.get_d();
        switch (row.rel) {
            case Relation::Le:
                if (row.strict) terms.emplace_back(m.slackCol, 1.0);
                m.add_row(terms, -kHighsInf, rhs);
                break;
            case Relation::Ge:
                if (row.strict) terms.emplace_back(m.slackCol, -1.0);
                m.add_row(terms, rhs, kHighsInf);
                break;
            case Relation::Eq:
                m.add_row(terms, rhs, rhs);
                break;
        }
    }
    for (const auto& ind : sys.indicators()) {
        const auto& var = sys.vars()[ind.var];
        double up = ind.bound ? *ind.bound : (var.upper ? var.upper->get_d() : kHighsInf);
        double lo = ind.bound ? -*ind.bound : (var.lower ? var.lower->get_d() : -kHighsInf);
        if (var.lower && var.lower->get_d() >= 0) lo = 0;
        if (!std::isfinite(up) || !std::isfinite(lo)) {
            throw Error(ErrorCode::BackendUnavailable,
                        "indicator on '" + var.name + "' needs a finite bound for big-M lowering");
        }
        auto b = static_cast<HighsInt>(ind.binary);
        auto x = static_cast<HighsInt>(ind.var);
        if (up > 0) m.add_row({{x, 1.0}, {b, -up}}, -kHighsInf, 0.0);
        if (lo < 0) m.add_row({{x, 1.0}, {b, -lo}}, 0.0, kHighsInf);
    }
    return m;
}

class HighsBackend final : public SolverBackend {
public:
    std::string name() const override { return "highs"; }

    SolveOutcome solve(const LinSystem& sys, const SolveLimits& limits) const override {
        if (!limits.dumpPath.empty()) {
            std::ofstream out(limits.dumpPath, std::ios::app);
            write_lp(sys, out);
        }
        const bool strict = sys.has_strict();
        const bool feasibilityOnly = !sys.has_objective();
        Lowered m = lower_system(sys, strict && !feasibilityOnly ? limits.strictFloor : 0.0);
        if (strict && feasibilityOnly) m.cost[m.slackCol] = 1.0;

        Highs highs;
        highs.setOptionValue("output_flag", false);
        highs.setOptionValue("threads", 1);
        if (std::isfinite(limits.timeSeconds)) highs.setOptionValue("time_limit", limits.timeSeconds);
        highs.setOptionValue("mip_rel_gap", limits.mipGap);
        highs.setOptionValue("primal_feasibility_tolerance", 1e-9);
        highs.setOptionValue("dual_feasibility_tolerance", 1e-9);
        highs.setOptionValue("mip_feasibility_tolerance", 1e-9);

        const auto numCol = static_cast<HighsInt>(m.colLower.size());
        const auto numRow = static_cast<HighsInt>(m.rowLower.size());
        ObjSense objSense = (strict && feasibilityOnly) || (sys.has_objective() && sys.sense() == Sense::Maximize)
                                ? ObjSense::kMaximize
                                : ObjSense::kMinimize;
        // An empty row set still needs a valid start array.
        HighsStatus st = highs.passModel(numCol, numRow, static_cast<HighsInt>(m.index.size()),
                                         static_cast<HighsInt>(MatrixFormat::kRowwise), static_cast<HighsInt>(objSense),
                                         0.0, m.cost.data(), m.colLower.data(), m.colUpper.data(), m.rowLower.data(),
                                         m.rowUpper.data(), m.start.data(), m.index.data(), m.value.data(),
                                         m.anyInteger ? m.integrality.data() : nullptr);
        if (st == HighsStatus::kError) throw Error(ErrorCode::BackendUnavailable, "HiGHS rejected the model");

        if (m.anyInteger && limits.mipStart.size() == sys.num_vars()) {
            HighsSolution start;
            start.col_value.assign(static_cast<std::size_t>(numCol), 0.0);
            std::copy(limits.mipStart.begin(), limits.mipStart.end(), start.col_value.begin());
            start.value_valid = true;
            highs.setSolution(start);
        }

        SolveOutcome out;
        highs.run();
        HighsModelStatus ms = highs.getModelStatus();
        if (ms == HighsModelStatus::kUnboundedOrInfeasible) {
            // Resolve the ambiguity without presolve.
            highs.setOptionValue("presolve", "off");
            highs.run();
            ms = highs.getModelStatus();
        }
        const HighsInfo& info = highs.getInfo();
        bool haveSolution = info.primal_solution_status == kSolutionStatusFeasible;
        switch (ms) {
            case HighsModelStatus::kOptimal: out.status = SolveStatus::Optimal; break;
            case HighsModelStatus::kInfeasible: out.status = SolveStatus::Infeasible; break;
            case HighsModelStatus::kUnbounded: out.status = SolveStatus::Unbounded; break;
            case HighsModelStatus::kUnboundedOrInfeasible:
                out.status = SolveStatus::Unknown;
                out.reason = "unbounded or infeasible";
                break;
            case HighsModelStatus::kTimeLimit:
            case HighsModelStatus::kIterationLimit:
            case HighsModelStatus::kSolutionLimit:
            case HighsModelStatus::kInterrupt:
                out.timedOut = true;
                out.status = haveSolution ? SolveStatus::Feasible : SolveStatus::Unknown;
                out.reason = highs.modelStatusToString(ms);
                break;
            default:
                out.status = SolveStatus::Unknown;
                out.reason = highs.modelStatusToString(ms);
                break;
        }
        if (haveSolution && out.status != SolveStatus::Infeasible) {
            const auto& col = highs.getSolution().col_value;
            out.values.assign(col.begin(), col.begin() + static_cast<long>(sys.num_vars()));
            // Snap into the declared bounds and integrality.
            for (std::size_t i = 0; i < sys.num_vars(); ++i) {
                const auto& v = sys.vars()[i];
                double& x = out.values[i];
                if (v.type == VarType::Binary) x = std::round(x);
                if (v.lower) x = std::max(x, v.lower->get_d());
                if (v.upper) x = std::min(x, v.upper->get_d());
            }
            out.objective = info.objective_function_value;
            if (m.anyInteger) out.gap = info.mip_gap;
            if (m.slackCol >= 0) out.slack = col[static_cast<std::size_t>(m.slackCol)];
        }
        if (strict && feasibilityOnly && out.status == SolveStatus::Optimal) {
            if (!out.slack || *out.slack <= limits.strictEpsilon) {
                out.status = SolveStatus::Infeasible;
                out.reason = "strict rows admit no positive slack";
                out.values.clear();
            }
            out.objective.reset();
        }
        return out;
    }
};

}  // namespace

std::unique_ptr<SolverBackend> make_highs_backend() { return std::make_unique<HighsBackend>(); }

}  // namespace farkas
