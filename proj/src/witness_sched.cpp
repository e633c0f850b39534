#include "farkas/witness_sched.hpp"

#include "farkas/errors.hpp"
#include "farkas/lp.hpp"
#include "farkas/reach_cert.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

namespace farkas {

namespace {

using Row = std::vector<std::pair<std::size_t, double>>;

// Finite Markov chain over abstract indices.
struct Chain {
    std::vector<Row> succ;
    std::vector<double> init;
    std::vector<StateId> base;  // index -> model state

    std::size_t size() const { return succ.size(); }
};

// Strongly connected components (iterative Tarjan) of the positive-probability graph.
std::pair<std::vector<std::size_t>, std::size_t> components(const std::vector<Row>& succ) {
    const std::size_t n = succ.size();
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, kNone), low(n, 0), comp(n, kNone);
    std::vector<bool> onStack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> call;
    std::size_t counter = 0, count = 0;
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != kNone) continue;
        call.emplace_back(root, 0);
        index[root] = low[root] = counter++;
        stack.push_back(root);
        onStack[root] = true;
        while (!call.empty()) {
            auto& [v, pos] = call.back();
            if (pos < succ[v].size()) {
                auto [w, p] = succ[v][pos++];
                if (p <= 0.0) continue;
                if (index[w] == kNone) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    onStack[w] = true;
                    call.emplace_back(w, 0);
                } else if (onStack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            const std::size_t done = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
            if (low[done] == index[done]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    onStack[w] = false;
                    comp[w] = count;
                } while (w != done);
                ++count;
            }
        }
    }
    return {comp, count};
}

// Membership in a bottom strongly connected component.
std::vector<bool> bottom_members(const std::vector<Row>& succ) {
    auto [comp, count] = components(succ);
    std::vector<bool> closed(count, true);
    for (std::size_t v = 0; v < succ.size(); ++v) {
        for (auto [w, p] : succ[v]) {
            if (p > 0.0 && comp[w] != comp[v]) closed[comp[v]] = false;
        }
    }
    std::vector<bool> out(succ.size());
    for (std::size_t v = 0; v < succ.size(); ++v) out[v] = closed[comp[v]];
    return out;
}

std::vector<bool> forward_reachable(const std::vector<Row>& succ, const std::vector<double>& init) {
    std::vector<bool> seen(succ.size(), false);
    std::vector<std::size_t> todo;
    for (std::size_t v = 0; v < init.size(); ++v) {
        if (init[v] > 0.0) {
            seen[v] = true;
            todo.push_back(v);
        }
    }
    while (!todo.empty()) {
        std::size_t v = todo.back();
        todo.pop_back();
        for (auto [w, p] : succ[v]) {
            if (p > 0.0 && !seen[w]) {
                seen[w] = true;
                todo.push_back(w);
            }
        }
    }
    return seen;
}

Eigen::VectorXd solve_sparse(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b) {
    if (A.rows() == 0) return Eigen::VectorXd();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "singular linear system");
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "linear solve failed");
    return x;
}

// Per-index probability of eventually entering the target indices.
std::vector<double> reach_probabilities(const Chain& ch, const std::vector<bool>& target) {
    const std::size_t n = ch.size();
    std::vector<std::vector<std::size_t>> pred(n);
    for (std::size_t v = 0; v < n; ++v) {
        for (auto [w, p] : ch.succ[v]) {
            if (p > 0.0) pred[w].push_back(v);
        }
    }
    std::vector<bool> canReach(target);
    std::vector<std::size_t> todo;
    for (std::size_t v = 0; v < n; ++v) {
        if (target[v]) todo.push_back(v);
    }
    while (!todo.empty()) {
        std::size_t w = todo.back();
        todo.pop_back();
        for (std::size_t v : pred[w]) {
            if (!canReach[v]) {
                canReach[v] = true;
                todo.push_back(v);
            }
        }
    }
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> idx(n, kNone);
    std::size_t m = 0;
    for (std::size_t v = 0; v < n; ++v) {
        if (canReach[v] && !target[v]) idx[v] = m++;
    }
    Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t v = 0; v < n; ++v) {
        if (idx[v] == kNone) continue;
        const auto i = static_cast<Eigen::Index>(idx[v]);
        trip.emplace_back(i, i, 1.0);
        for (auto [w, p] : ch.succ[v]) {
            if (target[w]) {
                b[i] += p;
            } else if (idx[w] != kNone) {
                trip.emplace_back(i, static_cast<Eigen::Index>(idx[w]), -p);
            }
        }
    }
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd x = solve_sparse(A, b);
    std::vector<double> out(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        if (target[v]) {
            out[v] = 1.0;
        } else if (idx[v] != kNone) {
            out[v] = std::clamp(x[static_cast<Eigen::Index>(idx[v])], 0.0, 1.0);
        }
    }
    return out;
}

double objective_value(const Chain& ch, const StateObjective& obj) {
    std::vector<bool> in(ch.size());
    for (std::size_t v = 0; v < ch.size(); ++v) in[v] = obj.set.at(ch.base[v]);
    std::vector<bool> target(ch.size());
    switch (obj.kind) {
        case StateObjective::Kind::Reach: target = in; break;
        case StateObjective::Kind::Invariant:
            for (std::size_t v = 0; v < ch.size(); ++v) target[v] = !in[v];
            break;
        case StateObjective::Kind::Persist: {
            // Bottom components inside the set.
            auto [comp, count] = components(ch.succ);
            std::vector<bool> good(count, true);
            auto bottom = bottom_members(ch.succ);
            for (std::size_t v = 0; v < ch.size(); ++v) {
                if (!bottom[v] || !in[v]) good[comp[v]] = false;
            }
            for (std::size_t v = 0; v < ch.size(); ++v) target[v] = good[comp[v]];
            break;
        }
    }
    auto x = reach_probabilities(ch, target);
    double value = 0.0;
    for (std::size_t v = 0; v < ch.size(); ++v) value += ch.init[v] * x[v];
    if (obj.kind == StateObjective::Kind::Invariant) value = 1.0 - value;
    return std::clamp(value, 0.0, 1.0);
}

void add_choice_row(Row& row, const Mdp& mdp, ChoiceId c, double weight,
                    const std::function<void(Row&, StateId, double)>& emit) {
    if (weight <= 0.0) return;
    for (const auto& t : mdp.choice(c).dist) emit(row, t.target, weight * t.p);
}

Chain memoryless_chain(const Mdp& mdp, const MemorylessScheduler& sched) {
    Chain ch;
    const std::size_t n = mdp.num_states();
    ch.succ.resize(n);
    ch.init = mdp.initial_vector();
    ch.base.resize(n);
    std::iota(ch.base.begin(), ch.base.end(), StateId{0});
    auto emit = [](Row& row, StateId t, double p) { row.emplace_back(t, p); };
    for (StateId s = 0; s < n; ++s) {
        if (mdp.num_choices(s) == 0) {
            ch.succ[s].emplace_back(s, 1.0);
            continue;
        }
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) add_choice_row(ch.succ[s], mdp, c, sched[c], emit);
    }
    return ch;
}

Chain fmc_chain(const Mdp& mdp, const FmcScheduler& sched) {
    Chain ch;
    const std::size_t n = mdp.num_states();
    ch.succ.resize(2 * n);
    ch.init.assign(2 * n, 0.0);
    ch.base.resize(2 * n);
    for (StateId s = 0; s < n; ++s) ch.base[2 * s] = ch.base[2 * s + 1] = s;
    for (const auto& [s, p] : mdp.initial()) {
        for (std::size_t m = 0; m < 2; ++m) ch.init[2 * s + m] += p.get_d() * sched.initialMemory[s][m];
    }
    for (StateId s = 0; s < n; ++s) {
        for (std::size_t m = 0; m < 2; ++m) {
            Row& row = ch.succ[2 * s + m];
            if (mdp.num_choices(s) == 0) {
                row.emplace_back(2 * s + m, 1.0);
                continue;
            }
            for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
                auto emit = [&](Row& r, StateId t, double p) {
                    auto upd = sched.update(c, t, m);
                    for (std::size_t m2 = 0; m2 < 2; ++m2) {
                        if (upd[m2] > 0.0) r.emplace_back(2 * t + m2, p * upd[m2]);
                    }
                };
                add_choice_row(row, mdp, c, sched.next[m][c], emit);
            }
        }
    }
    return ch;
}

void check_stochastic_rows(const Mdp& mdp, const std::vector<double>& prob, double tol, const std::string& what) {
    if (prob.size() != mdp.num_choices()) throw Error(ErrorCode::InvalidModel, what + ": scheduler size mismatch");
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (mdp.num_choices(s) == 0) continue;
        double sum = 0.0;
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            if (!(prob[c] >= -tol) || !std::isfinite(prob[c])) {
                throw Error(ErrorCode::InvalidModel, what + ": negative probability at " + mdp.choice_label(c));
            }
            sum += prob[c];
        }
        if (std::abs(sum - 1.0) > tol) {
            throw Error(ErrorCode::InvalidModel, what + ": row of " + mdp.state_name(s) + " sums to " + std::to_string(sum));
        }
    }
}

void check_distribution(const std::vector<double>& d, std::size_t n, const char* what) {
    if (d.size() != n) throw Error(ErrorCode::NotDistribution, std::string(what) + " has the wrong size");
    double sum = 0.0;
    for (double v : d) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::NotDistribution, std::string(what) + " has negative entries");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::NotDistribution, std::string(what) + " does not sum to one");
}

// Quotient choice carrying each original non-internal choice.
std::vector<std::optional<ChoiceId>> quotient_choice_of(const Mdp& mdp, const Quotient& quo) {
    std::vector<std::optional<ChoiceId>> out(mdp.num_choices());
    for (ChoiceId qc = 0; qc < quo.origin.size(); ++qc) {
        if (quo.origin[qc]) out[*quo.origin[qc]] = qc;
    }
    return out;
}

std::optional<ChoiceId> tau_choice(const Quotient& quo, std::size_t mec) {
    return quo.mdp.find_choice(quo.mecState[mec], quo.tauAction);
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    return out;
}

}  // namespace

std::array<double, 2> FmcScheduler::update(ChoiceId c, StateId target, std::size_t m) const {
    if (m == 0 && mecOf[target] >= 0 && choiceMec[c] != mecOf[target]) {
        return {entryLeave[target], 1.0 - entryLeave[target]};
    }
    return m == 0 ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
}

void validate_scheduler(const Mdp& mdp, const MemorylessScheduler& sched, double tol) {
    check_stochastic_rows(mdp, sched.prob, tol, "memoryless scheduler");
}

void validate_scheduler(const Mdp& mdp, const FmcScheduler& sched, double tol) {
    const std::size_t n = mdp.num_states();
    for (std::size_t m = 0; m < 2; ++m) check_stochastic_rows(mdp, sched.next[m], tol, "memory m" + std::to_string(m));
    if (sched.initialMemory.size() != n || sched.entryLeave.size() != n || sched.mecOf.size() != n ||
        sched.choiceMec.size() != mdp.num_choices()) {
        throw Error(ErrorCode::InvalidModel, "scheduler does not fit the model");
    }
    for (StateId s = 0; s < n; ++s) {
        const auto& d = sched.initialMemory[s];
        if (d[0] < -tol || d[1] < -tol || std::abs(d[0] + d[1] - 1.0) > tol) {
            throw Error(ErrorCode::InvalidModel, "initial memory of " + mdp.state_name(s) + " is not a distribution");
        }
        if (sched.entryLeave[s] < -tol || sched.entryLeave[s] > 1.0 + tol) {
            throw Error(ErrorCode::InvalidModel, "memory flip of " + mdp.state_name(s) + " is not a probability");
        }
    }
}

MemorylessScheduler memoryless_from_flow(const Mdp& mdp, const std::vector<double>& y) {
    if (y.size() != mdp.num_choices()) throw Error(ErrorCode::ShapeMismatch, "flow does not match the model's choices");
    MemorylessScheduler out;
    out.prob.assign(mdp.num_choices(), 0.0);
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (mdp.num_choices(s) == 0) continue;
        double sum = 0.0;
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) sum += std::max(y[c], 0.0);
        if (sum <= 0.0) {
            out.prob[mdp.choice_begin(s)] = 1.0;
            continue;
        }
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) out.prob[c] = std::max(y[c], 0.0) / sum;
    }
    return out;
}

MemorylessScheduler memoryless_from_flow(const Mdp& mdp, const std::vector<Rational>& y) {
    std::vector<double> d(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) d[i] = y[i].get_d();
    return memoryless_from_flow(mdp, d);
}

MemorylessScheduler remap_scheduler(const Mdp& from, const MemorylessScheduler& sched, const Mdp& to) {
    MemorylessScheduler out;
    out.prob.assign(to.num_choices(), 0.0);
    for (StateId s = 0; s < to.num_states(); ++s) {
        if (to.num_choices(s) == 0) continue;
        auto fs = from.find_state(to.state_name(s));
        bool any = false;
        if (fs && from.num_choices(*fs) > 0) {
            for (ChoiceId c = to.choice_begin(s); c < to.choice_end(s); ++c) {
                if (auto fc = from.find_choice(*fs, to.choice(c).action)) {
                    out.prob[c] = sched[*fc];
                    any = any || sched[*fc] > 0.0;
                }
            }
        }
        if (!any) out.prob[to.choice_begin(s)] = 1.0;
    }
    return out;
}

ForallOrWitness forall_or_witness(const ReachForm& form, const std::vector<double>& z, const Query& q, double tol) {
    validate_reach_query(form, q);
    if (q.quantifier != Quantifier::Forall || q.connective != Connective::Or) {
        throw Error(ErrorCode::UnsupportedQuery, "separating schedulers need a (forall,or) query");
    }
    if (z.size() != form.k()) throw Error(ErrorCode::ShapeMismatch, "weight vector does not match the goal count");
    const Mdp& m = form.mdp;
    const std::size_t n = m.num_states();
    ForallOrWitness out;
    out.maximize = !is_lower(q.predicates.front().op);

    std::vector<double> w(n, 0.0);
    for (StateId s = 0; s < n; ++s) {
        for (std::size_t i = 0; i < form.k(); ++i) {
            if (form.goals[i][s]) w[s] += z[i];
        }
    }
    auto terminal = [&](StateId s) { return form.target[s] || m.num_choices(s) == 0; };

    // States where the minimiser avoids all positive weight surely.
    std::vector<bool> zero(n, false);
    if (!out.maximize) {
        for (StateId s = 0; s < n; ++s) zero[s] = terminal(s) ? w[s] <= 0.0 : true;
        for (bool changed = true; changed;) {
            changed = false;
            for (StateId s = 0; s < n; ++s) {
                if (!zero[s] || terminal(s)) continue;
                bool keep = false;
                for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s) && !keep; ++c) {
                    keep = std::all_of(m.choice(c).dist.begin(), m.choice(c).dist.end(),
                                       [&](const Transition& t) { return zero[t.target]; });
                }
                if (!keep) {
                    zero[s] = false;
                    changed = true;
                }
            }
        }
    }

    LinSystem sys;
    std::vector<std::size_t> v(n, 0);
    std::vector<std::pair<std::size_t, double>> obj;
    for (StateId s = 0; s < n; ++s) {
        if (terminal(s)) continue;
        std::optional<Rational> upper;
        if (zero[s]) upper = Rational(0);
        v[s] = sys.add_var("v[" + m.state_name(s) + "]", Rational(0), upper);
        obj.emplace_back(v[s], 1.0);
    }
    for (ChoiceId c = 0; c < m.num_choices(); ++c) {
        StateId s = m.choice(c).state;
        if (terminal(s)) continue;
        LinExpr row;
        std::map<std::size_t, Rational> coeff;
        coeff[v[s]] += 1;
        Rational rhs;
        for (const auto& t : m.choice(c).dist) {
            if (terminal(t.target)) {
                rhs += t.prob * Rational(w[t.target]);
            } else {
                coeff[v[t.target]] -= t.prob;
            }
        }
        for (auto& [var, val] : coeff) {
            if (val != 0) row.emplace_back(var, val);
        }
        sys.add_constraint("pair[" + m.choice_label(c) + "]", std::move(row),
                           out.maximize ? Relation::Ge : Relation::Le, rhs);
    }
    sys.set_objective(out.maximize ? Sense::Minimize : Sense::Maximize, obj);
    SolveOutcome res = solve(sys);
    if (!res.has_solution()) throw Error(ErrorCode::SolverUnknown, "weighted reachability LP not solved");

    std::vector<double> val(n, 0.0);
    for (StateId s = 0; s < n; ++s) val[s] = terminal(s) ? w[s] : res.values[v[s]];
    auto q_of = [&](ChoiceId c) {
        double acc = 0.0;
        for (const auto& t : m.choice(c).dist) acc += t.p * val[t.target];
        return acc;
    };
    out.scheduler.prob.assign(m.num_choices(), 0.0);
    std::vector<bool> decided(n, false);
    constexpr double kTie = 1e-9;
    for (StateId s = 0; s < n; ++s) {
        if (terminal(s) || m.num_choices(s) == 0) continue;
        ChoiceId best = m.choice_begin(s);
        if (zero[s]) {
            for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s); ++c) {
                if (std::all_of(m.choice(c).dist.begin(), m.choice(c).dist.end(),
                                [&](const Transition& t) { return zero[t.target]; })) {
                    best = c;
                    break;
                }
            }
            out.scheduler.prob[best] = 1.0;
            decided[s] = true;
            continue;
        }
        if (out.maximize && val[s] > kTie) continue;  // decided by the attractor below
        for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s); ++c) {
            if (out.maximize ? q_of(c) > q_of(best) : q_of(c) < q_of(best)) best = c;
        }
        out.scheduler.prob[best] = 1.0;
        decided[s] = true;
    }
    if (out.maximize) {
        // Among value-attaining choices, prefer ones that make progress towards positive weight.
        std::vector<bool> reached(n, false);
        for (StateId s = 0; s < n; ++s) reached[s] = terminal(s) && w[s] > 0.0;
        for (bool changed = true; changed;) {
            changed = false;
            for (StateId s = 0; s < n; ++s) {
                if (decided[s] || terminal(s)) continue;
                for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s); ++c) {
                    if (q_of(c) < val[s] - kTie * std::max(1.0, std::abs(val[s]))) continue;
                    bool progress = std::any_of(m.choice(c).dist.begin(), m.choice(c).dist.end(),
                                                [&](const Transition& t) { return reached[t.target]; });
                    if (!progress) continue;
                    out.scheduler.prob[c] = 1.0;
                    decided[s] = reached[s] = changed = true;
                    break;
                }
            }
        }
        for (StateId s = 0; s < n; ++s) {
            if (decided[s] || terminal(s)) continue;
            ChoiceId best = m.choice_begin(s);
            for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s); ++c) {
                if (q_of(c) > q_of(best)) best = c;
            }
            out.scheduler.prob[best] = 1.0;
        }
    }

    auto probs = evaluate_scheduler(m, out.scheduler, goal_objectives(form));
    for (std::size_t i = 0; i < form.k(); ++i) {
        out.gamma += z[i] * probs[i];
        out.threshold += z[i] * q.predicates[i].bound.get_d();
    }
    bool separated = out.maximize ? out.gamma <= out.threshold + tol : out.gamma >= out.threshold - tol;
    if (!separated) {
        throw Error(ErrorCode::SeparationFailed, "extremal weighted value " + fmt(out.gamma) + " crosses z·λ = " +
                                                     fmt(out.threshold));
    }
    return out;
}

ForallOrWitness forall_or_witness(const ReachForm& form, const Certificate& cert, double tol) {
    if (cert.variant != CertVariant::ForallOr) throw Error(ErrorCode::ShapeMismatch, "not a (forall,or) certificate");
    const auto& zr = cert.at("z");
    std::vector<double> z(zr.size());
    for (std::size_t i = 0; i < zr.size(); ++i) z[i] = zr[i].get_d();
    return forall_or_witness(form, z, cert.query, tol);
}

std::vector<double> expected_frequencies(const Mdp& mdp, const MemorylessScheduler& sched, bool transientOnly) {
    validate_scheduler(mdp, sched);
    Chain ch = memoryless_chain(mdp, sched);
    const std::size_t n = mdp.num_states();
    auto bottom = bottom_members(ch.succ);
    auto reachable = forward_reachable(ch.succ, ch.init);
    if (!transientOnly) {
        for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
            StateId s = mdp.choice(c).state;
            if (bottom[s] && reachable[s] && sched[c] > 0.0) {
                throw Error(ErrorCode::Divergent, "recurrent pair " + mdp.choice_label(c) + " is played infinitely often");
            }
        }
    }
    // x(I - P_TT) = δ_T over transient states.
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> idx(n, kNone);
    std::size_t m = 0;
    for (StateId s = 0; s < n; ++s) {
        if (!bottom[s]) idx[s] = m++;
    }
    Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (StateId s = 0; s < n; ++s) {
        if (idx[s] == kNone) continue;
        const auto i = static_cast<Eigen::Index>(idx[s]);
        trip.emplace_back(i, i, 1.0);
        b[i] = ch.init[s];
        for (auto [t, p] : ch.succ[s]) {
            if (idx[t] != kNone) trip.emplace_back(static_cast<Eigen::Index>(idx[t]), i, -p);
        }
    }
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd x = solve_sparse(A, b);
    std::vector<double> freq(mdp.num_choices(), 0.0);
    for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
        StateId s = mdp.choice(c).state;
        if (idx[s] != kNone) freq[c] = std::max(0.0, x[static_cast<Eigen::Index>(idx[s])]) * sched[c];
    }
    return freq;
}

std::vector<double> exit_distribution(const DenseMatrix& P, const std::vector<double>& delta,
                                      const std::vector<double>& lambda) {
    const auto n = static_cast<Eigen::Index>(P.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) -= (1.0 - lambda[i]) * P[i][j];
    }
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = delta[i];
    // Visits v solve v A = δ.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A.transpose());
    if (!lu.isInvertible()) throw Error(ErrorCode::NumericalFailure, "exit rates never leave the chain");
    Eigen::VectorXd v = lu.solve(d);
    std::vector<double> out(P.size());
    for (Eigen::Index i = 0; i < n; ++i) out[i] = v[i] * lambda[i];
    return out;
}

std::vector<double> solve_exit_rates(const DenseMatrix& P, const std::vector<double>& delta,
                                     const std::vector<double>& mu) {
    const std::size_t n = P.size();
    if (n == 0) throw Error(ErrorCode::NotDistribution, "empty chain");
    for (const auto& row : P) check_distribution(row, n, "transition row");
    check_distribution(delta, n, "initial distribution");
    check_distribution(mu, n, "exit distribution");
    std::vector<Row> succ(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (P[i][j] > 0.0) succ[i].emplace_back(j, P[i][j]);
        }
    }
    if (components(succ).second != 1) throw Error(ErrorCode::NotStronglyConnected, "chain is not strongly connected");

    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd Pm(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) Pm(i, j) = P[i][j];
    }
    Eigen::RowVectorXd d(N), m(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        d[i] = delta[i];
        m[i] = mu[i];
    }
    // x(I - P) = δ - μP has a one-dimensional solution space x0 + rγ; adding 1·1ᵀ picks Σx0 = 0.
    Eigen::MatrixXd M = (Eigen::MatrixXd::Identity(N, N) - Pm).transpose();
    Eigen::MatrixXd K = M + Eigen::MatrixXd::Ones(N, N);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) throw Error(ErrorCode::NumericalFailure, "frequency system is singular");
    Eigen::VectorXd x0 = lu.solve((d - m * Pm).transpose());
    Eigen::VectorXd gamma = lu.solve(Eigen::VectorXd::Ones(N));

    double r = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < N; ++i) {
        if (mu[i] > 0.0) r = std::max(r, (1.0 + mu[i] - x0[i]) / gamma[i]);
    }
    std::vector<double> lambda(n, 0.0);
    for (Eigen::Index i = 0; i < N; ++i) {
        if (mu[i] > 0.0) lambda[i] = std::clamp(mu[i] / (x0[i] + r * gamma[i]), 0.0, 1.0);
    }
    auto check = exit_distribution(P, delta, lambda);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(check[i] - mu[i]) > kExitRateTolerance) {
            throw Error(ErrorCode::NumericalFailure, "exit rates miss the target distribution by " +
                                                         fmt(std::abs(check[i] - mu[i])));
        }
    }
    return lambda;
}

std::vector<double> solve_exit_rates(const Mdp& dtmc, const std::vector<double>& delta, const std::vector<double>& mu) {
    if (!dtmc.is_dtmc()) throw Error(ErrorCode::InvalidModel, "exit rates need a Markov chain");
    const std::size_t n = dtmc.num_states();
    DenseMatrix P(n, std::vector<double>(n, 0.0));
    for (StateId s = 0; s < n; ++s) {
        if (dtmc.num_choices(s) == 0) throw Error(ErrorCode::NotStronglyConnected, "chain has a deadlock");
        for (const auto& t : dtmc.choice(dtmc.choice_begin(s)).dist) P[s][t.target] += t.p;
    }
    return solve_exit_rates(P, delta, mu);
}

MemorylessScheduler stay_scheduler(const Mdp& mdp, const Mec& mec) {
    MemorylessScheduler out;
    out.prob.assign(mdp.num_choices(), 0.0);
    std::vector<bool> internal(mdp.num_choices(), false);
    for (ChoiceId c : mec.choices) internal[c] = true;
    for (StateId s : mec.states) {
        std::size_t count = 0;
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) count += internal[c];
        if (count == 0) throw Error(ErrorCode::InconsistentMec, "MEC state " + mdp.state_name(s) + " has no internal action");
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            if (internal[c]) out.prob[c] = 1.0 / static_cast<double>(count);
        }
    }
    return out;
}

MemorylessScheduler leave_scheduler(const Mdp& mdp, const Quotient& quo, std::size_t mec,
                                    const MemorylessScheduler& sigmaHat, const std::vector<double>& freq) {
    const Mec& C = quo.mecs.at(mec);
    auto tau = tau_choice(quo, mec);
    const double p = 1.0 - (tau ? sigmaHat[*tau] : 0.0);
    if (p <= 0.0) throw Error(ErrorCode::UnsupportedQuery, "scheduler never leaves the MEC");
    const auto toQuot = quotient_choice_of(mdp, quo);
    const int mi = static_cast<int>(mec);
    const std::size_t n = C.states.size();
    std::map<StateId, std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) pos[C.states[i]] = i;

    // Entry mass per state of C.
    std::vector<double> entry(n, 0.0);
    for (const auto& [s, pr] : mdp.initial()) {
        if (quo.mecOf[s] == mi) entry[pos[s]] += pr.get_d();
    }
    for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
        if (quo.choiceMec[c] >= 0 || !toQuot[c]) continue;
        const double f = freq[*toQuot[c]];
        if (f <= 0.0) continue;
        for (const auto& t : mdp.choice(c).dist) {
            if (quo.mecOf[t.target] == mi) entry[pos[t.target]] += f * t.p;
        }
    }
    const double entryTotal = std::accumulate(entry.begin(), entry.end(), 0.0);
    if (entryTotal <= 0.0) throw Error(ErrorCode::NoEntryMass, "MEC of " + mdp.state_name(C.states.front()) + " is never entered");
    std::vector<double> delta(n);
    for (std::size_t i = 0; i < n; ++i) delta[i] = entry[i] / entryTotal;

    // Exit frequencies per exit pair and per state.
    std::vector<double> exitFreq(mdp.num_choices(), 0.0), stateExit(n, 0.0);
    double exitTotal = 0.0;
    for (ChoiceId c : quo.exitPairs[mec]) {
        exitFreq[c] = freq[*toQuot[c]];
        stateExit[pos[mdp.choice(c).state]] += exitFreq[c];
        exitTotal += exitFreq[c];
    }
    if (exitTotal <= 0.0) throw Error(ErrorCode::NoEntryMass, "MEC of " + mdp.state_name(C.states.front()) + " is never left");
    std::vector<double> mu(n);
    for (std::size_t i = 0; i < n; ++i) mu[i] = stateExit[i] / exitTotal;

    MemorylessScheduler base = stay_scheduler(mdp, C);
    DenseMatrix P(n, std::vector<double>(n, 0.0));
    for (ChoiceId c : C.choices) {
        const std::size_t i = pos[mdp.choice(c).state];
        for (const auto& t : mdp.choice(c).dist) P[i][pos.at(t.target)] += base[c] * t.p;
    }
    auto lambda = solve_exit_rates(P, delta, mu);

    MemorylessScheduler out;
    out.prob.assign(mdp.num_choices(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        StateId s = C.states[i];
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            if (quo.choiceMec[c] == mi) {
                out.prob[c] = (1.0 - lambda[i]) * base[c];
            } else if (lambda[i] > 0.0) {
                out.prob[c] = lambda[i] * exitFreq[c] / stateExit[i];
            } else {
                out.prob[c] = base[c];
            }
        }
    }

    // Local check: playing σ_leave from δ, each exit pair is taken with its share of the exit frequency.
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(N, N);
    for (ChoiceId c : C.choices) {
        const auto i = static_cast<Eigen::Index>(pos[mdp.choice(c).state]);
        for (const auto& t : mdp.choice(c).dist) A(i, static_cast<Eigen::Index>(pos.at(t.target))) -= out.prob[c] * t.p;
    }
    Eigen::VectorXd d(N);
    for (Eigen::Index i = 0; i < N; ++i) d[i] = delta[i];
    Eigen::VectorXd visits = A.transpose().fullPivLu().solve(d);
    for (ChoiceId c : quo.exitPairs[mec]) {
        const double got = visits[static_cast<Eigen::Index>(pos[mdp.choice(c).state])] * out.prob[c];
        if (std::abs(got - exitFreq[c] / exitTotal) > 1e-8) {
            throw Error(ErrorCode::NumericalFailure, "leaving scheduler misses the exit distribution at " +
                                                         mdp.choice_label(c));
        }
    }
    return out;
}

FmcScheduler assemble_fmc_scheduler(const Mdp& mdp, const Quotient& quo, const MemorylessScheduler& sigmaHat) {
    validate_scheduler(quo.mdp, sigmaHat);
    const std::size_t n = mdp.num_states();
    if (quo.iota.size() != n || quo.choiceMec.size() != mdp.num_choices()) {
        throw Error(ErrorCode::ShapeMismatch, "quotient was built from a different model");
    }
    FmcScheduler out;
    out.mecOf = quo.mecOf;
    out.choiceMec = quo.choiceMec;
    out.entryLeave.assign(n, 1.0);
    out.initialMemory.assign(n, {1.0, 0.0});
    out.next[0].assign(mdp.num_choices(), 0.0);
    out.next[1].assign(mdp.num_choices(), 0.0);

    const auto toQuot = quotient_choice_of(mdp, quo);
    for (StateId s = 0; s < n; ++s) {
        if (quo.mecOf[s] >= 0) continue;
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            out.next[0][c] = out.next[1][c] = sigmaHat[*toQuot[c]];
        }
    }

    const auto freq = expected_frequencies(quo.mdp, sigmaHat, true);
    for (std::size_t i = 0; i < quo.mecs.size(); ++i) {
        const Mec& C = quo.mecs[i];
        auto tau = tau_choice(quo, i);
        const double pC = std::clamp(1.0 - (tau ? sigmaHat[*tau] : 0.0), 0.0, 1.0);
        MemorylessScheduler stay = stay_scheduler(mdp, C);
        MemorylessScheduler leave = stay;
        if (pC > 0.0) {
            try {
                leave = leave_scheduler(mdp, quo, i, sigmaHat, freq);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoEntryMass) throw;
            }
        }
        for (StateId s : C.states) {
            out.entryLeave[s] = pC;
            out.initialMemory[s] = {pC, 1.0 - pC};
            for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
                out.next[0][c] = leave[c];
                out.next[1][c] = stay[c];
            }
        }
    }
    validate_scheduler(mdp, out);
    return out;
}

std::vector<StateObjective> query_objectives(const Mdp& mdp, const Query& q) {
    std::vector<StateObjective> out;
    for (const auto& p : q.predicates) {
        StateObjective o;
        switch (p.kind) {
            case PredicateKind::Reach: o.kind = StateObjective::Kind::Reach; break;
            case PredicateKind::Invariant: o.kind = StateObjective::Kind::Invariant; break;
            case PredicateKind::MeanPayoff:
                throw Error(ErrorCode::UnsupportedQuery, "scheduler evaluation covers reach and invariant predicates");
        }
        o.set = mdp.state_set(p.label);
        out.push_back(std::move(o));
    }
    return out;
}

std::vector<StateObjective> goal_objectives(const ReachForm& form) {
    std::vector<StateObjective> out;
    for (const auto& g : form.goals) out.push_back({StateObjective::Kind::Reach, g});
    return out;
}

std::vector<StateObjective> product_objectives(const ReducedQuery& rq) {
    const Product& pr = rq.product;
    const std::size_t n = pr.mdp.num_states();
    std::vector<StateObjective> out;
    for (std::size_t i = 0; i < rq.query.size(); ++i) {
        StateObjective o;
        o.set.assign(n, false);
        if (rq.reachIndex[i] != static_cast<std::size_t>(-1)) {
            o.kind = StateObjective::Kind::Reach;
            for (StateId s = 0; s < n; ++s) o.set[s] = (pr.u[s] >> rq.reachIndex[i]) & 1U;
        } else {
            o.kind = StateObjective::Kind::Invariant;
            for (StateId s = 0; s < n; ++s) o.set[s] = !((pr.v[s] >> rq.invariantIndex[i]) & 1U);
        }
        out.push_back(std::move(o));
    }
    return out;
}

std::vector<double> evaluate_scheduler(const Mdp& mdp, const MemorylessScheduler& sched,
                                       const std::vector<StateObjective>& objectives) {
    validate_scheduler(mdp, sched);
    Chain ch = memoryless_chain(mdp, sched);
    std::vector<double> out;
    for (const auto& o : objectives) out.push_back(objective_value(ch, o));
    return out;
}

std::vector<double> evaluate_scheduler(const Mdp& mdp, const FmcScheduler& sched,
                                       const std::vector<StateObjective>& objectives) {
    validate_scheduler(mdp, sched);
    Chain ch = fmc_chain(mdp, sched);
    std::vector<double> out;
    for (const auto& o : objectives) out.push_back(objective_value(ch, o));
    return out;
}

SchedulerWitness exists_and_scheduler(const Mdp& mdp, const Query& q, const CertifyOptions& options, double tol) {
    if (validate(q) != QueryFamily::ReachInvariant || q.quantifier != Quantifier::Exists ||
        (q.connective != Connective::And && q.size() > 1)) {
        throw Error(ErrorCode::UnsupportedQuery, "witness schedulers are built for (exists,and) reach/invariant queries");
    }
    Query qn = normalize_lower_bounds(q);
    qn.connective = Connective::And;
    SchedulerWitness out{reduce_query(mdp, qn), {}, {}, {}, {}, {}};
    auto cert = find_certificate(out.rq.form, out.rq.query, options);
    if (!cert) throw Error(ErrorCode::UnsupportedQuery, "query does not hold, so no witnessing scheduler exists");
    out.certificate = *cert;
    const Mdp& qm = out.rq.quotient.mdp;
    auto onForm = memoryless_from_flow(out.rq.form.mdp, cert->at("y"));
    out.quotientScheduler = remap_scheduler(out.rq.form.mdp, onForm, qm);
    std::vector<StateObjective> goals;
    for (const auto& g : out.rq.form.goals) goals.push_back({StateObjective::Kind::Reach, g});
    out.quotientValues = evaluate_scheduler(qm, out.quotientScheduler, goals);
    out.scheduler = assemble_fmc_scheduler(out.rq.product.mdp, out.rq.quotient, out.quotientScheduler);
    out.values = evaluate_scheduler(out.rq.product.mdp, out.scheduler, product_objectives(out.rq));
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const auto& p = out.rq.query.predicates[i];
        if (std::abs(out.values[i] - out.quotientValues[i]) > tol) {
            throw Error(ErrorCode::NumericalFailure, "assembled scheduler does not reproduce the quotient value of predicate " +
                                                         std::to_string(i + 1));
        }
        if (out.values[i] < p.bound.get_d() - tol) {
            throw Error(ErrorCode::NumericalFailure, "assembled scheduler misses the bound of predicate " + std::to_string(i + 1));
        }
    }
    return out;
}

std::string scheduler_to_dot(const Mdp& mdp, const MemorylessScheduler& sched) {
    std::ostringstream out;
    out << "digraph scheduler {\n";
    for (StateId s = 0; s < mdp.num_states(); ++s) out << "  n" << s << " [label=\"" << dot_escape(mdp.state_name(s)) << "\"];\n";
    for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
        if (sched[c] <= 0.0) continue;
        const auto& ch = mdp.choice(c);
        for (const auto& t : ch.dist) {
            out << "  n" << ch.state << " -> n" << t.target << " [label=\"" << dot_escape(ch.action) << ":" << fmt(sched[c])
                << " p=" << fmt(t.p) << "\"];\n";
        }
    }
    out << "}\n";
    return out.str();
}

std::string scheduler_to_dot(const Mdp& mdp, const FmcScheduler& sched) {
    Chain ch = fmc_chain(mdp, sched);
    auto reachable = forward_reachable(ch.succ, ch.init);
    std::ostringstream out;
    out << "digraph scheduler {\n";
    for (std::size_t v = 0; v < ch.size(); ++v) {
        if (!reachable[v]) continue;
        out << "  n" << v << " [label=\"" << dot_escape(mdp.state_name(ch.base[v])) << ", m" << v % 2 << "\"";
        if (ch.init[v] > 0.0) out << ", init=\"" << fmt(ch.init[v]) << "\"";
        out << "];\n";
    }
    for (std::size_t v = 0; v < ch.size(); ++v) {
        if (!reachable[v]) continue;
        const StateId s = ch.base[v];
        const std::size_t m = v % 2;
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            if (sched.next[m][c] <= 0.0) continue;
            for (const auto& t : mdp.choice(c).dist) {
                auto upd = sched.update(c, t.target, m);
                for (std::size_t m2 = 0; m2 < 2; ++m2) {
                    if (upd[m2] <= 0.0) continue;
                    out << "  n" << v << " -> n" << 2 * t.target + m2 << " [label=\"" << dot_escape(mdp.choice(c).action)
                        << ":" << fmt(sched.next[m][c]) << " p=" << fmt(t.p);
                    if (upd[m2] < 1.0) out << " mem m" << m2 << ":" << fmt(upd[m2]);
                    out << "\"];\n";
                }
            }
        }
    }
    out << "}\n";
    return out.str();
}

}  // namespace farkas
