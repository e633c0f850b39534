#include "farkas/reach_cert.hpp"

#include "farkas/errors.hpp"
#include "farkas/graph.hpp"

namespace farkas {

namespace {

struct Layout {
    const ReachForm& form;
    ReachMatrices mats;
    std::vector<Rational> delta;  // initial mass per state (F-states included)
    std::vector<Rational> offset;

    explicit Layout(const ReachForm& f) : form(f), mats(build_reach_matrices(f)), delta(f.mdp.num_states()) {
        for (const auto& [s, p] : f.mdp.initial()) delta[s] += p;
        offset = initial_goal_mass(f);
    }
    const Mdp& mdp() const { return form.mdp; }
    bool inner(StateId s) const { return !form.target[s]; }
};

std::string pair_name(const Mdp& mdp, ChoiceId c) { return mdp.choice_label(c); }

// y over all pairs with flow rows, shared by the (∃,∧) and (∃,∨) systems.
std::vector<std::size_t> add_flow(CertSystem& cs, const Layout& L, bool lower) {
    const Mdp& m = L.mdp();
    cs.declare("y", Domain::Choice, m.num_choices());
    std::vector<std::size_t> y(m.num_choices());
    for (ChoiceId c = 0; c < m.num_choices(); ++c) y[c] = cs.add_var("y", c, "y[" + pair_name(m, c) + "]", Rational(0));
    std::vector<LinExpr> rows(m.num_states());
    for (ChoiceId c = 0; c < m.num_choices(); ++c) {
        for (const auto& [s, v] : L.mats.A[c]) rows[s].emplace_back(y[c], v);
    }
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!L.inner(s)) continue;
        cs.sys.add_constraint("flow[" + m.state_name(s) + "]", std::move(rows[s]), lower ? Relation::Le : Relation::Ge,
                              L.delta[s]);
    }
    return y;
}

void add_objective_row(CertSystem& cs, const Layout& L, const std::vector<std::size_t>& y, const Predicate& p,
                       std::size_t i) {
    if (trivially_true(p)) return;
    LinExpr row;
    for (ChoiceId c = 0; c < L.mdp().num_choices(); ++c) {
        if (L.mats.T[c][i] != 0) row.emplace_back(y[c], L.mats.T[c][i]);
    }
    Relation rel = is_lower(p.op) ? Relation::Ge : Relation::Le;
    cs.sys.add_constraint("obj[" + std::to_string(i + 1) + "]", std::move(row), rel, p.bound - L.offset[i],
                          is_strict(p.op));
}

bool op_needs_ec_free(Quantifier q, CmpOp op) { return (q == Quantifier::Exists) != is_lower(op); }

}  // namespace

void validate_reach_query(const ReachForm& form, const Query& q) {
    if (q.predicates.empty()) throw Error(ErrorCode::UnsupportedQuery, "query has no predicates");
    if (q.size() != form.k()) {
        throw Error(ErrorCode::ShapeMismatch, "query has " + std::to_string(q.size()) + " predicates for " +
                                                  std::to_string(form.k()) + " goal sets");
    }
    for (const auto& p : q.predicates) {
        if (p.kind != PredicateKind::Reach) throw Error(ErrorCode::UnsupportedQuery, "expected reach predicates");
        if (p.bound < 0 || p.bound > 1) throw Error(ErrorCode::UnsupportedQuery, "probability bound outside [0,1]");
    }
    bool uniformType = (q.quantifier == Quantifier::Exists) == (q.connective == Connective::And);
    if (uniformType && !uniform_op(q)) {
        throw Error(ErrorCode::MixedOperators, "(exists,and) and (forall,or) queries need one comparison operator");
    }
}

bool trivially_true(const Query& q) {
    bool any = false, all = true;
    for (const auto& p : q.predicates) {
        bool t = trivially_true(p);
        any = any || t;
        all = all && t;
    }
    return q.connective == Connective::Or ? any : all;
}

bool requires_ec_free(const Query& q) {
    if (trivially_true(q)) return false;
    for (const auto& p : q.predicates) {
        if (!trivially_true(p) && op_needs_ec_free(q.quantifier, p.op)) return true;
    }
    return false;
}

std::vector<Rational> initial_goal_mass(const ReachForm& form) {
    std::vector<Rational> out(form.k());
    for (const auto& [s, p] : form.mdp.initial()) {
        for (std::size_t i = 0; i < form.k(); ++i) {
            if (form.goals[i][s]) out[i] += p;
        }
    }
    return out;
}

CertSystem build_exists_and(const ReachForm& form, const Query& q) {
    validate_reach_query(form, q);
    if (q.quantifier != Quantifier::Exists || q.connective != Connective::And) {
        throw Error(ErrorCode::UnsupportedQuery, "not an (exists,and) query");
    }
    const bool lower = is_lower(q.predicates.front().op);
    if (!lower && !trivially_true(q) && !is_ec_free(form)) {
        throw Error(ErrorCode::EcFreeRequired, "upper bounds for (exists,and) need an EC-free model");
    }
    Layout L(form);
    CertSystem cs;
    cs.variant = CertVariant::ExistsAnd;
    auto y = add_flow(cs, L, lower);
    for (std::size_t i = 0; i < q.size(); ++i) add_objective_row(cs, L, y, q.predicates[i], i);
    return cs;
}

CertSystem build_exists_single(const ReachForm& form, const Query& q, std::size_t i) {
    validate_reach_query(form, q);
    if (i >= q.size()) throw Error(ErrorCode::ShapeMismatch, "disjunct index out of range");
    const Predicate& p = q.predicates[i];
    const bool lower = is_lower(p.op);
    if (!lower && !trivially_true(p) && !is_ec_free(form)) {
        throw Error(ErrorCode::EcFreeRequired, "upper bounds for exists need an EC-free model");
    }
    Layout L(form);
    CertSystem cs;
    cs.variant = CertVariant::ExistsOr;
    cs.disjunct = i;
    auto y = add_flow(cs, L, lower);
    add_objective_row(cs, L, y, p, i);
    return cs;
}

CertSystem build_forall_or(const ReachForm& form, const Query& q) {
    validate_reach_query(form, q);
    if (q.quantifier != Quantifier::Forall || q.connective != Connective::Or) {
        throw Error(ErrorCode::UnsupportedQuery, "not a (forall,or) query");
    }
    const CmpOp op = q.predicates.front().op;
    const bool lower = is_lower(op), strict = is_strict(op);
    if (lower && !trivially_true(q) && !is_ec_free(form)) {
        throw Error(ErrorCode::EcFreeRequired, "lower bounds for (forall,or) need an EC-free model");
    }
    Layout L(form);
    const Mdp& m = L.mdp();
    const std::size_t k = q.size();
    CertSystem cs;
    cs.variant = CertVariant::ForallOr;
    cs.declare("x", Domain::State, m.num_states());
    cs.declare("z", Domain::Objective, k);
    std::vector<std::size_t> x(m.num_states()), z(k);
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (L.inner(s)) x[s] = cs.add_var("x", s, "x[" + m.state_name(s) + "]", std::nullopt);
    }
    for (std::size_t i = 0; i < k; ++i) z[i] = cs.add_var("z", i, "z[" + std::to_string(i + 1) + "]", Rational(0));

    // Upper bounds: Ax >= Tz, lower bounds: Ax <= Tz.
    const Relation pairRel = lower ? Relation::Le : Relation::Ge;
    for (ChoiceId c = 0; c < m.num_choices(); ++c) {
        LinExpr row;
        for (const auto& [s, v] : L.mats.A[c]) row.emplace_back(x[s], v);
        for (std::size_t i = 0; i < k; ++i) {
            if (L.mats.T[c][i] != 0) row.emplace_back(z[i], -L.mats.T[c][i]);
        }
        cs.sys.add_constraint("pair[" + pair_name(m, c) + "]", std::move(row), pairRel, Rational(0));
    }
    LinExpr init;
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (L.inner(s) && L.delta[s] != 0) init.emplace_back(x[s], L.delta[s]);
    }
    for (std::size_t i = 0; i < k; ++i) init.emplace_back(z[i], L.offset[i] - q.predicates[i].bound);
    cs.sys.add_constraint("init", std::move(init), lower ? Relation::Ge : Relation::Le, Rational(0), strict);
    LinExpr norm;
    for (std::size_t i = 0; i < k; ++i) norm.emplace_back(z[i], Rational(1));
    cs.sys.add_constraint("norm", std::move(norm), strict ? Relation::Le : Relation::Eq, Rational(1));
    return cs;
}

CertSystem build_forall_and(const ReachForm& form, const Query& q) {
    validate_reach_query(form, q);
    if (q.quantifier != Quantifier::Forall || q.connective != Connective::And) {
        throw Error(ErrorCode::UnsupportedQuery, "not a (forall,and) query");
    }
    if (requires_ec_free(q) && !is_ec_free(form)) {
        throw Error(ErrorCode::EcFreeRequired, "lower bounds for (forall,and) need an EC-free model");
    }
    Layout L(form);
    const Mdp& m = L.mdp();
    CertSystem cs;
    cs.variant = CertVariant::ForallAnd;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const Predicate& p = q.predicates[i];
        const std::string vec = "x" + std::to_string(i + 1);
        cs.declare(vec, Domain::State, m.num_states());
        std::vector<std::size_t> x(m.num_states());
        for (StateId s = 0; s < m.num_states(); ++s) {
            if (L.inner(s)) x[s] = cs.add_var(vec, s, vec + "[" + m.state_name(s) + "]", std::nullopt);
        }
        const bool lower = is_lower(p.op);
        for (ChoiceId c = 0; c < m.num_choices(); ++c) {
            LinExpr row;
            for (const auto& [s, v] : L.mats.A[c]) row.emplace_back(x[s], v);
            cs.sys.add_constraint(vec + ".pair[" + pair_name(m, c) + "]", std::move(row),
                                  lower ? Relation::Le : Relation::Ge, L.mats.T[c][i]);
        }
        LinExpr init;
        for (StateId s = 0; s < m.num_states(); ++s) {
            if (L.inner(s) && L.delta[s] != 0) init.emplace_back(x[s], L.delta[s]);
        }
        cs.sys.add_constraint(vec + ".init", std::move(init), lower ? Relation::Ge : Relation::Le,
                              p.bound - L.offset[i], is_strict(p.op));
    }
    return cs;
}

CertSystem certificate_system(const ReachForm& form, const Query& q, std::size_t disjunct) {
    if (q.quantifier == Quantifier::Exists) {
        return q.connective == Connective::And ? build_exists_and(form, q) : build_exists_single(form, q, disjunct);
    }
    return q.connective == Connective::Or ? build_forall_or(form, q) : build_forall_and(form, q);
}

namespace {

std::optional<Certificate> solve_system(const CertSystem& cs, const Query& q, const CertifyOptions& options) {
    auto solver = options.solver ? options.solver : make_solver();
    SolveOutcome out = solver->solve(cs.sys, options.limits);
    if (out.status == SolveStatus::Infeasible) return std::nullopt;
    if (!out.has_solution()) {
        if (out.timedOut) throw Error(ErrorCode::SolverUnknown, "time limit reached");
        return std::nullopt;
    }
    Certificate cert = extract_certificate(cs, out.values, q);
    if (options.exact && make_exact(cs, cert)) return cert;
    if (!check_against(cs, cert).ok) return std::nullopt;
    return cert;
}

// Certificate for a (forall,or) query with a trivially true disjunct: x = 0, z = e_i.
Certificate trivial_forall_or(const ReachForm& form, const Query& q, std::size_t i, const CertifyOptions& options) {
    Certificate cert;
    cert.variant = CertVariant::ForallOr;
    cert.query = q;
    cert.vectors["x"] = CertVector{Domain::State, std::vector<Rational>(form.mdp.num_states())};
    cert.vectors["z"] = CertVector{Domain::Objective, std::vector<Rational>(q.size())};
    cert.vectors["z"].values[i] = 1;
    if (options.exact) {
        cert.mode = CheckMode::Exact;
        cert.tolerance = 0;
    }
    return cert;
}

}  // namespace

std::optional<Certificate> find_certificate(const ReachForm& form, const Query& q, const CertifyOptions& options) {
    validate_reach_query(form, q);
    if (q.quantifier == Quantifier::Forall && q.connective == Connective::Or) {
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (trivially_true(q.predicates[i])) return trivial_forall_or(form, q, i, options);
        }
    }
    if (q.quantifier == Quantifier::Exists && q.connective == Connective::Or) {
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (auto cert = solve_system(build_exists_single(form, q, i), q, options)) return cert;
        }
        return std::nullopt;
    }
    return solve_system(certificate_system(form, q), q, options);
}

CertifyResult certify(const ReachForm& form, const Query& q, const CertifyOptions& options) {
    validate_reach_query(form, q);
    std::optional<Error> deferred;
    try {
        if (auto cert = find_certificate(form, q, options)) return CertifyResult{true, false, std::move(*cert)};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EcFreeRequired && e.code() != ErrorCode::SolverUnknown) throw;
        deferred = e;
    }
    Query neg = negate(q);
    if (auto cert = find_certificate(form, neg, options)) return CertifyResult{false, true, std::move(*cert)};
    if (deferred) throw *deferred;
    throw Error(ErrorCode::SolverUnknown, "neither the query nor its negation could be certified");
}

CheckResult check_certificate(const ReachForm& form, const Certificate& cert, const CheckOptions& options) {
    const Query& q = cert.query;
    validate_reach_query(form, q);
    CertSystem cs = certificate_system(form, q, cert.disjunct);
    return check_against(cs, cert, options);
}

}  // namespace farkas
