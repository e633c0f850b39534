#include "farkas/mp_cert.hpp"

#include "farkas/errors.hpp"
#include "farkas/graph.hpp"

#include <algorithm>
#include <cmath>

namespace farkas {

std::vector<Rational> build_r_min(const RewardMatrix& rewards) {
    std::vector<Rational> out;
    out.reserve(rewards.size());
    for (const auto& r : rewards) {
        if (r.empty()) throw Error(ErrorCode::InvalidModel, "reward vector over an empty set of pairs");
        out.push_back(*std::min_element(r.begin(), r.end()));
    }
    return out;
}

RewardMatrix query_rewards(const Mdp& mdp, const Query& q) {
    RewardMatrix out;
    for (const auto& p : q.predicates) {
        auto idx = mdp.find_reward(p.label);
        if (!idx) throw Error(ErrorCode::UnknownLabel, "unknown reward '" + p.label + "'");
        std::vector<Rational> r = mdp.rewards()[*idx].values;
        if (p.negatedReward) {
            for (auto& v : r) v = -v;
        }
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

void check_shapes(const Mdp& mdp, const RewardMatrix& rewards, const std::vector<Rational>& lambda) {
    if (rewards.size() != lambda.size() || rewards.empty()) {
        throw Error(ErrorCode::ShapeMismatch, "reward and bound counts differ");
    }
    for (const auto& r : rewards) {
        if (r.size() != mdp.num_choices()) throw Error(ErrorCode::ShapeMismatch, "reward vector length");
    }
}

std::vector<Rational> initial_mass(const Mdp& mdp) {
    std::vector<Rational> d(mdp.num_states());
    for (const auto& [s, p] : mdp.initial()) d[s] += p;
    return d;
}

std::string idx_name(std::size_t i) { return std::to_string(i + 1); }

}  // namespace

CertSystem build_Hmp(const Mdp& mdp, const RewardMatrix& rewards, const std::vector<Rational>& lambda, bool strict) {
    check_shapes(mdp, rewards, lambda);
    const auto rmin = build_r_min(rewards);
    const auto delta = initial_mass(mdp);
    const std::size_t n = mdp.num_states(), m = mdp.num_choices();
    CertSystem cs;
    cs.variant = CertVariant::MpExistsAnd;
    cs.declare("x", Domain::Choice, m);
    cs.declare("y", Domain::Choice, m);
    cs.declare("z", Domain::State, n);
    std::vector<std::size_t> x(m), y(m), z(n);
    for (ChoiceId c = 0; c < m; ++c) {
        x[c] = cs.add_var("x", c, "x[" + mdp.choice_label(c) + "]", Rational(0));
        y[c] = cs.add_var("y", c, "y[" + mdp.choice_label(c) + "]", Rational(0));
    }
    for (StateId s = 0; s < n; ++s) z[s] = cs.add_var("z", s, "z[" + mdp.state_name(s) + "]", Rational(0));

    std::vector<LinExpr> in(n), rec(n);
    for (StateId s = 0; s < n; ++s) in[s].emplace_back(z[s], Rational(1));
    for (ChoiceId c = 0; c < m; ++c) {
        const Choice& ch = mdp.choice(c);
        in[ch.state].emplace_back(y[c], Rational(1));
        in[ch.state].emplace_back(x[c], Rational(1));
        rec[ch.state].emplace_back(x[c], Rational(1));
        for (const auto& t : ch.dist) {
            in[t.target].emplace_back(y[c], -t.prob);
            rec[t.target].emplace_back(x[c], -t.prob);
        }
    }
    for (StateId s = 0; s < n; ++s) {
        cs.sys.add_constraint("in[" + mdp.state_name(s) + "]", std::move(in[s]), Relation::Eq, delta[s]);
    }
    for (StateId s = 0; s < n; ++s) {
        cs.sys.add_constraint("rec[" + mdp.state_name(s) + "]", std::move(rec[s]), Relation::Eq, Rational(0));
    }
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        LinExpr row;
        for (ChoiceId c = 0; c < m; ++c) {
            if (rewards[i][c] != 0) row.emplace_back(x[c], rewards[i][c]);
        }
        if (rmin[i] != 0) {
            for (StateId s = 0; s < n; ++s) row.emplace_back(z[s], rmin[i]);
        }
        cs.sys.add_constraint("obj[" + idx_name(i) + "]", std::move(row), Relation::Ge, lambda[i], strict);
    }
    return cs;
}

CertSystem build_Fmp(const Mdp& mdp, const RewardMatrix& rewards, const std::vector<Rational>& lambda, bool strict) {
    check_shapes(mdp, rewards, lambda);
    const auto rmin = build_r_min(rewards);
    const auto delta = initial_mass(mdp);
    const std::size_t n = mdp.num_states(), m = mdp.num_choices(), k = rewards.size();
    CertSystem cs;
    cs.variant = CertVariant::MpForallOr;
    cs.declare("g", Domain::State, n);
    cs.declare("b", Domain::State, n);
    cs.declare("z", Domain::Objective, k);
    std::vector<std::size_t> g(n), b(n), z(k);
    for (StateId s = 0; s < n; ++s) g[s] = cs.add_var("g", s, "g[" + mdp.state_name(s) + "]", std::nullopt);
    for (StateId s = 0; s < n; ++s) b[s] = cs.add_var("b", s, "b[" + mdp.state_name(s) + "]", std::nullopt);
    for (std::size_t i = 0; i < k; ++i) z[i] = cs.add_var("z", i, "z[" + idx_name(i) + "]", Rational(0));

    for (ChoiceId c = 0; c < m; ++c) {
        const Choice& ch = mdp.choice(c);
        LinExpr gain{{g[ch.state], Rational(1)}};
        LinExpr bias{{g[ch.state], Rational(1)}, {b[ch.state], Rational(1)}};
        for (const auto& t : ch.dist) {
            gain.emplace_back(g[t.target], -t.prob);
            bias.emplace_back(b[t.target], -t.prob);
        }
        for (std::size_t i = 0; i < k; ++i) {
            if (rewards[i][c] != 0) bias.emplace_back(z[i], -rewards[i][c]);
        }
        cs.sys.add_constraint("gain[" + mdp.choice_label(c) + "]", std::move(gain), Relation::Le, Rational(0));
        cs.sys.add_constraint("bias[" + mdp.choice_label(c) + "]", std::move(bias), Relation::Le, Rational(0));
    }
    for (StateId s = 0; s < n; ++s) {
        LinExpr row{{g[s], Rational(1)}};
        for (std::size_t i = 0; i < k; ++i) {
            if (rmin[i] != 0) row.emplace_back(z[i], -rmin[i]);
        }
        cs.sys.add_constraint("floor[" + mdp.state_name(s) + "]", std::move(row), Relation::Ge, Rational(0));
    }
    LinExpr init;
    for (StateId s = 0; s < n; ++s) {
        if (delta[s] != 0) init.emplace_back(g[s], delta[s]);
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (lambda[i] != 0) init.emplace_back(z[i], -lambda[i]);
    }
    cs.sys.add_constraint("init", std::move(init), Relation::Ge, Rational(0), strict);
    LinExpr norm;
    for (std::size_t i = 0; i < k; ++i) norm.emplace_back(z[i], Rational(1));
    cs.sys.add_constraint("norm", std::move(norm), Relation::Eq, Rational(1));
    return cs;
}

namespace {

bool is_exists_type(const Query& q) {
    if (q.size() == 1) return q.quantifier == Quantifier::Exists;
    return q.quantifier == Quantifier::Exists && q.connective == Connective::And;
}

std::vector<Rational> bounds_of(const Query& q) {
    std::vector<Rational> out;
    for (const auto& p : q.predicates) out.push_back(p.bound);
    return out;
}

bool constant(const std::vector<Rational>& r) {
    return std::all_of(r.begin(), r.end(), [&](const Rational& v) { return v == r.front(); });
}

bool meets(const Rational& value, const Rational& bound, bool strict) { return strict ? value > bound : value >= bound; }

// Constant rewards decide the query outright; the certificate is written down directly.
std::optional<Certificate> constant_certificate(const Mdp& mdp, const Query& q, const RewardMatrix& rewards) {
    const bool strict = is_strict(q.predicates.front().op);
    const std::size_t n = mdp.num_states(), m = mdp.num_choices(), k = q.size();
    Certificate cert;
    cert.query = q;
    if (is_exists_type(q)) {
        for (std::size_t i = 0; i < k; ++i) {
            if (!meets(rewards[i].front(), q.predicates[i].bound, strict)) return std::nullopt;
        }
        cert.variant = CertVariant::MpExistsAnd;
        cert.vectors["x"] = CertVector{Domain::Choice, std::vector<Rational>(m)};
        cert.vectors["y"] = CertVector{Domain::Choice, std::vector<Rational>(m)};
        cert.vectors["z"] = CertVector{Domain::State, initial_mass(mdp)};
        return cert;
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (!meets(rewards[i].front(), q.predicates[i].bound, strict)) continue;
        cert.variant = CertVariant::MpForallOr;
        cert.vectors["g"] = CertVector{Domain::State, std::vector<Rational>(n, rewards[i].front())};
        cert.vectors["b"] = CertVector{Domain::State, std::vector<Rational>(n)};
        cert.vectors["z"] = CertVector{Domain::Objective, std::vector<Rational>(k)};
        cert.vectors["z"].values[i] = 1;
        return cert;
    }
    return std::nullopt;
}

}  // namespace

void validate_mp_query(const Mdp& mdp, const Query& q) {
    if (q.predicates.empty()) throw Error(ErrorCode::UnsupportedQuery, "query has no predicates");
    if (validate(q) != QueryFamily::MeanPayoff) throw Error(ErrorCode::UnsupportedQuery, "not a mean-payoff query");
    for (const auto& p : q.predicates) {
        if (!is_lower(p.op)) throw Error(ErrorCode::UnsupportedQuery, "mean-payoff query is not normalized");
    }
    if (!uniform_op(q)) throw Error(ErrorCode::MixedOperators, "mean-payoff bounds mix >= and >");
    if (q.size() > 1 && (q.quantifier == Quantifier::Exists) != (q.connective == Connective::And)) {
        throw Error(ErrorCode::UnsupportedQuery, "only (exists,and) and (forall,or) mean-payoff queries are supported");
    }
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (mdp.num_choices(s) == 0) {
            throw Error(ErrorCode::InvalidModel, "state '" + mdp.state_name(s) + "' has no enabled action");
        }
    }
}

CertSystem mp_certificate_system(const Mdp& mdp, const Query& q) {
    validate_mp_query(mdp, q);
    const bool strict = is_strict(q.predicates.front().op);
    const auto rewards = query_rewards(mdp, q);
    if (is_exists_type(q)) return build_Hmp(mdp, rewards, bounds_of(q), strict);
    return build_Fmp(mdp, rewards, bounds_of(q), strict);
}

std::optional<Certificate> find_mp_certificate(const Mdp& mdp, const Query& q, const CertifyOptions& options) {
    CertSystem cs = mp_certificate_system(mdp, q);
    const auto rewards = query_rewards(mdp, q);
    if (std::all_of(rewards.begin(), rewards.end(), constant)) {
        auto cert = constant_certificate(mdp, q, rewards);
        if (cert && options.exact) {
            cert->mode = CheckMode::Exact;
            cert->tolerance = 0;
        }
        return cert;
    }
    auto solver = options.solver ? options.solver : make_solver();
    SolveOutcome out = solver->solve(cs.sys, options.limits);
    if (out.status == SolveStatus::Infeasible) return std::nullopt;
    if (!out.has_solution()) {
        if (out.timedOut) throw Error(ErrorCode::SolverUnknown, "time limit reached");
        return std::nullopt;
    }
    Certificate cert = extract_certificate(cs, out.values, q);
    if (!(options.exact && make_exact(cs, cert)) && !check_against(cs, cert).ok) return std::nullopt;
    if (cert.variant == CertVariant::MpExistsAnd && recurrent_leak(mdp, cert) > kCheckTolerance) {
        throw Error(ErrorCode::InconsistentMec, "recurrent flow outside every MEC");
    }
    return cert;
}

CertifyResult certify_mp(const Mdp& mdp, const Query& q, const CertifyOptions& options) {
    if (validate(q) != QueryFamily::MeanPayoff) throw Error(ErrorCode::UnsupportedQuery, "not a mean-payoff query");
    for (const auto& p : q.predicates) {
        if (is_strict(p.op)) throw Error(ErrorCode::StrictUnsupported, "strict mean-payoff bounds are not supported");
    }
    const Query qn = normalize_mean_payoff(q);
    if (auto cert = find_mp_certificate(mdp, qn, options)) return CertifyResult{true, false, std::move(*cert)};
    const Query neg = normalize_mean_payoff(negate(qn));
    if (auto cert = find_mp_certificate(mdp, neg, options)) return CertifyResult{false, true, std::move(*cert)};
    throw Error(ErrorCode::SolverUnknown, "neither the query nor its negation could be certified");
}

CheckResult check_mp_certificate(const Mdp& mdp, const Certificate& cert, const CheckOptions& options) {
    CertSystem cs = mp_certificate_system(mdp, cert.query);
    for (const auto& [name, shape] : cs.shapes) {
        auto it = cert.vectors.find(name);
        if (it == cert.vectors.end() || it->second.values.size() != shape.second) {
            throw Error(ErrorCode::ShapeMismatch, "certificate vector '" + name + "' missing or of wrong length");
        }
    }
    return check_against(cs, cert, options);
}

double recurrent_leak(const Mdp& mdp, const Certificate& cert) {
    if (cert.variant != CertVariant::MpExistsAnd) return 0.0;
    std::vector<bool> inside(mdp.num_choices(), false);
    for (const auto& mec : mec_decomposition(mdp)) {
        for (ChoiceId c : mec.choices) inside[c] = true;
    }
    double worst = 0.0;
    const auto& x = cert.at("x");
    for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
        if (!inside[c]) worst = std::max(worst, std::abs(x[c].get_d()));
    }
    return worst;
}

}  // namespace farkas
