#include "farkas/witness_subsys.hpp"

#include "farkas/errors.hpp"
#include "farkas/mp_cert.hpp"
#include "farkas/reach_cert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace farkas {

const char* level_name(WitnessLevel l) {
    switch (l) {
        case WitnessLevel::Plain: return "plain";
        case WitnessLevel::Quotient: return "quotient";
        case WitnessLevel::Product: return "product";
        case WitnessLevel::Original: return "original";
    }
    return "?";
}

const char* optimality_name(Optimality o) {
    switch (o) {
        case Optimality::Proven: return "proven";
        case Optimality::Incumbent: return "incumbent";
        case Optimality::Heuristic: return "heuristic";
    }
    return "?";
}

std::size_t WitnessSubsystem::kept_count() const {
    return static_cast<std::size_t>(std::count(kept.begin(), kept.end(), true));
}

namespace {

void mark_choice_support(const Mdp& mdp, const std::vector<Rational>& v, double eps, std::vector<bool>& out) {
    for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
        if (v[c].get_d() > eps) out[mdp.choice(c).state] = true;
    }
}

void mark_state_support(const std::vector<Rational>& v, double eps, std::vector<bool>& out) {
    for (std::size_t s = 0; s < v.size(); ++s) {
        if (v[s].get_d() > eps) out[s] = true;
    }
}

// Copy of the model whose rewards are exactly the query's objectives (negation applied),
// so that the sink of an induced subsystem carries the least objective reward.
std::pair<Mdp, Query> effective_mp(const Mdp& mdp, const Query& q) {
    const auto rewards = query_rewards(mdp, q);
    MdpBuilder b;
    for (StateId s = 0; s < mdp.num_states(); ++s) b.add_state(mdp.state_name(s));
    for (const auto& ch : mdp.choices()) {
        for (const auto& t : ch.dist) b.add_transition(ch.state, ch.action, t.target, t.prob);
    }
    for (const auto& [s, p] : mdp.initial()) b.add_initial(s, p);
    for (const auto& [name, states] : mdp.labels()) {
        b.declare_label(name);
        for (StateId s : states) b.add_label(name, s);
    }
    Query out = q;
    for (std::size_t i = 0; i < q.size(); ++i) {
        std::string name = "obj" + std::to_string(i + 1);
        while (mdp.find_reward(name)) name += "_";
        b.declare_reward(name);
        for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
            if (rewards[i][c] != 0) b.set_reward(name, mdp.choice(c).state, mdp.choice(c).action, rewards[i][c]);
        }
        out.predicates[i].label = name;
        out.predicates[i].negatedReward = false;
    }
    return {b.build(), out};
}

bool is_exists_and(const Query& q) {
    return q.quantifier == Quantifier::Exists && (q.connective == Connective::And || q.size() == 1);
}

bool is_forall_or(const Query& q) {
    return q.quantifier == Quantifier::Forall && (q.connective == Connective::Or || q.size() == 1);
}

std::size_t weight_of(const std::vector<std::size_t>& weights, StateId s) { return weights.empty() ? 1 : weights[s]; }

// Upper bound on every entry of the given variables over the system's feasible set, if it is bounded.
std::optional<double> variable_bound(const LinSystem& sys, const std::vector<std::size_t>& vars,
                                     const CertifyOptions& options) {
    LinSystem aux = sys;
    std::vector<std::pair<std::size_t, double>> obj;
    for (std::size_t v : vars) obj.emplace_back(v, 1.0);
    aux.set_objective(Sense::Maximize, obj);
    auto solver = options.solver ? options.solver : make_solver();
    SolveLimits limits = options.limits;
    limits.mipStart.clear();
    SolveOutcome out = solver->solve(aux, limits);
    if (out.status != SolveStatus::Optimal || !out.objective) return std::nullopt;
    return *out.objective * (1 + 1e-6) + 1e-6;
}

struct MilpRun {
    std::vector<bool> kept;
    Optimality optimality = Optimality::Proven;
    double gap = 0.0;
};

MilpRun run_milp(LinSystem& sys, const std::vector<std::optional<std::size_t>>& gamma, const std::vector<bool>& fixed,
                 const std::vector<std::size_t>& weights, std::vector<double> start, const CertifyOptions& options) {
    std::vector<std::pair<std::size_t, double>> obj;
    for (StateId s = 0; s < gamma.size(); ++s) {
        if (gamma[s]) obj.emplace_back(*gamma[s], static_cast<double>(weight_of(weights, s)));
    }
    sys.set_objective(Sense::Minimize, obj);
    auto solver = options.solver ? options.solver : make_solver();
    SolveLimits limits = options.limits;
    limits.mipStart = std::move(start);
    SolveOutcome out = solver->solve(sys, limits);
    if (!out.has_solution()) {
        throw Error(ErrorCode::SolverUnknown, "no witnessing subsystem found" +
                                                  (out.reason.empty() ? std::string() : " (" + out.reason + ")"));
    }
    MilpRun run;
    run.kept = fixed;
    for (StateId s = 0; s < gamma.size(); ++s) {
        if (gamma[s] && out.values[*gamma[s]] > 0.5) run.kept[s] = true;
    }
    if (out.status != SolveStatus::Optimal) {
        run.optimality = Optimality::Incumbent;
        run.gap = out.gap;
    }
    return run;
}

Certificate recertify_reach(const ReachForm& form, const std::vector<bool>& kept, const Query& q,
                            const CertifyOptions& options, Subsystem& sub) {
    ReachSubsystem rs = reach_subsystem(form, kept);
    auto cert = find_certificate(rs.form, q, options);
    if (!cert) throw Error(ErrorCode::SolverUnknown, "subsystem does not re-certify the query");
    sub = std::move(rs.sub);
    return std::move(*cert);
}

Certificate recertify_mp(const Mdp& mdp, const std::vector<bool>& kept, const Query& q, const CertifyOptions& options,
                         Subsystem& sub) {
    sub = induced_subsystem(mdp, kept);
    auto cert = find_mp_certificate(sub.mdp, q, options);
    if (!cert) throw Error(ErrorCode::SolverUnknown, "subsystem does not re-certify the query");
    return std::move(*cert);
}

void require_lower(const Query& q) {
    for (const auto& p : q.predicates) {
        if (!is_lower(p.op)) throw Error(ErrorCode::UnsupportedQuery, "witnessing subsystems need lower bounds");
    }
}

}  // namespace

std::vector<bool> state_support(const Mdp& mdp, const Certificate& cert, double eps) {
    std::vector<bool> out(mdp.num_states(), false);
    switch (cert.variant) {
        case CertVariant::ExistsAnd:
        case CertVariant::ExistsOr:
            mark_choice_support(mdp, cert.at("y"), eps, out);
            break;
        case CertVariant::ForallOr:
            mark_state_support(cert.at("x"), eps, out);
            break;
        case CertVariant::ForallAnd:
            for (std::size_t i = 0; i < cert.query.size(); ++i) {
                mark_state_support(cert.at("x" + std::to_string(i + 1)), eps, out);
            }
            break;
        case CertVariant::MpExistsAnd:
            mark_choice_support(mdp, cert.at("x"), eps, out);
            mark_choice_support(mdp, cert.at("y"), eps, out);
            break;
        case CertVariant::MpForallOr: {
            const auto rmin = build_r_min(query_rewards(mdp, cert.query));
            const auto& g = cert.at("g");
            const auto& z = cert.at("z");
            for (StateId s = 0; s < mdp.num_states(); ++s) {
                Rational floor;
                for (std::size_t i = 0; i < rmin.size(); ++i) floor += z[i] * rmin[i];
                if (Rational(g[s] - floor).get_d() > eps) out[s] = true;
            }
            break;
        }
    }
    return out;
}

std::vector<bool> fixed_reach_states(const ReachForm& form) {
    std::vector<bool> out(form.mdp.num_states(), false);
    for (const auto& goal : form.goals) {
        for (StateId s = 0; s < goal.size(); ++s) {
            if (goal[s]) out[s] = true;
        }
    }
    for (const auto& [s, p] : form.mdp.initial()) out[s] = true;
    return out;
}

WitnessSubsystem support_subsystem(const ReachForm& form, const Certificate& cert, const CertifyOptions& options) {
    WitnessSubsystem ws;
    ws.kept = fixed_reach_states(form);
    auto supp = state_support(form.mdp, cert);
    for (StateId s = 0; s < supp.size(); ++s) {
        if (supp[s]) ws.kept[s] = true;
    }
    ws.certificate = recertify_reach(form, ws.kept, cert.query, options, ws.subsystem);
    return ws;
}

WitnessSubsystem support_subsystem_mp(const Mdp& mdp, const Certificate& cert, const CertifyOptions& options) {
    auto [eff, effQuery] = effective_mp(mdp, cert.query);
    Certificate local = cert;
    local.query = effQuery;
    WitnessSubsystem ws;
    ws.kept = state_support(eff, local);
    for (const auto& [s, p] : mdp.initial()) ws.kept[s] = true;
    ws.certificate = recertify_mp(eff, ws.kept, effQuery, options, ws.subsystem);
    return ws;
}

WitnessSubsystem milp_min_subsystem(const ReachForm& form, const Query& q, const WitnessOptions& options) {
    validate_reach_query(form, q);
    require_lower(q);
    const bool exists = is_exists_and(q);
    if (!exists && !is_forall_or(q)) {
        throw Error(ErrorCode::UnsupportedQuery, "minimal subsystems are computed for (exists,and) and (forall,or)");
    }
    const CertifyOptions& copts = options.certify;
    auto plain = find_certificate(form, q, copts);
    if (!plain) throw Error(ErrorCode::UnsupportedQuery, "the query does not hold, so it has no witnessing subsystem");

    const Mdp& m = form.mdp;
    CertSystem cs = certificate_system(form, q);
    const auto fixed = fixed_reach_states(form);
    std::vector<std::optional<std::size_t>> gamma(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!form.target[s] && !fixed[s]) {
            gamma[s] = cs.add_free("gamma[" + m.state_name(s) + "]", Rational(0), Rational(1), VarType::Binary);
        }
    }

    Optimality bound = Optimality::Proven;
    // Per-state certificate variables tied to the selection binary.
    std::vector<std::vector<std::size_t>> linked(m.num_states());
    for (std::size_t v = 0; v < cs.refs.size(); ++v) {
        if (!cs.refs[v]) continue;
        const auto& ref = *cs.refs[v];
        if (exists && ref.vec == "y") linked[m.choice(static_cast<ChoiceId>(ref.index)).state].push_back(v);
        if (!exists && ref.vec == "x") {
            cs.sys.vars()[v].lower = Rational(0);
            linked[ref.index].push_back(v);
        }
    }
    double M = static_cast<double>(q.size());
    if (exists) {
        std::vector<std::size_t> ys;
        for (const auto& l : linked) ys.insert(ys.end(), l.begin(), l.end());
        auto b = variable_bound(cs.sys, ys, copts);
        if (b) {
            M = std::max(*b, 1.0);
        } else {
            double top = 1.0;
            for (const auto& v : plain->at("y")) top = std::max(top, v.get_d());
            M = 1e4 * top;
            bound = Optimality::Heuristic;
        }
    }
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!gamma[s]) continue;
        for (std::size_t v : linked[s]) cs.sys.add_indicator(*gamma[s], v, M);
    }

    std::vector<double> start;
    if (options.warmStart) {
        auto values = certificate_assignment(cs, *plain);
        start.resize(values.size());
        for (std::size_t v = 0; v < values.size(); ++v) start[v] = std::max(0.0, values[v].get_d());
        auto supp = state_support(m, *plain);
        for (StateId s = 0; s < m.num_states() && !start.empty(); ++s) {
            if (gamma[s]) start[*gamma[s]] = supp[s] ? 1.0 : 0.0;
        }
    }

    MilpRun run = run_milp(cs.sys, gamma, fixed, options.weights, std::move(start), copts);
    WitnessSubsystem ws;
    ws.kept = run.kept;
    ws.optimality = bound == Optimality::Heuristic ? Optimality::Heuristic : run.optimality;
    ws.gap = run.gap;
    ws.certificate = recertify_reach(form, ws.kept, q, copts, ws.subsystem);
    return ws;
}

WitnessSubsystem milp_min_subsystem_mp(const Mdp& mdp, const Query& q, const WitnessOptions& options) {
    for (const auto& p : q.predicates) {
        if (is_strict(p.op)) throw Error(ErrorCode::StrictUnsupported, "strict mean-payoff bounds are not supported");
    }
    const Query qn = normalize_mean_payoff(q);
    validate_mp_query(mdp, qn);
    const bool exists = is_exists_and(qn);
    const CertifyOptions& copts = options.certify;
    auto [eff, effQuery] = effective_mp(mdp, qn);
    auto plain = find_mp_certificate(eff, effQuery, copts);
    if (!plain) throw Error(ErrorCode::UnsupportedQuery, "the query does not hold, so it has no witnessing subsystem");

    CertSystem cs = mp_certificate_system(eff, effQuery);
    std::vector<bool> fixed(eff.num_states(), false);
    for (const auto& [s, p] : eff.initial()) fixed[s] = true;
    std::vector<std::optional<std::size_t>> gamma(eff.num_states());
    for (StateId s = 0; s < eff.num_states(); ++s) {
        if (!fixed[s]) gamma[s] = cs.add_free("gamma[" + eff.state_name(s) + "]", Rational(0), Rational(1), VarType::Binary);
    }

    Optimality bound = Optimality::Proven;
    if (exists) {
        std::vector<std::vector<std::size_t>> xs(eff.num_states()), ys(eff.num_states());
        std::vector<std::size_t> allY;
        for (std::size_t v = 0; v < cs.refs.size(); ++v) {
            if (!cs.refs[v]) continue;
            const auto& ref = *cs.refs[v];
            if (ref.vec == "z") continue;
            StateId s = eff.choice(static_cast<ChoiceId>(ref.index)).state;
            (ref.vec == "x" ? xs : ys)[s].push_back(v);
            if (ref.vec == "y") allY.push_back(v);
        }
        // The recurrent flow has total mass at most one; transient flow is bounded only without end components.
        double My = 0.0;
        if (auto b = variable_bound(cs.sys, allY, copts)) {
            My = std::max(*b, 1.0);
        } else {
            double top = 1.0;
            for (const auto& v : plain->at("y")) top = std::max(top, v.get_d());
            My = 1e4 * top;
            bound = Optimality::Heuristic;
        }
        for (StateId s = 0; s < eff.num_states(); ++s) {
            if (!gamma[s]) continue;
            for (std::size_t v : xs[s]) cs.sys.add_indicator(*gamma[s], v, 1.0);
            for (std::size_t v : ys[s]) cs.sys.add_indicator(*gamma[s], v, My);
        }
    } else {
        const auto rewards = query_rewards(eff, effQuery);
        const auto rmin = build_r_min(rewards);
        double spread = 0.0;
        for (std::size_t i = 0; i < rewards.size(); ++i) {
            Rational top = *std::max_element(rewards[i].begin(), rewards[i].end());
            spread = std::max(spread, Rational(top - rmin[i]).get_d());
        }
        const double M = spread + 1.0;
        std::vector<std::size_t> g(eff.num_states()), z(qn.size());
        for (std::size_t v = 0; v < cs.refs.size(); ++v) {
            if (!cs.refs[v]) continue;
            if (cs.refs[v]->vec == "g") g[cs.refs[v]->index] = v;
            if (cs.refs[v]->vec == "z") z[cs.refs[v]->index] = v;
        }
        for (StateId s = 0; s < eff.num_states(); ++s) {
            if (!gamma[s]) continue;
            LinExpr row{{g[s], Rational(1)}, {*gamma[s], -Rational(M)}};
            for (std::size_t i = 0; i < z.size(); ++i) {
                if (rmin[i] != 0) row.emplace_back(z[i], -rmin[i]);
            }
            cs.sys.add_constraint("link[" + eff.state_name(s) + "]", std::move(row), Relation::Le, Rational(0));
        }
    }

    MilpRun run = run_milp(cs.sys, gamma, fixed, options.weights, {}, copts);
    WitnessSubsystem ws;
    ws.kept = run.kept;
    ws.optimality = bound == Optimality::Heuristic ? Optimality::Heuristic : run.optimality;
    ws.gap = run.gap;
    ws.certificate = recertify_mp(eff, ws.kept, effQuery, copts, ws.subsystem);
    return ws;
}

std::vector<std::size_t> quotient_weights(const ReducedQuery& rq) {
    const auto& qm = rq.quotient.mdp;
    std::vector<std::set<StateId>> origins(qm.num_states());
    for (StateId ps = 0; ps < rq.product.mdp.num_states(); ++ps) {
        origins[rq.quotient.iota[ps]].insert(rq.product.base[ps]);
    }
    std::vector<std::size_t> out(qm.num_states());
    for (StateId s = 0; s < qm.num_states(); ++s) out[s] = origins[s].size();
    return out;
}

CertifyResult certify_reach_inv(const Mdp& mdp, const Query& q, const CertifyOptions& options) {
    const Query lower = normalize_lower_bounds(q);
    ReducedQuery rq = reduce_query(mdp, lower);
    return certify(rq.form, rq.query, options);
}

WitnessSubsystem transfer_subsystem(const WitnessSubsystem& ws, const Mdp& original, const Query& query,
                                    const ReducedQuery& rq, const CertifyOptions& options) {
    if (ws.level != WitnessLevel::Quotient) throw Error(ErrorCode::UnsupportedQuery, "transfer expects a quotient witness");
    if (ws.kept.size() != rq.quotient.mdp.num_states()) throw Error(ErrorCode::ShapeMismatch, "kept set size");
    WitnessSubsystem out;
    out.level = WitnessLevel::Original;
    out.optimality = Optimality::Heuristic;
    out.kept.assign(original.num_states(), false);
    for (StateId ps = 0; ps < rq.product.mdp.num_states(); ++ps) {
        if (ws.kept[rq.quotient.iota[ps]]) out.kept[rq.product.base[ps]] = true;
    }
    out.subsystem = induced_subsystem(original, out.kept);
    auto res = certify_reach_inv(out.subsystem.mdp, query, options);
    if (!res.holds) throw Error(ErrorCode::SolverUnknown, "transferred subsystem does not satisfy the query");
    out.certificate = std::move(res.certificate);
    return out;
}

std::optional<std::size_t> brute_force_min_subsystem(const ReachForm& form, const Query& q,
                                                     const std::vector<std::size_t>& weights) {
    const auto fixed = fixed_reach_states(form);
    std::vector<StateId> free;
    for (StateId s = 0; s < form.mdp.num_states(); ++s) {
        if (!form.target[s] && !fixed[s]) free.push_back(s);
    }
    if (free.size() > 20) throw Error(ErrorCode::BlowupLimit, "too many free states for enumeration");
    std::size_t base = 0;
    for (StateId s = 0; s < fixed.size(); ++s) {
        if (fixed[s]) base += weight_of(weights, s);
    }
    const std::size_t count = std::size_t{1} << free.size();
    std::vector<std::pair<std::size_t, std::size_t>> order;  // (weight, mask)
    order.reserve(count);
    for (std::size_t mask = 0; mask < count; ++mask) {
        std::size_t w = 0;
        for (std::size_t j = 0; j < free.size(); ++j) {
            if (mask >> j & 1U) w += weight_of(weights, free[j]);
        }
        order.emplace_back(w, mask);
    }
    std::sort(order.begin(), order.end());
    for (const auto& [w, mask] : order) {
        std::vector<bool> kept = fixed;
        for (std::size_t j = 0; j < free.size(); ++j) {
            if (mask >> j & 1U) kept[free[j]] = true;
        }
        ReachSubsystem rs = reach_subsystem(form, kept);
        if (find_certificate(rs.form, q)) return base + w;
    }
    return std::nullopt;
}

}  // namespace farkas
