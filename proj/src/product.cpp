#include "farkas/product.hpp"

#include "farkas/errors.hpp"

#include <deque>
#include <map>

namespace farkas {

namespace {

std::string bits(std::uint64_t mask, std::size_t n) {
    std::string out(n, '0');
    for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1U) out[i] = '1';
    }
    return out;
}

}  // namespace

std::string product_state_name(const std::string& base, std::uint64_t u, std::size_t k, std::uint64_t v, std::size_t l) {
    return base + "|" + bits(u, k) + "|" + bits(v, l);
}

Product build_product(const Mdp& mdp, const std::vector<std::vector<bool>>& reachTargets,
                      const std::vector<std::vector<bool>>& safeSets, const ProductOptions& options) {
    const std::size_t k = reachTargets.size(), l = safeSets.size();
    if (k + l > 62) throw Error(ErrorCode::BlowupLimit, "more than 62 tracked objectives");
    for (const auto& set : reachTargets) {
        if (set.size() != mdp.num_states()) throw Error(ErrorCode::ShapeMismatch, "reach target has wrong size");
    }
    for (const auto& set : safeSets) {
        if (set.size() != mdp.num_states()) throw Error(ErrorCode::ShapeMismatch, "safe set has wrong size");
    }
    std::size_t cap = options.cap;
    if (cap == 0) {
        unsigned long long c = 10ULL * mdp.num_states();
        cap = k + l >= 40 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(c << (k + l));
    }

    auto seen = [&](StateId s) {
        std::uint64_t u = 0, v = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (reachTargets[i][s]) u |= 1ULL << i;
        }
        for (std::size_t j = 0; j < l; ++j) {
            if (!safeSets[j][s]) v |= 1ULL << j;
        }
        return std::pair{u, v};
    };

    Product p;
    p.k = k;
    p.l = l;
    MdpBuilder b;
    std::map<std::tuple<StateId, std::uint64_t, std::uint64_t>, StateId> index;
    std::deque<StateId> queue;
    auto intern = [&](StateId s, std::uint64_t u, std::uint64_t v) {
        auto key = std::tuple{s, u, v};
        if (auto it = index.find(key); it != index.end()) return it->second;
        if (p.base.size() >= cap) {
            throw Error(ErrorCode::BlowupLimit, "product exceeds " + std::to_string(cap) + " states");
        }
        StateId id = b.add_state(product_state_name(mdp.state_name(s), u, k, v, l));
        index.emplace(key, id);
        p.base.push_back(s);
        p.u.push_back(u);
        p.v.push_back(v);
        queue.push_back(id);
        return id;
    };

    for (const auto& [s, prob] : mdp.initial()) {
        auto [u, v] = options.rule == UpdateRule::Successor ? seen(s) : std::pair<std::uint64_t, std::uint64_t>{0, 0};
        b.add_initial(intern(s, u, v), prob);
    }
    while (!queue.empty()) {
        StateId ps = queue.front();
        queue.pop_front();
        StateId s = p.base[ps];
        std::uint64_t u = p.u[ps], v = p.v[ps];
        auto [su, sv] = seen(s);
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            const auto& ch = mdp.choice(c);
            for (const auto& t : ch.dist) {
                std::uint64_t nu = u, nv = v;
                if (options.rule == UpdateRule::Successor) {
                    auto [tu, tv] = seen(t.target);
                    nu |= tu;
                    nv |= tv;
                } else {
                    nu |= su;
                    nv |= sv;
                }
                b.add_transition(ps, ch.action, intern(t.target, nu, nv), t.prob);
            }
        }
    }

    for (const auto& [name, states] : mdp.labels()) {
        b.declare_label(name);
        for (StateId ps = 0; ps < p.base.size(); ++ps) {
            if (std::binary_search(states.begin(), states.end(), p.base[ps])) b.add_label(name, ps);
        }
    }
    for (const auto& r : mdp.rewards()) {
        b.declare_reward(r.name);
        for (StateId ps = 0; ps < p.base.size(); ++ps) {
            StateId s = p.base[ps];
            for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
                if (r.values[c] != 0) b.set_reward(r.name, ps, mdp.choice(c).action, r.values[c]);
            }
        }
    }
    BuildOptions opts;
    opts.allowDeadlocks = true;
    p.mdp = b.build(opts);
    return p;
}

MecClasses classify_mecs(const Product& product, const std::vector<Mec>& mecs) {
    MecClasses out;
    out.A.resize(product.k);
    out.B.resize(product.l);
    for (std::size_t m = 0; m < mecs.size(); ++m) {
        StateId first = mecs[m].states.front();
        std::uint64_t u = product.u[first], v = product.v[first];
        for (StateId s : mecs[m].states) {
            if (product.u[s] != u || product.v[s] != v) {
                throw Error(ErrorCode::InconsistentMec,
                            "MEC mixes tracking components at " + product.mdp.state_name(s));
            }
        }
        for (std::size_t i = 0; i < product.k; ++i) {
            if (u >> i & 1U) out.A[i].push_back(m);
        }
        for (std::size_t j = 0; j < product.l; ++j) {
            if (!(v >> j & 1U)) out.B[j].push_back(m);
        }
    }
    return out;
}

ReducedQuery reduce_query(const Mdp& mdp, const Query& query, const ProductOptions& options) {
    if (validate(query) != QueryFamily::ReachInvariant) {
        throw Error(ErrorCode::UnsupportedQuery, "reduction applies to reach/invariant queries only");
    }
    constexpr auto npos = static_cast<std::size_t>(-1);
    std::vector<std::vector<bool>> reach, safe;
    ReducedQuery rq;
    for (const auto& pred : query.predicates) {
        if (!is_lower(pred.op)) throw Error(ErrorCode::UnsupportedQuery, "query is not normalized to lower bounds");
        if (pred.kind == PredicateKind::Reach) {
            rq.reachIndex.push_back(reach.size());
            rq.invariantIndex.push_back(npos);
            reach.push_back(mdp.state_set(pred.label));
        } else {
            rq.reachIndex.push_back(npos);
            rq.invariantIndex.push_back(safe.size());
            safe.push_back(mdp.state_set(pred.label));
        }
    }

    rq.product = build_product(mdp, reach, safe, options);
    rq.quotient = mec_quotient(rq.product.mdp);
    rq.classes = classify_mecs(rq.product, rq.quotient.mecs);

    const Mdp& qm = rq.quotient.mdp;
    MdpBuilder b = MdpBuilder::from(qm);
    std::vector<std::vector<bool>> goals;
    rq.query.quantifier = query.quantifier;
    rq.query.connective = query.connective;
    for (std::size_t p = 0; p < query.size(); ++p) {
        const auto& mecIds = rq.reachIndex[p] != npos ? rq.classes.A[rq.reachIndex[p]] : rq.classes.B[rq.invariantIndex[p]];
        std::vector<bool> goal(qm.num_states(), false);
        std::string label = "G" + std::to_string(p + 1);
        b.declare_label(label);
        for (std::size_t m : mecIds) {
            goal[rq.quotient.botState[m]] = true;
            b.add_label(label, rq.quotient.botState[m]);
        }
        goals.push_back(std::move(goal));
        Predicate pred;
        pred.kind = PredicateKind::Reach;
        pred.label = label;
        pred.op = query.predicates[p].op;
        pred.bound = query.predicates[p].bound;
        rq.query.predicates.push_back(pred);
    }
    BuildOptions opts;
    opts.allowDeadlocks = true;
    Mdp labelled = b.build(opts);
    rq.form = make_reach_form(labelled, rq.quotient.bottom_states(), goals);

    if (!is_ec_free(rq.form)) throw Error(ErrorCode::InconsistentMec, "reduced quotient is not EC-free");
    if (!check_reachability_form(rq.form.mdp, rq.form.target).ok()) {
        throw Error(ErrorCode::InconsistentMec, "reduced quotient violates the reachability-form conditions");
    }
    return rq;
}

}  // namespace farkas
