#pragma once

// Seeded random instance generators for property tests.

#include "farkas/graph.hpp"
#include "farkas/model.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace gen {

using farkas::Mdp;
using farkas::MdpBuilder;
using farkas::Rational;
using farkas::StateId;

// Random distribution over `support` successors with denominators of at most `den`.
inline std::vector<Rational> random_split(std::mt19937_64& rng, std::size_t parts, long den = 20) {
    std::uniform_int_distribution<long> d(1, den);
    std::vector<long> w(parts);
    long total = 0;
    for (auto& x : w) total += x = d(rng);
    std::vector<Rational> out;
    for (long x : w) out.emplace_back(x, total);
    for (auto& r : out) r.canonicalize();
    return out;
}

struct MdpShape {
    std::size_t minStates = 2;
    std::size_t maxStates = 8;
    std::size_t maxActions = 3;
    std::size_t maxSuccessors = 3;
};

// Random MDP where every state has between 1 and maxActions actions.
inline Mdp random_mdp(std::mt19937_64& rng, const MdpShape& shape = {}) {
    std::uniform_int_distribution<std::size_t> ns(shape.minStates, shape.maxStates);
    const std::size_t n = ns(rng);
    std::uniform_int_distribution<std::size_t> na(1, shape.maxActions), nsucc(1, shape.maxSuccessors),
        pick(0, n - 1);
    MdpBuilder b;
    for (std::size_t s = 0; s < n; ++s) b.add_state("s" + std::to_string(s));
    for (StateId s = 0; s < n; ++s) {
        std::size_t acts = na(rng);
        for (std::size_t a = 0; a < acts; ++a) {
            std::size_t k = nsucc(rng);
            auto probs = random_split(rng, k);
            for (std::size_t j = 0; j < k; ++j) b.add_transition(s, "a" + std::to_string(a), static_cast<StateId>(pick(rng)), probs[j]);
        }
    }
    b.add_initial(0);
    return b.build();
}

// Random reachability-form MDP with `inner` non-target states, `targets` absorbing targets and k goal sets.
// With ecFree set, every end component outside F is broken by leaking mass into F.
inline farkas::ReachForm random_reach_form(std::mt19937_64& rng, std::size_t maxInner, std::size_t maxActions,
                                           std::size_t k, bool ecFree) {
    std::uniform_int_distribution<std::size_t> ni(1, maxInner), nt(2, 3), na(1, maxActions), nsucc(1, 3);
    const std::size_t inner = ni(rng), targets = nt(rng), n = inner + targets;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1), pickT(inner, n - 1);
    MdpBuilder b;
    for (std::size_t s = 0; s < inner; ++s) b.add_state("s" + std::to_string(s));
    for (std::size_t t = 0; t < targets; ++t) b.add_state("t" + std::to_string(t));
    for (StateId s = 0; s < inner; ++s) {
        std::size_t acts = na(rng);
        for (std::size_t a = 0; a < acts; ++a) {
            std::size_t m = nsucc(rng);
            auto probs = random_split(rng, m);
            for (std::size_t j = 0; j < m; ++j) b.add_transition(s, "a" + std::to_string(a), static_cast<StateId>(pick(rng)), probs[j]);
        }
    }
    b.add_initial(0);
    farkas::BuildOptions opts;
    opts.allowDeadlocks = true;
    Mdp m = b.build(opts);

    std::vector<bool> F(n, false);
    for (std::size_t t = inner; t < n; ++t) F[t] = true;

    // Every inner state must be able to reach F; otherwise leak from one of its actions.
    auto leak = [&](const Mdp& cur, const std::vector<farkas::ChoiceId>& choices) {
        MdpBuilder out;
        for (StateId s = 0; s < n; ++s) out.add_state(cur.state_name(s));
        for (farkas::ChoiceId c = 0; c < cur.num_choices(); ++c) {
            const auto& ch = cur.choice(c);
            bool hit = std::find(choices.begin(), choices.end(), c) != choices.end();
            Rational scale = hit ? Rational(1, 2) : Rational(1);
            for (const auto& t : ch.dist) out.add_transition(ch.state, ch.action, t.target, t.prob * scale);
            if (hit) out.add_transition(ch.state, ch.action, static_cast<StateId>(pickT(rng)), Rational(1, 2));
        }
        out.add_initial(0);
        return out.build(opts);
    };
    for (int guard = 0; guard < 64; ++guard) {
        std::vector<farkas::ChoiceId> fix;
        auto reach = farkas::can_reach(m, F);
        for (StateId s = 0; s < inner; ++s) {
            if (!reach[s]) fix.push_back(m.choice_begin(s));
        }
        if (fix.empty() && ecFree) {
            for (const auto& mec : farkas::mec_decomposition(m)) fix.push_back(mec.choices.front());
        }
        if (fix.empty()) break;
        m = leak(m, fix);
    }

    std::vector<std::vector<bool>> goals(k, std::vector<bool>(n, false));
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < k; ++i) {
        goals[i][pickT(rng)] = true;
        for (std::size_t t = inner; t < n; ++t) {
            if (coin(rng)) goals[i][t] = true;
        }
    }
    return farkas::make_reach_form(m, F, goals);
}

// Random strongly connected DTMC on n states: a Hamiltonian cycle plus random chords.
inline Mdp random_strongly_connected_dtmc(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1), extra(0, 2);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    MdpBuilder b;
    for (std::size_t s = 0; s < n; ++s) b.add_state("d" + std::to_string(s));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<StateId> succ{static_cast<StateId>(perm[(i + 1) % n])};
        std::size_t e = extra(rng);
        for (std::size_t j = 0; j < e; ++j) succ.push_back(static_cast<StateId>(pick(rng)));
        auto probs = random_split(rng, succ.size());
        for (std::size_t j = 0; j < succ.size(); ++j) b.add_transition(static_cast<StateId>(perm[i]), "step", succ[j], probs[j]);
    }
    b.add_initial(0);
    return b.build();
}

// Random distribution over n entries, some zero.
inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n, double zeroProb = 0.3) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::bernoulli_distribution zero(zeroProb);
    std::vector<double> v(n);
    double total = 0;
    for (auto& x : v) total += x = zero(rng) ? 0.0 : u(rng);
    if (total == 0) {
        v[0] = 1;
        total = 1;
    }
    for (auto& x : v) x /= total;
    return v;
}

// Copy of the model with k integer reward vectors r1..rk drawn from [lo, hi].
inline Mdp with_random_rewards(std::mt19937_64& rng, const Mdp& m, std::size_t k, long lo = -5, long hi = 5) {
    std::uniform_int_distribution<long> d(lo, hi);
    MdpBuilder b = MdpBuilder::from(m);
    for (std::size_t i = 0; i < k; ++i) {
        const std::string name = "r" + std::to_string(i + 1);
        b.declare_reward(name);
        for (farkas::ChoiceId c = 0; c < m.num_choices(); ++c) {
            b.set_reward(name, m.choice(c).state, m.choice(c).action, Rational(d(rng)));
        }
    }
    return b.build();
}

// Lambda on a 0.05 grid.
inline Rational grid_bound(std::mt19937_64& rng) {
    std::uniform_int_distribution<long> d(0, 20);
    Rational r(d(rng), 20);
    r.canonicalize();
    return r;
}

}  // namespace gen
