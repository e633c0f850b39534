#include "farkas/graph.hpp"

#include "farkas/errors.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace farkas {

std::pair<std::vector<std::size_t>, std::size_t> scc_decomposition(const Mdp& mdp, const std::vector<bool>& allowedChoice,
                                                                   const std::vector<bool>& allowedState) {
    const std::size_t n = mdp.num_states();
    constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
    std::vector<std::vector<StateId>> succ(n);
    for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
        if (!allowedChoice[c]) continue;
        const auto& ch = mdp.choice(c);
        if (!allowedState[ch.state]) continue;
        for (const auto& t : ch.dist) {
            if (allowedState[t.target]) succ[ch.state].push_back(t.target);
        }
    }

    // Iterative Tarjan.
    std::vector<std::size_t> index(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
    std::vector<bool> onStack(n, false);
    std::vector<StateId> stack;
    std::vector<std::pair<StateId, std::size_t>> call;
    std::size_t counter = 0, components = 0;

    for (StateId root = 0; root < n; ++root) {
        if (!allowedState[root] || index[root] != kUnvisited) continue;
        call.emplace_back(root, 0);
        index[root] = low[root] = counter++;
        stack.push_back(root);
        onStack[root] = true;
        while (!call.empty()) {
            auto& [v, pos] = call.back();
            if (pos < succ[v].size()) {
                StateId w = succ[v][pos++];
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    onStack[w] = true;
                    call.emplace_back(w, 0);
                } else if (onStack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                StateId w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    onStack[w] = false;
                    comp[w] = components;
                } while (w != v);
                ++components;
            }
            StateId done = v;
            call.pop_back();
            if (!call.empty()) {
                StateId parent = call.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
        }
    }
    return {comp, components};
}

namespace {

void self_check(const Mdp& mdp, const Mec& mec) {
    std::vector<bool> inState(mdp.num_states(), false), inChoice(mdp.num_choices(), false);
    for (StateId s : mec.states) inState[s] = true;
    for (ChoiceId c : mec.choices) {
        inChoice[c] = true;
        if (!inState[mdp.choice(c).state]) throw Error(ErrorCode::InconsistentMec, "MEC pair outside its states");
        for (const auto& t : mdp.choice(c).dist) {
            if (!inState[t.target]) throw Error(ErrorCode::InconsistentMec, "MEC is not closed");
        }
    }
    auto [comp, count] = scc_decomposition(mdp, inChoice, inState);
    for (StateId s : mec.states) {
        if (comp[s] != comp[mec.states.front()]) throw Error(ErrorCode::InconsistentMec, "MEC not strongly connected");
    }
    for (StateId s : mec.states) {
        bool any = false;
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) any = any || inChoice[c];
        if (!any) throw Error(ErrorCode::InconsistentMec, "MEC state without internal action");
    }
}

}  // namespace

std::vector<Mec> mec_decomposition(const Mdp& mdp) {
    const std::size_t n = mdp.num_states();
    std::vector<bool> state(n, true), choice(mdp.num_choices(), true);
    for (StateId s = 0; s < n; ++s) {
        if (mdp.num_choices(s) == 0) state[s] = false;
    }

    std::vector<std::size_t> comp;
    bool changed = true;
    while (changed) {
        changed = false;
        comp = scc_decomposition(mdp, choice, state).first;
        for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
            if (!choice[c]) continue;
            const auto& ch = mdp.choice(c);
            bool leaves = !state[ch.state];
            for (const auto& t : ch.dist) {
                if (!state[t.target] || comp[t.target] != comp[ch.state]) leaves = true;
            }
            if (leaves) {
                choice[c] = false;
                changed = true;
            }
        }
        for (StateId s = 0; s < n; ++s) {
            if (!state[s]) continue;
            bool any = false;
            for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) any = any || choice[c];
            if (!any) {
                state[s] = false;
                changed = true;
            }
        }
    }

    std::map<std::size_t, Mec> byComp;
    for (StateId s = 0; s < n; ++s) {
        if (state[s]) byComp[comp[s]].states.push_back(s);
    }
    for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
        if (choice[c] && state[mdp.choice(c).state]) byComp[comp[mdp.choice(c).state]].choices.push_back(c);
    }
    std::vector<Mec> mecs;
    auto byName = [&](StateId a, StateId b) { return mdp.state_name(a) < mdp.state_name(b); };
    for (auto& [id, mec] : byComp) {
        std::sort(mec.states.begin(), mec.states.end(), byName);
        self_check(mdp, mec);
        mecs.push_back(std::move(mec));
    }
    std::sort(mecs.begin(), mecs.end(),
              [&](const Mec& a, const Mec& b) { return byName(a.states.front(), b.states.front()); });
    return mecs;
}

std::vector<bool> Quotient::bottom_states() const {
    std::vector<bool> bot(mdp.num_states(), false);
    for (StateId b : botState) bot[b] = true;
    return bot;
}

Quotient mec_quotient(const Mdp& mdp) {
    Quotient q;
    q.mecs = mec_decomposition(mdp);
    const std::size_t n = mdp.num_states();
    q.mecOf.assign(n, -1);
    q.choiceMec.assign(mdp.num_choices(), -1);
    for (std::size_t i = 0; i < q.mecs.size(); ++i) {
        for (StateId s : q.mecs[i].states) q.mecOf[s] = static_cast<int>(i);
        for (ChoiceId c : q.mecs[i].choices) q.choiceMec[c] = static_cast<int>(i);
    }

    MdpBuilder b;
    q.iota.assign(n, 0);
    for (StateId s = 0; s < n; ++s) {
        if (q.mecOf[s] < 0) q.iota[s] = b.add_state(mdp.state_name(s));
    }
    auto unique_name = [&](std::string base) {
        while (mdp.find_state(base) || b.find_state(base)) base += "'";
        return base;
    };
    for (const auto& mec : q.mecs) {
        StateId sc = b.add_state(unique_name("mec:" + mdp.state_name(mec.states.front())));
        q.mecState.push_back(sc);
        for (StateId s : mec.states) q.iota[s] = sc;
    }
    for (const auto& mec : q.mecs) q.botState.push_back(b.add_state(unique_name("bot:" + mdp.state_name(mec.states.front()))));

    // Quotient choices, recorded with their origin in insertion order per (state, action) name.
    std::map<std::pair<StateId, std::string>, std::optional<ChoiceId>> originByName;
    auto add_mapped = [&](StateId qs, const std::string& action, ChoiceId c) {
        for (const auto& t : mdp.choice(c).dist) b.add_transition(qs, action, q.iota[t.target], t.prob);
        originByName[{qs, action}] = c;
    };
    for (StateId s = 0; s < n; ++s) {
        if (q.mecOf[s] >= 0) continue;
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) add_mapped(q.iota[s], mdp.choice(c).action, c);
    }
    q.exitPairs.resize(q.mecs.size());
    for (std::size_t i = 0; i < q.mecs.size(); ++i) {
        const auto& mec = q.mecs[i];
        std::vector<StateId> byId(mec.states);
        std::sort(byId.begin(), byId.end());
        for (StateId s : byId) {
            for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
                if (q.choiceMec[c] == static_cast<int>(i)) continue;
                q.exitPairs[i].push_back(c);
                add_mapped(q.mecState[i], mdp.choice(c).action + "@" + mdp.state_name(s), c);
            }
        }
        b.add_transition(q.mecState[i], q.tauAction, q.botState[i], Rational(1));
        originByName[{q.mecState[i], q.tauAction}] = std::nullopt;
        b.add_transition(q.botState[i], q.stayAction, q.botState[i], Rational(1));
        originByName[{q.botState[i], q.stayAction}] = std::nullopt;
    }

    for (const auto& [s, p] : mdp.initial()) b.add_initial(q.iota[s], p);
    for (const auto& [name, states] : mdp.labels()) {
        b.declare_label(name);
        for (StateId s : states) {
            if (q.mecOf[s] < 0) b.add_label(name, q.iota[s]);
        }
    }
    for (const auto& r : mdp.rewards()) {
        b.declare_reward(r.name);
        for (const auto& [key, c] : originByName) {
            if (c && r.values[*c] != 0) b.set_reward(r.name, key.first, key.second, r.values[*c]);
        }
    }
    BuildOptions opts;
    opts.allowDeadlocks = true;
    q.mdp = b.build(opts);
    q.origin.assign(q.mdp.num_choices(), std::nullopt);
    for (const auto& [key, c] : originByName) {
        auto qc = q.mdp.find_choice(key.first, key.second);
        q.origin[*qc] = c;
    }

    std::vector<bool> bot = q.bottom_states();
    if (!is_ec_free(q.mdp, bot)) throw Error(ErrorCode::InconsistentMec, "quotient has an end component outside the sinks");
    return q;
}

bool is_ec_free(const Mdp& mdp, const std::vector<bool>& target) {
    for (const auto& mec : mec_decomposition(mdp)) {
        for (StateId s : mec.states) {
            if (!target[s]) return false;
        }
    }
    return true;
}

bool is_ec_free(const ReachForm& form) { return is_ec_free(form.mdp, form.target); }

}  // namespace farkas
