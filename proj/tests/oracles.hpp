#pragma once

// Independent reference computations used to validate the certifying code paths.
// Nothing here calls into the LP layer.

#include "farkas/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

namespace oracle {

using farkas::ChoiceId;
using farkas::Mdp;
using farkas::StateId;

// Optimal reachability probabilities by value iteration from below.
inline std::vector<double> vi_reach(const Mdp& m, const std::vector<bool>& target, bool maximize,
                                    double eps = 1e-14, int maxIter = 2000000) {
    const std::size_t n = m.num_states();
    std::vector<double> x(n, 0.0);
    for (StateId s = 0; s < n; ++s) {
        if (target[s]) x[s] = 1.0;
    }
    for (int it = 0; it < maxIter; ++it) {
        double delta = 0;
        for (StateId s = 0; s < n; ++s) {
            if (target[s] || m.num_choices(s) == 0) continue;
            double best = maximize ? 0.0 : 1.0;
            for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s); ++c) {
                double v = 0;
                for (const auto& t : m.choice(c).dist) v += t.p * x[t.target];
                best = maximize ? std::max(best, v) : std::min(best, v);
            }
            delta = std::max(delta, std::abs(best - x[s]));
            x[s] = best;
        }
        if (delta < eps) break;
    }
    return x;
}

inline double initial_value(const Mdp& m, const std::vector<double>& x) {
    double v = 0;
    for (const auto& [s, p] : m.initial()) v += p.get_d() * x[s];
    return v;
}

// Calls f(selection) for every memoryless deterministic scheduler (one choice per state with actions).
inline void for_each_md(const Mdp& m, const std::function<void(const std::vector<ChoiceId>&)>& f) {
    const std::size_t n = m.num_states();
    std::vector<ChoiceId> sel(n, 0);
    for (StateId s = 0; s < n; ++s) sel[s] = m.choice_begin(s);
    while (true) {
        f(sel);
        StateId s = 0;
        for (; s < n; ++s) {
            if (m.num_choices(s) == 0) continue;
            if (sel[s] + 1 < m.choice_end(s)) {
                ++sel[s];
                break;
            }
            sel[s] = m.choice_begin(s);
        }
        if (s == n) return;
    }
}

// Transition matrix of the chain induced by a memoryless (randomised) scheduler; states without actions absorb.
inline Eigen::MatrixXd induced_chain(const Mdp& m, const std::function<double(ChoiceId)>& weight) {
    const auto n = static_cast<Eigen::Index>(m.num_states());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (m.num_choices(s) == 0) {
            P(s, s) = 1;
            continue;
        }
        for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s); ++c) {
            double w = weight(c);
            for (const auto& t : m.choice(c).dist) P(s, t.target) += w * t.p;
        }
    }
    return P;
}

// Reachability probabilities in a finite chain by graph pre-analysis plus a dense solve.
inline std::vector<double> chain_reach(const Eigen::MatrixXd& P, const std::vector<bool>& target) {
    const auto n = P.rows();
    std::vector<bool> canReach(target.begin(), target.end());
    for (bool changed = true; changed;) {
        changed = false;
        for (Eigen::Index s = 0; s < n; ++s) {
            if (canReach[s]) continue;
            for (Eigen::Index t = 0; t < n; ++t) {
                if (P(s, t) > 0 && canReach[t]) {
                    canReach[s] = true;
                    changed = true;
                    break;
                }
            }
        }
    }
    std::vector<Eigen::Index> idx(n, -1);
    Eigen::Index k = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
        if (canReach[s] && !target[s]) idx[s] = k++;
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(k, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    for (Eigen::Index s = 0; s < n; ++s) {
        if (idx[s] < 0) continue;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (P(s, t) == 0) continue;
            if (target[t]) {
                b(idx[s]) += P(s, t);
            } else if (idx[t] >= 0) {
                A(idx[s], idx[t]) -= P(s, t);
            }
        }
    }
    Eigen::VectorXd x = k > 0 ? Eigen::VectorXd(A.fullPivLu().solve(b)) : Eigen::VectorXd();
    std::vector<double> out(n, 0.0);
    for (Eigen::Index s = 0; s < n; ++s) {
        if (target[s]) out[s] = 1.0;
        else if (idx[s] >= 0) out[s] = x(idx[s]);
    }
    return out;
}

inline double md_reach(const Mdp& m, const std::vector<ChoiceId>& sel, const std::vector<bool>& target) {
    auto P = induced_chain(m, [&](ChoiceId c) { return sel[m.choice(c).state] == c ? 1.0 : 0.0; });
    return initial_value(m, chain_reach(P, target));
}

// Maximal end components by exhaustive enumeration of pair subsets (small models only).
inline std::set<std::set<ChoiceId>> brute_force_mecs(const Mdp& m) {
    const std::size_t E = m.num_choices();
    std::vector<std::set<ChoiceId>> ecs;
    for (unsigned long mask = 1; mask < (1UL << E); ++mask) {
        std::vector<bool> inState(m.num_states(), false);
        for (ChoiceId c = 0; c < E; ++c) {
            if (mask >> c & 1UL) inState[m.choice(c).state] = true;
        }
        bool closed = true;
        for (ChoiceId c = 0; c < E && closed; ++c) {
            if (!(mask >> c & 1UL)) continue;
            for (const auto& t : m.choice(c).dist) closed = closed && inState[t.target];
        }
        if (!closed) continue;
        // Strong connectivity via reachability from each state.
        std::vector<StateId> states;
        for (StateId s = 0; s < m.num_states(); ++s) {
            if (inState[s]) states.push_back(s);
        }
        bool strong = true;
        for (StateId from : states) {
            std::vector<bool> seen(m.num_states(), false);
            std::vector<StateId> stack{from};
            seen[from] = true;
            while (!stack.empty()) {
                StateId s = stack.back();
                stack.pop_back();
                for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s); ++c) {
                    if (!(mask >> c & 1UL)) continue;
                    for (const auto& t : m.choice(c).dist) {
                        if (!seen[t.target]) {
                            seen[t.target] = true;
                            stack.push_back(t.target);
                        }
                    }
                }
            }
            for (StateId s : states) strong = strong && seen[s];
            if (!strong) break;
        }
        if (!strong) continue;
        std::set<ChoiceId> ec;
        for (ChoiceId c = 0; c < E; ++c) {
            if (mask >> c & 1UL) ec.insert(c);
        }
        ecs.push_back(std::move(ec));
    }
    std::set<std::set<ChoiceId>> maximal;
    for (const auto& a : ecs) {
        bool dominated = false;
        for (const auto& b : ecs) {
            if (b.size() > a.size() && std::includes(b.begin(), b.end(), a.begin(), a.end())) {
                dominated = true;
                break;
            }
        }
        if (!dominated) maximal.insert(a);
    }
    return maximal;
}

// Optimal long-run average reward (gain) per state by policy iteration for multichain MDPs.
// Returns the maximal gain when maximize is set, the minimal one otherwise.
inline std::vector<double> mp_policy_iteration(const Mdp& m, const std::vector<double>& reward, bool maximize) {
    const auto n = static_cast<Eigen::Index>(m.num_states());
    const double sign = maximize ? 1.0 : -1.0;
    std::vector<ChoiceId> sel(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) sel[s] = m.choice_begin(s);

    auto evaluate = [&](const std::vector<ChoiceId>& pol, Eigen::VectorXd& g, Eigen::VectorXd& h) {
        // Multichain evaluation: (I-P)g = 0, g + (I-P)h = r, plus one normalisation h = 0 per recurrent class,
        // solved jointly by least squares on the stacked system (unique for g; h pinned by the extra rows).
        Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd r(n);
        for (StateId s = 0; s < m.num_states(); ++s) {
            r(s) = sign * reward[pol[s]];
            for (const auto& t : m.choice(pol[s]).dist) P(s, t.target) += t.p;
        }
        // Recurrent classes: bottom SCCs of P.
        std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
        for (Eigen::Index s = 0; s < n; ++s) {
            std::vector<Eigen::Index> st{s};
            reach[s][s] = true;
            while (!st.empty()) {
                auto u = st.back();
                st.pop_back();
                for (Eigen::Index v = 0; v < n; ++v) {
                    if (P(u, v) > 0 && !reach[s][v]) {
                        reach[s][v] = true;
                        st.push_back(v);
                    }
                }
            }
        }
        std::vector<Eigen::Index> pins;
        std::vector<bool> done(n, false);
        for (Eigen::Index s = 0; s < n; ++s) {
            bool bottom = true;
            for (Eigen::Index v = 0; v < n; ++v) bottom = bottom && (!reach[s][v] || reach[v][s]);
            if (bottom && !done[s]) {
                pins.push_back(s);
                for (Eigen::Index v = 0; v < n; ++v) {
                    if (reach[s][v]) done[v] = true;
                }
            }
        }
        const Eigen::Index rows = 2 * n + static_cast<Eigen::Index>(pins.size());
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, 2 * n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
        Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        M.block(0, 0, n, n) = I - P;
        M.block(n, 0, n, n) = I;
        M.block(n, n, n, n) = I - P;
        rhs.segment(n, n) = r;
        for (std::size_t i = 0; i < pins.size(); ++i) M(2 * n + static_cast<Eigen::Index>(i), n + pins[i]) = 1;
        Eigen::VectorXd sol = M.colPivHouseholderQr().solve(rhs);
        g = sol.head(n);
        h = sol.tail(n);
    };

    Eigen::VectorXd g, h;
    for (int round = 0; round < 1000; ++round) {
        evaluate(sel, g, h);
        bool changed = false;
        for (StateId s = 0; s < m.num_states(); ++s) {
            // Gain improvement first, then bias improvement among gain-optimal actions.
            auto gainOf = [&](ChoiceId c) {
                double v = 0;
                for (const auto& t : m.choice(c).dist) v += t.p * g(t.target);
                return v;
            };
            auto biasOf = [&](ChoiceId c) {
                double v = sign * reward[c];
                for (const auto& t : m.choice(c).dist) v += t.p * h(t.target);
                return v;
            };
            double bestGain = gainOf(sel[s]);
            ChoiceId best = sel[s];
            for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s); ++c) {
                if (gainOf(c) > bestGain + 1e-10) {
                    bestGain = gainOf(c);
                    best = c;
                }
            }
            if (best == sel[s]) {
                double bestBias = biasOf(sel[s]);
                for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s); ++c) {
                    if (gainOf(c) >= bestGain - 1e-10 && biasOf(c) > bestBias + 1e-10) {
                        bestBias = biasOf(c);
                        best = c;
                    }
                }
            }
            if (best != sel[s]) {
                sel[s] = best;
                changed = true;
            }
        }
        if (!changed) break;
    }
    std::vector<double> out(n);
    for (Eigen::Index s = 0; s < n; ++s) out[s] = sign * g(s);
    return out;
}

}  // namespace oracle
