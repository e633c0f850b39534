#include "farkas/model.hpp"

#include "farkas/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace farkas {

// ---- Mdp ----

std::optional<StateId> Mdp::find_state(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<ChoiceId> Mdp::find_choice(StateId s, std::string_view action) const {
    for (ChoiceId c = choice_begin(s); c < choice_end(s); ++c) {
        if (choices_[c].action == action) return c;
    }
    return std::nullopt;
}

std::string Mdp::choice_label(ChoiceId c) const {
    return names_[choices_[c].state] + ":" + choices_[c].action;
}

std::vector<double> Mdp::initial_vector() const {
    std::vector<double> v(num_states(), 0.0);
    for (const auto& [s, p] : initial_) v[s] += p.get_d();
    return v;
}

std::optional<StateId> Mdp::initial_state() const {
    if (initial_.size() == 1) return initial_.front().first;
    return std::nullopt;
}

std::vector<bool> Mdp::state_set(std::string_view label) const {
    bool complement = false;
    while (!label.empty() && label.front() == '!') {
        complement = !complement;
        label.remove_prefix(1);
    }
    auto it = labels_.find(label);
    if (it == labels_.end()) throw Error(ErrorCode::UnknownLabel, "no label '" + std::string(label) + "'");
    std::vector<bool> set(num_states(), complement);
    for (StateId s : it->second) set[s] = !complement;
    return set;
}

std::optional<std::size_t> Mdp::find_reward(std::string_view name) const {
    for (std::size_t i = 0; i < rewards_.size(); ++i) {
        if (rewards_[i].name == name) return i;
    }
    return std::nullopt;
}

bool Mdp::is_dtmc() const {
    for (StateId s = 0; s < num_states(); ++s) {
        if (num_choices(s) != 1) return false;
    }
    return true;
}

// ---- MdpBuilder ----

MdpBuilder MdpBuilder::from(const Mdp& mdp) {
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
    for (const auto& r : mdp.rewards()) {
        b.declare_reward(r.name);
        for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
            if (r.values[c] != 0) b.set_reward(r.name, mdp.choice(c).state, mdp.choice(c).action, r.values[c]);
        }
    }
    return b;
}

StateId MdpBuilder::add_state(std::string_view name) {
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    auto id = static_cast<StateId>(names_.size());
    names_.emplace_back(name);
    index_.emplace(std::string(name), id);
    choices_.emplace_back();
    return id;
}

std::optional<StateId> MdpBuilder::find_state(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void MdpBuilder::add_transition(StateId s, std::string_view action, StateId target, const Rational& p) {
    auto& dist = choices_.at(s)[std::string(action)];
    auto [it, inserted] = dist.emplace(target, p);
    if (!inserted) it->second += p;
}

void MdpBuilder::add_choice(StateId s, std::string_view action, const Distribution& dist) {
    auto& d = choices_.at(s)[std::string(action)];
    for (const auto& [t, p] : dist) {
        auto [it, inserted] = d.emplace(t, p);
        if (!inserted) it->second += p;
    }
}

bool MdpBuilder::has_choice(StateId s, std::string_view action) const {
    return choices_.at(s).find(action) != choices_.at(s).end();
}

void MdpBuilder::add_initial(StateId s, const Rational& p) {
    auto [it, inserted] = initial_.emplace(s, p);
    if (!inserted) it->second += p;
}

void MdpBuilder::declare_label(std::string_view name) { labels_[std::string(name)]; }

void MdpBuilder::add_label(std::string_view name, StateId s) {
    auto& states = labels_[std::string(name)];
    if (std::find(states.begin(), states.end(), s) == states.end()) states.push_back(s);
}

void MdpBuilder::declare_reward(std::string_view name) {
    if (rewards_.find(name) == rewards_.end()) {
        rewardOrder_.emplace_back(name);
        rewards_[std::string(name)];
    }
}

void MdpBuilder::set_reward(std::string_view name, StateId s, std::string_view action, const Rational& value) {
    declare_reward(name);
    rewards_.find(name)->second[{s, std::string(action)}] = value;
}

Mdp MdpBuilder::build(const BuildOptions& options) const {
    Mdp m;
    m.names_ = names_;
    m.index_ = index_;
    m.offsets_.assign(1, 0);
    for (StateId s = 0; s < names_.size(); ++s) {
        const auto& acts = choices_[s];
        if (acts.empty() && !options.allowDeadlocks) {
            throw Error(ErrorCode::InvalidModel, "state '" + names_[s] + "' has no enabled action");
        }
        for (const auto& [action, dist] : acts) {
            Choice c{s, action, {}};
            Rational sum;
            for (const auto& [t, p] : dist) {
                if (p < 0) {
                    throw Error(ErrorCode::InvalidModel,
                                "negative probability at " + names_[s] + ":" + action);
                }
                if (p == 0) continue;
                c.dist.push_back({t, p, p.get_d()});
                sum += p;
            }
            bool ok = options.exact ? sum == 1 : std::abs(sum.get_d() - 1.0) <= options.tolerance;
            if (!ok) {
                throw Error(ErrorCode::InvalidModel, "distribution of " + names_[s] + ":" + action +
                                                         " sums to " + to_string(sum));
            }
            m.choices_.push_back(std::move(c));
        }
        m.offsets_.push_back(static_cast<ChoiceId>(m.choices_.size()));
    }

    if (initial_.empty()) throw Error(ErrorCode::InvalidModel, "no initial state");
    Rational total;
    for (const auto& [s, p] : initial_) {
        if (p < 0) throw Error(ErrorCode::InvalidModel, "negative initial probability");
        if (p == 0) continue;
        m.initial_.emplace_back(s, p);
        total += p;
    }
    bool initOk = options.exact ? total == 1 : std::abs(total.get_d() - 1.0) <= options.tolerance;
    if (!initOk) throw Error(ErrorCode::InvalidModel, "initial distribution sums to " + to_string(total));

    m.labels_ = labels_;
    for (auto& [name, states] : m.labels_) std::sort(states.begin(), states.end());

    for (const auto& name : rewardOrder_) {
        RewardVector r{name, std::vector<Rational>(m.choices_.size())};
        for (const auto& [key, value] : rewards_.find(name)->second) {
            auto c = m.find_choice(key.first, key.second);
            if (!c) {
                throw Error(ErrorCode::InvalidModel, "reward '" + name + "' on unknown pair " +
                                                         names_[key.first] + ":" + key.second);
            }
            r.values[*c] = value;
        }
        m.rewards_.push_back(std::move(r));
    }
    return m;
}

// ---- subsystems ----

namespace {

std::string fresh_name(const Mdp& mdp, std::string base) {
    while (mdp.find_state(base)) base += "'";
    return base;
}

}  // namespace

Subsystem induced_subsystem(const Mdp& mdp, const std::vector<bool>& kept) {
    const auto n = mdp.num_states();
    for (const auto& [s, p] : mdp.initial()) {
        if (!kept[s]) {
            throw Error(ErrorCode::InitialStateDropped, "initial state '" + mdp.state_name(s) + "' not kept");
        }
    }
    Subsystem sub;
    sub.toSub.assign(n, std::nullopt);
    MdpBuilder b;
    for (StateId s = 0; s < n; ++s) {
        if (!kept[s]) continue;
        sub.toSub[s] = b.add_state(mdp.state_name(s));
        sub.kept.push_back(s);
    }
    sub.bot = b.add_state(fresh_name(mdp, "bot"));
    const std::string loop = "loop";

    for (StateId s : sub.kept) {
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            const auto& ch = mdp.choice(c);
            for (const auto& t : ch.dist) {
                b.add_transition(*sub.toSub[s], ch.action, kept[t.target] ? *sub.toSub[t.target] : sub.bot, t.prob);
            }
        }
    }
    b.add_transition(sub.bot, loop, sub.bot, Rational(1));
    for (const auto& [s, p] : mdp.initial()) b.add_initial(*sub.toSub[s], p);
    for (const auto& [name, states] : mdp.labels()) {
        b.declare_label(name);
        for (StateId s : states) {
            if (kept[s]) b.add_label(name, *sub.toSub[s]);
        }
    }
    for (const auto& r : mdp.rewards()) {
        b.declare_reward(r.name);
        Rational minimum;
        bool first = true;
        for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
            if (first || r.values[c] < minimum) minimum = r.values[c];
            first = false;
        }
        for (StateId s : sub.kept) {
            for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
                if (r.values[c] != 0) b.set_reward(r.name, *sub.toSub[s], mdp.choice(c).action, r.values[c]);
            }
        }
        b.set_reward(r.name, sub.bot, loop, minimum);
    }
    BuildOptions opts;
    opts.allowDeadlocks = true;
    sub.mdp = b.build(opts);
    return sub;
}

// ---- reachability form ----

ReachForm make_reach_form(const Mdp& mdp, const std::vector<bool>& target,
                          const std::vector<std::vector<bool>>& goals) {
    const auto n = mdp.num_states();
    if (target.size() != n) throw Error(ErrorCode::ShapeMismatch, "target set has wrong size");
    for (const auto& g : goals) {
        if (g.size() != n) throw Error(ErrorCode::ShapeMismatch, "goal set has wrong size");
        for (StateId s = 0; s < n; ++s) {
            if (g[s] && !target[s]) {
                throw Error(ErrorCode::InvalidModel, "goal state '" + mdp.state_name(s) + "' outside F");
            }
        }
    }
    MdpBuilder b;
    for (StateId s = 0; s < n; ++s) b.add_state(mdp.state_name(s));
    for (StateId s = 0; s < n; ++s) {
        if (target[s]) continue;
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            const auto& ch = mdp.choice(c);
            for (const auto& t : ch.dist) b.add_transition(s, ch.action, t.target, t.prob);
        }
    }
    for (const auto& [s, p] : mdp.initial()) b.add_initial(s, p);
    for (const auto& [name, states] : mdp.labels()) {
        b.declare_label(name);
        for (StateId s : states) b.add_label(name, s);
    }
    for (const auto& r : mdp.rewards()) {
        b.declare_reward(r.name);
        for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
            const auto& ch = mdp.choice(c);
            if (!target[ch.state] && r.values[c] != 0) b.set_reward(r.name, ch.state, ch.action, r.values[c]);
        }
    }
    BuildOptions opts;
    opts.allowDeadlocks = true;
    return ReachForm{b.build(opts), target, goals};
}

ReachSubsystem reach_subsystem(const ReachForm& form, const std::vector<bool>& kept) {
    Subsystem sub = induced_subsystem(form.mdp, kept);
    const auto m = sub.mdp.num_states();
    std::vector<bool> target(m, false);
    std::vector<std::vector<bool>> goals(form.k(), std::vector<bool>(m, false));
    for (StateId s : sub.kept) {
        StateId t = *sub.toSub[s];
        target[t] = form.target[s];
        for (std::size_t i = 0; i < form.k(); ++i) goals[i][t] = form.goals[i][s];
    }
    target[sub.bot] = true;
    ReachForm rf = make_reach_form(sub.mdp, target, goals);
    return ReachSubsystem{std::move(rf), std::move(sub)};
}

std::vector<bool> can_reach(const Mdp& mdp, const std::vector<bool>& set) {
    const auto n = mdp.num_states();
    std::vector<std::vector<StateId>> pred(n);
    for (const auto& ch : mdp.choices()) {
        for (const auto& t : ch.dist) pred[t.target].push_back(ch.state);
    }
    std::vector<bool> reach(set);
    std::deque<StateId> queue;
    for (StateId s = 0; s < n; ++s) {
        if (reach[s]) queue.push_back(s);
    }
    while (!queue.empty()) {
        StateId s = queue.front();
        queue.pop_front();
        for (StateId p : pred[s]) {
            if (!reach[p]) {
                reach[p] = true;
                queue.push_back(p);
            }
        }
    }
    return reach;
}

ReachFormReport check_reachability_form(const Mdp& mdp, const std::vector<bool>& target) {
    ReachFormReport report;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (!target[s]) continue;
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            const auto& d = mdp.choice(c).dist;
            if (!(d.size() == 1 && d.front().target == s)) {
                report.nonAbsorbingTargets.push_back(s);
                break;
            }
        }
    }
    auto reach = can_reach(mdp, target);
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        if (!reach[s]) report.cannotReachTarget.push_back(s);
    }
    return report;
}

ReachMatrices build_reach_matrices(const ReachForm& form) {
    const auto& mdp = form.mdp;
    ReachMatrices mats;
    mats.A.resize(mdp.num_choices());
    mats.T.assign(mdp.num_choices(), std::vector<Rational>(form.k()));
    for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
        const auto& ch = mdp.choice(c);
        std::map<StateId, Rational> row;
        row[ch.state] += 1;
        for (const auto& t : ch.dist) {
            if (!form.target[t.target]) {
                row[t.target] -= t.prob;
            }
            for (std::size_t i = 0; i < form.k(); ++i) {
                if (form.goals[i][t.target]) mats.T[c][i] += t.prob;
            }
        }
        for (auto& [s, v] : row) {
            if (v != 0) mats.A[c].emplace_back(s, v);
        }
    }
    return mats;
}

}  // namespace farkas
