#pragma once

#include "farkas/rational.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace farkas {

using StateId = std::uint32_t;
using ChoiceId = std::uint32_t;

inline constexpr double kStochasticTolerance = 1e-9;

struct Transition {
    StateId target;
    Rational prob;
    double p;  // cached double value of prob
};

// One enabled state-action pair.
struct Choice {
    StateId state;
    std::string action;
    std::vector<Transition> dist;
};

struct RewardVector {
    std::string name;
    std::vector<Rational> values;  // indexed by ChoiceId
};

using Distribution = std::vector<std::pair<StateId, Rational>>;

class MdpBuilder;

// Immutable explicit MDP. Choices are grouped by state and sorted by action name.
class Mdp {
public:
    Mdp() = default;

    std::size_t num_states() const { return names_.size(); }
    std::size_t num_choices() const { return choices_.size(); }
    std::size_t num_choices(StateId s) const { return offsets_[s + 1] - offsets_[s]; }

    const std::string& state_name(StateId s) const { return names_[s]; }
    const std::vector<std::string>& state_names() const { return names_; }
    std::optional<StateId> find_state(std::string_view name) const;

    ChoiceId choice_begin(StateId s) const { return offsets_[s]; }
    ChoiceId choice_end(StateId s) const { return offsets_[s + 1]; }
    const Choice& choice(ChoiceId c) const { return choices_[c]; }
    const std::vector<Choice>& choices() const { return choices_; }
    std::optional<ChoiceId> find_choice(StateId s, std::string_view action) const;
    std::string choice_label(ChoiceId c) const;

    const Distribution& initial() const { return initial_; }
    std::vector<double> initial_vector() const;
    // The initial state when the initial distribution is Dirac.
    std::optional<StateId> initial_state() const;

    const std::map<std::string, std::vector<StateId>, std::less<>>& labels() const { return labels_; }
    // Resolves a label; a leading '!' denotes the complement.
    std::vector<bool> state_set(std::string_view label) const;

    const std::vector<RewardVector>& rewards() const { return rewards_; }
    std::optional<std::size_t> find_reward(std::string_view name) const;

    bool is_dtmc() const;

private:
    friend class MdpBuilder;

    std::vector<std::string> names_;
    std::map<std::string, StateId, std::less<>> index_;
    std::vector<ChoiceId> offsets_{0};
    std::vector<Choice> choices_;
    Distribution initial_;
    std::map<std::string, std::vector<StateId>, std::less<>> labels_;
    std::vector<RewardVector> rewards_;
};

struct BuildOptions {
    // States without enabled actions are allowed (terminal states of a reachability form).
    bool allowDeadlocks = false;
    // Require distributions to sum to exactly one.
    bool exact = false;
    double tolerance = kStochasticTolerance;
};

class MdpBuilder {
public:
    MdpBuilder() = default;
    // Builder pre-filled with every state, choice, label and reward of an existing model.
    static MdpBuilder from(const Mdp& mdp);

    StateId add_state(std::string_view name);
    std::optional<StateId> find_state(std::string_view name) const;
    std::size_t num_states() const { return names_.size(); }

    // Probabilities for repeated (state, action, successor) triples accumulate.
    void add_transition(StateId s, std::string_view action, StateId target, const Rational& p);
    void add_choice(StateId s, std::string_view action, const Distribution& dist);
    bool has_choice(StateId s, std::string_view action) const;

    void add_initial(StateId s, const Rational& p = Rational(1));
    void declare_label(std::string_view name);
    void add_label(std::string_view name, StateId s);
    void declare_reward(std::string_view name);
    void set_reward(std::string_view name, StateId s, std::string_view action, const Rational& value);

    Mdp build(const BuildOptions& options = {}) const;

private:
    std::vector<std::string> names_;
    std::map<std::string, StateId, std::less<>> index_;
    std::vector<std::map<std::string, std::map<StateId, Rational>, std::less<>>> choices_;
    std::map<StateId, Rational> initial_;
    std::map<std::string, std::vector<StateId>, std::less<>> labels_;
    std::vector<std::string> rewardOrder_;
    std::map<std::string, std::map<std::pair<StateId, std::string>, Rational>, std::less<>> rewards_;
};

// ---- text format ----

Mdp parse_model(std::istream& in, const std::string& source = "<input>", const BuildOptions& options = {});
Mdp parse_model_string(std::string_view text, const BuildOptions& options = {});
Mdp parse_model_file(const std::string& path, const BuildOptions& options = {});
void write_model(const Mdp& mdp, std::ostream& out);
std::string model_to_string(const Mdp& mdp);

// ---- subsystems ----

struct Subsystem {
    Mdp mdp;
    std::vector<StateId> kept;                  // original ids, ascending
    std::vector<std::optional<StateId>> toSub;  // original id -> subsystem id
    StateId bot = 0;
};

// Keeps the given states, redirects all other mass to a fresh absorbing sink.
// The sink has one self-loop whose reward is the minimum over the original pairs.
Subsystem induced_subsystem(const Mdp& mdp, const std::vector<bool>& kept);

// ---- reachability form ----

// F-states carry no enabled actions; goals are subsets of F.
struct ReachForm {
    Mdp mdp;
    std::vector<bool> target;
    std::vector<std::vector<bool>> goals;

    std::size_t k() const { return goals.size(); }
};

// Strips the actions of all F-states. Throws InvalidModel if some goal is not inside F.
ReachForm make_reach_form(const Mdp& mdp, const std::vector<bool>& target,
                          const std::vector<std::vector<bool>>& goals);

// Subsystem of a reachability form: kept F-states stay targets, the sink joins F.
struct ReachSubsystem {
    ReachForm form;
    Subsystem sub;
};
ReachSubsystem reach_subsystem(const ReachForm& form, const std::vector<bool>& kept);

struct ReachFormReport {
    std::vector<StateId> nonAbsorbingTargets;
    std::vector<StateId> cannotReachTarget;
    bool ok() const { return nonAbsorbingTargets.empty() && cannotReachTarget.empty(); }
};

ReachFormReport check_reachability_form(const Mdp& mdp, const std::vector<bool>& target);

struct ReachMatrices {
    // A((s,a), s') = [s = s'] - P(s,a,s') restricted to non-target columns, sparse per row.
    std::vector<std::vector<std::pair<StateId, Rational>>> A;
    // T((s,a), i) = P(s, a, G_i).
    std::vector<std::vector<Rational>> T;
};

ReachMatrices build_reach_matrices(const ReachForm& form);

// States from which some scheduler reaches the given set with positive probability.
std::vector<bool> can_reach(const Mdp& mdp, const std::vector<bool>& set);

}  // namespace farkas
