#pragma once

#include "farkas/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace farkas {

struct Mec {
    std::vector<StateId> states;    // sorted by state name
    std::vector<ChoiceId> choices;  // internal pairs, ascending
};

// Strongly connected components of the graph given by the allowed choices.
// Returns the component index of every state and the number of components.
std::pair<std::vector<std::size_t>, std::size_t> scc_decomposition(const Mdp& mdp, const std::vector<bool>& allowedChoice,
                                                                   const std::vector<bool>& allowedState);

// Maximal end components, sorted by their smallest state name. Each result is self-checked.
std::vector<Mec> mec_decomposition(const Mdp& mdp);

struct Quotient {
    Mdp mdp;
    std::vector<StateId> iota;                     // original state -> quotient state
    std::vector<Mec> mecs;
    std::vector<StateId> mecState;                 // per MEC: s_C
    std::vector<StateId> botState;                 // per MEC: bottom state
    std::vector<std::vector<ChoiceId>> exitPairs;  // per MEC: original exit choices
    std::vector<std::optional<ChoiceId>> origin;   // quotient choice -> original choice (none for tau/stay)
    std::vector<int> mecOf;                        // original state -> MEC index, -1 outside
    std::vector<int> choiceMec;                    // original choice -> MEC index if internal, -1 otherwise
    std::string tauAction = "tau";
    std::string stayAction = "stay";

    std::vector<bool> bottom_states() const;
};

Quotient mec_quotient(const Mdp& mdp);

// True iff every end component of the MDP lies inside the given set.
bool is_ec_free(const Mdp& mdp, const std::vector<bool>& target);
bool is_ec_free(const ReachForm& form);

}  // namespace farkas
