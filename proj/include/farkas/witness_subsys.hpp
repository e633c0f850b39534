#pragma once

#include "farkas/certificate.hpp"
#include "farkas/model.hpp"
#include "farkas/product.hpp"
#include "farkas/query.hpp"

#include <optional>
#include <string>
#include <vector>

namespace farkas {

inline constexpr double kSupportEpsilon = 1e-9;

// Model the kept states refer to. Plain: the model the query was posed on (mean-payoff, or a given reach form).
enum class WitnessLevel { Plain, Quotient, Product, Original };
enum class Optimality { Proven, Incumbent, Heuristic };

const char* level_name(WitnessLevel l);
const char* optimality_name(Optimality o);

struct WitnessSubsystem {
    WitnessLevel level = WitnessLevel::Plain;
    std::vector<bool> kept;  // over the states of the level's model
    Subsystem subsystem;
    Certificate certificate;  // certificate of the query on the subsystem
    Optimality optimality = Optimality::Heuristic;
    double gap = 0.0;

    std::size_t kept_count() const;
};

struct WitnessOptions {
    CertifyOptions certify;
    // Per-state cost of keeping a state; empty means 1 everywhere.
    std::vector<std::size_t> weights;
    bool warmStart = true;
};

// States carrying certificate mass (entries below eps count as zero).
// Reach certificates refer to the states of the form, mean-payoff ones to the model.
std::vector<bool> state_support(const Mdp& mdp, const Certificate& cert, double eps = kSupportEpsilon);

// Goal states and initial states, which every reach witness keeps.
std::vector<bool> fixed_reach_states(const ReachForm& form);

// Witness from the support of a certificate that holds (no minimality claim).
WitnessSubsystem support_subsystem(const ReachForm& form, const Certificate& cert, const CertifyOptions& options = {});
// Mean-payoff subsystems carry the certificate's objectives as rewards, named obj1.. .
WitnessSubsystem support_subsystem_mp(const Mdp& mdp, const Certificate& cert, const CertifyOptions& options = {});

// Support-minimising MILPs for lower-bounded (∃,∧)/(∀,∨) queries.
WitnessSubsystem milp_min_subsystem(const ReachForm& form, const Query& q, const WitnessOptions& options = {});
WitnessSubsystem milp_min_subsystem_mp(const Mdp& mdp, const Query& q, const WitnessOptions& options = {});

// Quotient weights counting the original states represented by each quotient state.
std::vector<std::size_t> quotient_weights(const ReducedQuery& rq);

// Lifts a quotient-level witness to the original model and re-verifies the query there.
WitnessSubsystem transfer_subsystem(const WitnessSubsystem& ws, const Mdp& original, const Query& query,
                                    const ReducedQuery& rq, const CertifyOptions& options = {});

// Certifies a lower-bounded reach/invariant query on an arbitrary MDP through product and quotient.
CertifyResult certify_reach_inv(const Mdp& mdp, const Query& q, const CertifyOptions& options = {});

// Smallest total weight of a kept set certifying q, by exhaustive enumeration over the free states.
std::optional<std::size_t> brute_force_min_subsystem(const ReachForm& form, const Query& q,
                                                     const std::vector<std::size_t>& weights = {});

}  // namespace farkas
