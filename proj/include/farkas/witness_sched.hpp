#pragma once

#include "farkas/certificate.hpp"
#include "farkas/graph.hpp"
#include "farkas/model.hpp"
#include "farkas/product.hpp"
#include "farkas/query.hpp"

#include <array>
#include <string>
#include <vector>

namespace farkas {

inline constexpr double kExitRateTolerance = 1e-10;

// Probability of every choice of a fixed model; the choices of each state with actions sum to one.
struct MemorylessScheduler {
    std::vector<double> prob;  // indexed by ChoiceId

    double operator[](ChoiceId c) const { return prob[c]; }
};

// Two memory locations: m0 leaves the current MEC, m1 stays in it forever.
struct FmcScheduler {
    static constexpr std::size_t kMemory = 2;

    // Memory distribution conditioned on the initial state.
    std::vector<std::array<double, 2>> initialMemory;
    std::array<std::vector<double>, 2> next;  // per memory: probability per ChoiceId
    // Per state: probability of m0 after arriving in the state's MEC from outside it (unused outside MECs).
    std::vector<double> entryLeave;
    std::vector<int> mecOf;
    std::vector<int> choiceMec;

    // Memory after playing choice c and arriving in state target, starting from memory m.
    std::array<double, 2> update(ChoiceId c, StateId target, std::size_t m) const;
};

// Throws InvalidModel unless the scheduler fits the model and its rows are distributions.
void validate_scheduler(const Mdp& mdp, const MemorylessScheduler& sched, double tol = 1e-9);
void validate_scheduler(const Mdp& mdp, const FmcScheduler& sched, double tol = 1e-9);

// Normalised flow; Dirac on the first action where a state carries no flow.
MemorylessScheduler memoryless_from_flow(const Mdp& mdp, const std::vector<double>& y);
MemorylessScheduler memoryless_from_flow(const Mdp& mdp, const std::vector<Rational>& y);

// Moves a scheduler between models sharing state and action names. Unmatched states get Dirac on the first action.
MemorylessScheduler remap_scheduler(const Mdp& from, const MemorylessScheduler& sched, const Mdp& to);

struct ForallOrWitness {
    MemorylessScheduler scheduler;
    double gamma = 0.0;      // z-weighted reach probability achieved by the scheduler
    double threshold = 0.0;  // z·λ, bounds shifted by the initial goal mass where needed
    bool maximize = false;   // upper bounds: the scheduler maximises, lower bounds: it minimises
};

// Scheduler extremal for the z-weighted reach objective, checked against z·λ. Throws SeparationFailed.
ForallOrWitness forall_or_witness(const ReachForm& form, const std::vector<double>& z, const Query& q,
                                  double tol = kCheckTolerance);
ForallOrWitness forall_or_witness(const ReachForm& form, const Certificate& cert, double tol = kCheckTolerance);

// Expected number of times each choice is played. Choices in bottom SCCs of the induced chain are
// reported as zero when transientOnly, and raise Divergent otherwise if they are reachable.
std::vector<double> expected_frequencies(const Mdp& mdp, const MemorylessScheduler& sched, bool transientOnly = true);

using DenseMatrix = std::vector<std::vector<double>>;

// λ with Pr(reach copy of s) = μ(s) in the chain that leaves s with probability λ(s).
// Throws NotStronglyConnected, NotDistribution, NumericalFailure.
std::vector<double> solve_exit_rates(const DenseMatrix& P, const std::vector<double>& delta,
                                     const std::vector<double>& mu);
std::vector<double> solve_exit_rates(const Mdp& dtmc, const std::vector<double>& delta, const std::vector<double>& mu);

// Probability of leaving through each state in the chain with per-state exit rates λ.
std::vector<double> exit_distribution(const DenseMatrix& P, const std::vector<double>& delta,
                                      const std::vector<double>& lambda);

// Uniform over the internal actions of C, zero elsewhere (entries outside S(C) stay zero).
MemorylessScheduler stay_scheduler(const Mdp& mdp, const Mec& mec);

// Leaves MEC `mec` of the quotient almost surely with the exit distribution σ̂ induces on the quotient.
// sigmaHat and freq refer to the quotient model. Throws NoEntryMass if C is never entered.
MemorylessScheduler leave_scheduler(const Mdp& mdp, const Quotient& quo, std::size_t mec,
                                    const MemorylessScheduler& sigmaHat, const std::vector<double>& freq);

// Two-memory scheduler on the model the quotient was built from.
FmcScheduler assemble_fmc_scheduler(const Mdp& mdp, const Quotient& quo, const MemorylessScheduler& sigmaHat);

// Objective over a state set of the evaluated model.
struct StateObjective {
    enum class Kind { Reach, Invariant, Persist };  // ◇set, □set, ◇□set
    Kind kind = Kind::Reach;
    std::vector<bool> set;
};

std::vector<StateObjective> query_objectives(const Mdp& mdp, const Query& q);
std::vector<StateObjective> goal_objectives(const ReachForm& form);
// Reach and invariant predicates of a reduced query, expressed over the product states.
std::vector<StateObjective> product_objectives(const ReducedQuery& rq);

std::vector<double> evaluate_scheduler(const Mdp& mdp, const MemorylessScheduler& sched,
                                       const std::vector<StateObjective>& objectives);
std::vector<double> evaluate_scheduler(const Mdp& mdp, const FmcScheduler& sched,
                                       const std::vector<StateObjective>& objectives);

// (∃,∧) reach/invariant witness: certificate on the quotient, σ̂ from its flow, assembled on the product.
struct SchedulerWitness {
    ReducedQuery rq;
    Certificate certificate;
    MemorylessScheduler quotientScheduler;  // over rq.quotient.mdp
    FmcScheduler scheduler;                 // over rq.product.mdp
    std::vector<double> quotientValues;
    std::vector<double> values;
};

// Throws UnsupportedQuery unless q is a holding lower-bounded (∃,∧) query; verifies the assembled scheduler.
SchedulerWitness exists_and_scheduler(const Mdp& mdp, const Query& q, const CertifyOptions& options = {},
                                      double tol = 1e-8);

std::string scheduler_to_dot(const Mdp& mdp, const MemorylessScheduler& sched);
std::string scheduler_to_dot(const Mdp& mdp, const FmcScheduler& sched);

}  // namespace farkas
