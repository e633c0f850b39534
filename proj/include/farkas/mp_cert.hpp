#pragma once

#include "farkas/certificate.hpp"
#include "farkas/model.hpp"
#include "farkas/query.hpp"

#include <vector>

namespace farkas {

// Reward vectors indexed [objective][choice].
using RewardMatrix = std::vector<std::vector<Rational>>;

// Per objective: the smallest reward over all state-action pairs.
std::vector<Rational> build_r_min(const RewardMatrix& rewards);

// Rewards of the query's predicates, negated where the predicate says so.
RewardMatrix query_rewards(const Mdp& mdp, const Query& q);

// (∃,∧) polyhedron over x, y >= 0 on pairs and z >= 0 on states.
// Strict: the objective rows become strict, certifying E[mp] > λ.
CertSystem build_Hmp(const Mdp& mdp, const RewardMatrix& rewards, const std::vector<Rational>& lambda,
                     bool strict = false);

// (∀,∨) polyhedron over gain g, bias b (free, per state) and z >= 0 with Σz = 1.
// Strict: the initial row becomes strict.
CertSystem build_Fmp(const Mdp& mdp, const RewardMatrix& rewards, const std::vector<Rational>& lambda,
                     bool strict = false);

// Accepts mean-payoff queries whose predicates are all >= or all > (after normalize_mean_payoff),
// of type (∃,∧) or (∀,∨); single-predicate (∃,∨)/(∀,∧) queries are treated alike.
void validate_mp_query(const Mdp& mdp, const Query& normalized);

// The system a certificate for the normalized query satisfies.
CertSystem mp_certificate_system(const Mdp& mdp, const Query& normalized);

std::optional<Certificate> find_mp_certificate(const Mdp& mdp, const Query& normalized,
                                               const CertifyOptions& options = {});

// Decides a mean-payoff query. The certificate proves the normalized query or its normalized negation.
// Strict user bounds raise StrictUnsupported.
CertifyResult certify_mp(const Mdp& mdp, const Query& q, const CertifyOptions& options = {});

CheckResult check_mp_certificate(const Mdp& mdp, const Certificate& cert, const CheckOptions& options = {});

// Largest x entry outside all MECs of an (∃,∧) certificate.
double recurrent_leak(const Mdp& mdp, const Certificate& cert);

}  // namespace farkas
