#pragma once

#include "farkas/certificate.hpp"
#include "farkas/model.hpp"
#include "farkas/query.hpp"

#include <vector>

namespace farkas {

// Queries over a reachability form: predicate i refers to goal set i of the form,
// predicate labels are informational only.

// Rejects predicate/goal count mismatches, non-reach predicates and, for (∃,∧)/(∀,∨),
// operators that differ between predicates.
void validate_reach_query(const ReachForm& form, const Query& q);

// Whether the Farkas conditions for q are only complete on EC-free models.
bool requires_ec_free(const Query& q);
bool trivially_true(const Query& q);

// Initial mass already inside each goal set.
std::vector<Rational> initial_goal_mass(const ReachForm& form);

// Single (∃,∧)-type system over the given predicate subset (all predicates if empty).
CertSystem build_exists_and(const ReachForm& form, const Query& q);
CertSystem build_exists_single(const ReachForm& form, const Query& q, std::size_t i);
CertSystem build_forall_or(const ReachForm& form, const Query& q);
CertSystem build_forall_and(const ReachForm& form, const Query& q);

// The system whose feasibility the certificate witnesses.
CertSystem certificate_system(const ReachForm& form, const Query& q, std::size_t disjunct = 0);

// Finds a certificate for q itself, or nothing if the systems are infeasible.
std::optional<Certificate> find_certificate(const ReachForm& form, const Query& q, const CertifyOptions& options = {});

// Decides q: certificate for q (holds) or for negate(q) (violated). Throws SolverUnknown otherwise.
CertifyResult certify(const ReachForm& form, const Query& q, const CertifyOptions& options = {});

// Pure re-evaluation of the Farkas conditions for the certificate's query.
CheckResult check_certificate(const ReachForm& form, const Certificate& cert, const CheckOptions& options = {});

}  // namespace farkas
