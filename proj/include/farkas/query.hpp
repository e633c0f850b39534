#pragma once

#include "farkas/rational.hpp"

#include <string>
#include <vector>

namespace farkas {

enum class Quantifier { Exists, Forall };
enum class Connective { And, Or };
enum class CmpOp { Lt, Le, Gt, Ge };
enum class PredicateKind { Reach, Invariant, MeanPayoff };
enum class MpLimit { Inf, Sup };

enum class QueryFamily { ReachInvariant, MeanPayoff };

struct Predicate {
    PredicateKind kind = PredicateKind::Reach;
    // State label for reach/invariant ('!' prefix = complement); reward name for mean-payoff.
    std::string label;
    MpLimit limit = MpLimit::Inf;
    bool negatedReward = false;
    CmpOp op = CmpOp::Ge;
    Rational bound;

    bool operator==(const Predicate& other) const;
};

struct Query {
    Quantifier quantifier = Quantifier::Exists;
    Connective connective = Connective::And;
    std::vector<Predicate> predicates;

    std::size_t size() const { return predicates.size(); }
    bool operator==(const Query& other) const;
};

bool is_lower(CmpOp op);
bool is_strict(CmpOp op);
CmpOp complement(CmpOp op);  // >= <-> <, > <-> <=
CmpOp mirror(CmpOp op);      // >= <-> <=, > <-> <
const char* op_symbol(CmpOp op);
CmpOp parse_op(const std::string& text);

// Throws for empty queries, mixed families and probability bounds outside [0,1].
QueryFamily validate(const Query& q);

// True if all predicates share one operator.
bool uniform_op(const Query& q);

// Rewrites upper-bounded reach/invariant predicates into lower-bounded ones over the complement.
Query normalize_lower_bounds(const Query& q);

// Dual query: quantifier and connective swapped, operators complemented,
// liminf and limsup exchanged for mean-payoff predicates.
Query negate(const Query& q);

// Rewrites mean-payoff predicates to >= / > by negating rewards and bounds.
Query normalize_mean_payoff(const Query& q);

// p >= 0 over probabilities.
bool trivially_true(const Predicate& p);

std::string label_complement(const std::string& label);

Query parse_query_json(const std::string& text);
Query parse_query_file(const std::string& path);
std::string query_to_json(const Query& q);
std::string describe(const Query& q);

}  // namespace farkas
