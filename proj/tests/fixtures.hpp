#pragma once

#include "farkas/model.hpp"
#include "farkas/query.hpp"

#include <string>

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(FARKAS_TEST_DATA) + "/" + name; }

inline farkas::Mdp fig2() { return farkas::parse_model_file(data_path("fig2.mdp")); }
inline farkas::Query fig2_forall_or() { return farkas::parse_query_file(data_path("fig2_forall_or.json")); }
inline farkas::Query fig2_exists_and() { return farkas::parse_query_file(data_path("fig2_exists_and.json")); }

// s0 with alpha: 0.7 -> t, 0.3 -> b and beta: 0.2 -> t, 0.8 -> b.
inline farkas::Mdp m1() { return farkas::parse_model_file(data_path("m1.mdp")); }

inline farkas::ReachForm m1_form() {
    auto m = m1();
    return farkas::make_reach_form(m, m.state_set("F"), {m.state_set("t")});
}

inline farkas::Query reach_query(farkas::Quantifier q, farkas::Connective c,
                                 std::initializer_list<std::pair<farkas::CmpOp, const char*>> preds) {
    farkas::Query out;
    out.quantifier = q;
    out.connective = c;
    int i = 0;
    for (const auto& [op, bound] : preds) {
        farkas::Predicate p;
        p.kind = farkas::PredicateKind::Reach;
        p.label = "G" + std::to_string(++i);
        p.op = op;
        p.bound = farkas::parse_rational(bound);
        out.predicates.push_back(p);
    }
    return out;
}

// Mean-payoff query over rewards r1.. with the given limit.
inline farkas::Query mp_query(farkas::Quantifier q, farkas::Connective c,
                              std::initializer_list<std::pair<farkas::CmpOp, const char*>> preds,
                              farkas::MpLimit limit = farkas::MpLimit::Inf) {
    farkas::Query out = reach_query(q, c, preds);
    int i = 0;
    for (auto& p : out.predicates) {
        p.kind = farkas::PredicateKind::MeanPayoff;
        p.label = "r" + std::to_string(++i);
        p.limit = limit;
    }
    return out;
}

}  // namespace fixtures
