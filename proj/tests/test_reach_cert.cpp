#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include "farkas/errors.hpp"
#include "farkas/graph.hpp"
#include "farkas/product.hpp"
#include "farkas/reach_cert.hpp"

#include <doctest.h>

using namespace farkas;
using fixtures::reach_query;

namespace {

bool feasible(const CertSystem& cs) {
    auto out = solve(cs.sys);
    return out.status == SolveStatus::Optimal && check_assignment(cs.sys, to_rationals(out.values)).ok;
}

}  // namespace

TEST_CASE("(exists,and) systems on M1") {
    auto form = fixtures::m1_form();
    CHECK(feasible(build_exists_and(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.7"}}))));
    CHECK(!feasible(build_exists_and(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.71"}}))));
    auto zero = build_exists_and(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0"}}));
    CHECK(check_assignment(zero.sys, std::vector<Rational>(2)).ok);
}

TEST_CASE("(forall,or) systems on M1") {
    auto form = fixtures::m1_form();
    auto holds = build_forall_or(form, reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "0.2"}}));
    CHECK(feasible(holds));
    // Hand certificate: z = 1, x(s0) = 0.2.
    std::vector<Rational> hand(holds.sys.num_vars());
    for (std::size_t v = 0; v < hand.size(); ++v) {
        if (holds.refs[v]->vec == "x") hand[v] = Rational(1, 5);
        if (holds.refs[v]->vec == "z") hand[v] = 1;
    }
    CHECK(check_assignment(holds.sys, hand, {CheckMode::Exact}).ok);
    CHECK(!feasible(build_forall_or(form, reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "0.3"}}))));
}

TEST_CASE("(exists,or) and (forall,and) systems on M1") {
    auto form = make_reach_form(fixtures::m1(), fixtures::m1().state_set("F"),
                                {fixtures::m1().state_set("t"), fixtures::m1().state_set("t")});
    auto both = reach_query(Quantifier::Forall, Connective::And, {{CmpOp::Ge, "0.2"}, {CmpOp::Le, "0.7"}});
    CHECK(feasible(build_forall_and(form, both)));
    auto tooHigh = reach_query(Quantifier::Forall, Connective::And, {{CmpOp::Ge, "0.5"}, {CmpOp::Le, "0.7"}});
    CHECK(!feasible(build_forall_and(form, tooHigh)));

    auto disj = reach_query(Quantifier::Exists, Connective::Or, {{CmpOp::Ge, "0"}, {CmpOp::Ge, "0.9"}});
    auto cert = find_certificate(form, disj);
    REQUIRE(cert);
    CHECK(cert->variant == CertVariant::ExistsOr);
    CHECK(cert->disjunct == 0);
    for (const auto& v : cert->at("y")) CHECK(v == 0);
}

TEST_CASE("certify decides M1 queries") {
    auto form = fixtures::m1_form();
    auto r = certify(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.7"}}));
    CHECK(r.holds);
    CHECK(r.certificate.variant == CertVariant::ExistsAnd);
    CHECK(check_certificate(form, r.certificate).ok);

    auto v = certify(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.8"}}));
    CHECK(!v.holds);
    CHECK(v.forNegation);
    CHECK(v.certificate.variant == CertVariant::ForallOr);
    CHECK(v.certificate.query.predicates[0].op == CmpOp::Lt);
    CHECK(check_certificate(form, v.certificate).ok);
}

TEST_CASE("checker rejects a zeroed separating vector") {
    auto form = fixtures::m1_form();
    auto r = certify(form, reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Le, "0.7"}}));
    REQUIRE(r.holds);
    auto bad = r.certificate;
    for (auto& z : bad.vectors.at("z").values) z = 0;
    auto res = check_certificate(form, bad);
    CHECK(!res.ok);
    bool norm = false;
    for (const auto& v : res.violations) norm = norm || v.what == "norm";
    CHECK(norm);
}

TEST_CASE("exact certificates") {
    auto form = fixtures::m1_form();
    CertifyOptions opts;
    opts.exact = true;
    auto r = certify(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.7"}}), opts);
    REQUIRE(r.holds);
    CHECK(r.certificate.mode == CheckMode::Exact);
    CHECK(check_certificate(form, r.certificate).ok);
}

TEST_CASE("certificate JSON round trip") {
    auto form = fixtures::m1_form();
    auto r = certify(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.5"}}));
    auto text = certificate_to_json(r.certificate, form.mdp);
    auto back = certificate_from_json(text, form.mdp);
    CHECK(back.query == r.certificate.query);
    CHECK(back.at("y") == r.certificate.at("y"));
    CHECK(check_certificate(form, back).ok);
    // A certificate for another bound is rejected.
    back.query.predicates[0].bound = Rational(99, 100);
    CHECK(!check_certificate(form, back).ok);
}

TEST_CASE("EC-free requirements") {
    auto m = parse_model_string("@initial a\na x b 1\nb x a 1\nb y t 1\nt x t 1\n@label F t\n");
    auto form = make_reach_form(m, m.state_set("F"), {m.state_set("F")});
    CHECK_THROWS_AS(build_exists_and(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Le, "0.5"}})),
                    Error);
    CHECK_THROWS_AS(build_forall_or(form, reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "0.5"}})), Error);
    CHECK_NOTHROW(build_exists_and(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.5"}})));
    CHECK_NOTHROW(build_forall_or(form, reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Le, "0.5"}})));
    // Staying in the cycle forever is possible: the minimum is 0.
    auto r = certify(form, reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Le, "1/2"}}));
    CHECK(!r.holds);
}

TEST_CASE("mixed operators are rejected where the systems need one") {
    auto form = make_reach_form(fixtures::m1(), fixtures::m1().state_set("F"),
                                {fixtures::m1().state_set("t"), fixtures::m1().state_set("t")});
    CHECK_THROWS_AS(certify(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.1"}, {CmpOp::Gt, "0.1"}})),
                    Error);
}

TEST_CASE("running example reduced (forall,or) query holds") {
    auto m = fixtures::fig2();
    auto rq = reduce_query(m, normalize_lower_bounds(fixtures::fig2_forall_or()));
    auto r = certify(rq.form, rq.query);
    CHECK(r.holds);
    CHECK(r.certificate.variant == CertVariant::ForallOr);
    CHECK(check_certificate(rq.form, r.certificate).ok);
}

TEST_CASE("single-objective verdicts agree with value iteration") {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 40; ++i) {
        auto form = gen::random_reach_form(rng, 8, 3, 1, true);
        double vmax = oracle::initial_value(form.mdp, oracle::vi_reach(form.mdp, form.goals[0], true));
        double vmin = oracle::initial_value(form.mdp, oracle::vi_reach(form.mdp, form.goals[0], false));
        Rational lambda = gen::grid_bound(rng);
        double l = lambda.get_d();
        if (std::abs(vmax - l) < 1e-6 || std::abs(vmin - l) < 1e-6) continue;
        Query ex = reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0"}});
        ex.predicates[0].bound = lambda;
        CHECK(certify(form, ex).holds == (vmax >= l));
        Query all = ex;
        all.quantifier = Quantifier::Forall;
        all.connective = Connective::Or;
        CHECK(certify(form, all).holds == (vmin >= l));
    }
}
