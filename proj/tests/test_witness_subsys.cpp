#include "fixtures.hpp"
#include "generators.hpp"

#include "farkas/errors.hpp"
#include "farkas/mp_cert.hpp"
#include "farkas/reach_cert.hpp"
#include "farkas/witness_subsys.hpp"

#include <doctest.h>

using namespace farkas;
using fixtures::mp_query;
using fixtures::reach_query;

namespace {

std::vector<std::string> kept_names(const Mdp& m, const std::vector<bool>& kept) {
    std::vector<std::string> out;
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (kept[s]) out.push_back(m.state_name(s));
    }
    return out;
}

bool has(const std::vector<std::string>& v, const std::string& x) { return std::find(v.begin(), v.end(), x) != v.end(); }

// s0 -> s1 -> ... -> s4 -> t, each step reaching the next state surely; F = {t, u}.
ReachForm chain5() {
    Mdp m = parse_model_string(
        "@initial s0\ns0 a s1 1\ns1 a s2 1\ns2 a s3 1\ns3 a s4 1\ns4 a t 1\ns0 b u 1\n@label t t\n@label F t u\n",
        BuildOptions{true});
    return make_reach_form(m, m.state_set("F"), {m.state_set("t")});
}

}  // namespace

TEST_CASE("state support of small certificates") {
    auto form = fixtures::m1_form();
    Certificate cert;
    cert.variant = CertVariant::ExistsAnd;
    cert.vectors["y"] = CertVector{Domain::Choice, {Rational(1), Rational(0)}};
    auto supp = state_support(form.mdp, cert);
    CHECK(supp[*form.mdp.find_state("s0")]);
    CHECK(std::count(supp.begin(), supp.end(), true) == 1);

    Mdp two = parse_model_string("@initial s\ns lo s 1\ns hi s 1\n@reward r1 s lo 0\n@reward r1 s hi 10\n");
    auto res = certify_mp(two, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "0"}}));
    REQUIRE(res.holds);
    Certificate floorCert = res.certificate;
    floorCert.vectors["g"].values = {Rational(0)};
    floorCert.vectors["b"].values = {Rational(0)};
    auto mpSupp = state_support(two, floorCert);
    CHECK(std::count(mpSupp.begin(), mpSupp.end(), true) == 0);
}

TEST_CASE("Running example witnessing subsystem at quotient and original level") {
    Mdp n = fixtures::fig2();
    Query q = fixtures::fig2_forall_or();
    ReducedQuery rq = reduce_query(n, normalize_lower_bounds(q));
    auto res = certify(rq.form, rq.query);
    REQUIRE(res.holds);
    CHECK(res.certificate.variant == CertVariant::ForallOr);

    auto supp = support_subsystem(rq.form, res.certificate);
    auto suppNames = kept_names(rq.form.mdp, supp.kept);
    CHECK(has(suppNames, "s0|0|0"));

    auto ws = milp_min_subsystem(rq.form, rq.query);
    ws.level = WitnessLevel::Quotient;
    CHECK(ws.optimality == Optimality::Proven);
    CHECK(ws.kept_count() == 5);
    auto names = kept_names(rq.form.mdp, ws.kept);
    CHECK(!has(names, "mec:s3|0|1"));
    CHECK(!has(names, "bot:s3|0|1"));
    CHECK(has(names, "s0|0|0"));
    CHECK(has(names, "mec:s1|0|0"));
    CHECK(has(names, "mec:s1|1|1"));
    CHECK(brute_force_min_subsystem(rq.form, rq.query) == std::optional<std::size_t>(5));

    auto orig = transfer_subsystem(ws, n, q, rq);
    auto origNames = kept_names(n, orig.kept);
    CHECK(origNames == std::vector<std::string>{"s0", "s1", "s2"});
    CHECK(orig.level == WitnessLevel::Original);
}

TEST_CASE("trivial bounds keep only the fixed states") {
    auto form = chain5();
    auto q = reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0"}});
    auto ws = milp_min_subsystem(form, q);
    CHECK(ws.kept == fixed_reach_states(form));
    auto qf = reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "0"}});
    CHECK(milp_min_subsystem(form, qf).kept == fixed_reach_states(form));
}

TEST_CASE("chain to the target needs every state") {
    auto form = chain5();
    auto q = reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "1"}});
    auto ws = milp_min_subsystem(form, q);
    CHECK(ws.optimality == Optimality::Proven);
    for (const char* s : {"s0", "s1", "s2", "s3", "s4", "t"}) CHECK(ws.kept[*form.mdp.find_state(s)]);
    CHECK(ws.kept_count() == 6);
    CHECK(brute_force_min_subsystem(form, q) == std::optional<std::size_t>(6));
}

TEST_CASE("witnessing subsystems need a holding lower-bounded query") {
    auto form = fixtures::m1_form();
    CHECK_THROWS_AS(milp_min_subsystem(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.9"}})),
                    Error);
    CHECK_THROWS_AS(milp_min_subsystem(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Le, "0.9"}})),
                    Error);
}

TEST_CASE("weighted quotient MILP shrinks the original subsystem") {
    // Two routes to the goal: through a 3-state cycle or through a single self-loop state.
    Mdp n = parse_model_string(
        "@initial i\n"
        "i big a1 1\ni small b1 1\n"
        "a1 next a2 1\na2 next a3 1\na3 next a1 1\na1 out g 1\n"
        "b1 loop b1 1\nb1 out g 1/2\nb1 out x 1/2\n"
        "g stay g 1\nx stay x 1\n"
        "@label goal g\n");
    Query q;
    q.quantifier = Quantifier::Exists;
    q.connective = Connective::And;
    Predicate p;
    p.kind = PredicateKind::Reach;
    p.label = "goal";
    p.op = CmpOp::Ge;
    p.bound = Rational(1, 2);
    q.predicates.push_back(p);
    ReducedQuery rq = reduce_query(n, q);

    WitnessOptions weighted;
    weighted.weights = quotient_weights(rq);
    auto plain = milp_min_subsystem(rq.form, rq.query);
    auto heavy = milp_min_subsystem(rq.form, rq.query, weighted);
    plain.level = heavy.level = WitnessLevel::Quotient;
    auto plainOrig = transfer_subsystem(plain, n, q, rq);
    auto heavyOrig = transfer_subsystem(heavy, n, q, rq);
    CHECK(heavyOrig.kept_count() <= plainOrig.kept_count());
    CHECK(heavyOrig.kept_count() == 3);  // i, b1, g
    auto mecA = rq.form.mdp.find_state("mec:a1|0|");
    REQUIRE(mecA);
    CHECK(weighted.weights[*mecA] == 3);
}

TEST_CASE("support-induced subsystems re-certify on random forms") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 40; ++round) {
        auto form = gen::random_reach_form(rng, 6, 3, 2, true);
        for (auto [quant, conn] : {std::pair{Quantifier::Exists, Connective::And}, {Quantifier::Forall, Connective::Or}}) {
            const auto b1 = to_string(gen::grid_bound(rng)), b2 = to_string(gen::grid_bound(rng));
            auto q = reach_query(quant, conn, {{CmpOp::Ge, b1.c_str()}, {CmpOp::Ge, b2.c_str()}});
            auto res = certify(form, q);
            if (!res.holds) continue;
            auto ws = support_subsystem(form, res.certificate);
            CHECK(check_certificate(reach_subsystem(form, ws.kept).form, ws.certificate).ok);
        }
    }
}

TEST_CASE("MILP optimum equals brute force on small forms") {
    std::mt19937_64 rng(99);
    int compared = 0;
    for (int round = 0; round < 12; ++round) {
        auto form = gen::random_reach_form(rng, 7, 2, 2, true);
        for (auto [quant, conn] : {std::pair{Quantifier::Exists, Connective::And}, {Quantifier::Forall, Connective::Or}}) {
            const auto b1 = to_string(gen::grid_bound(rng) / 2), b2 = to_string(gen::grid_bound(rng) / 2);
            auto q = reach_query(quant, conn, {{CmpOp::Ge, b1.c_str()}, {CmpOp::Ge, b2.c_str()}});
            if (!certify(form, q).holds) continue;
            auto ws = milp_min_subsystem(form, q);
            REQUIRE(ws.optimality == Optimality::Proven);
            CHECK(brute_force_min_subsystem(form, q) == std::optional<std::size_t>(ws.kept_count()));
            ++compared;
        }
    }
    CHECK(compared > 5);
}

TEST_CASE("mean-payoff witnessing subsystems") {
    Mdp s = parse_model_string(
        "@initial s\ns go l 1/2\ns go h 1/2\nl loop l 1\nh loop h 1\n"
        "@reward r1 l loop 0\n@reward r1 h loop 10\n@reward r1 s go 0\n");
    auto ex = milp_min_subsystem_mp(s, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "5"}}));
    // Transient flow is unbounded on end components, so the big-M bound is a heuristic here.
    CHECK(ex.optimality == Optimality::Heuristic);
    CHECK(kept_names(s, ex.kept) == std::vector<std::string>{"s", "h"});
    auto fa = milp_min_subsystem_mp(s, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "5"}}));
    CHECK(fa.optimality == Optimality::Proven);
    CHECK(kept_names(s, fa.kept) == std::vector<std::string>{"s", "h"});
    auto up = milp_min_subsystem_mp(s, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Le, "5"}}));
    CHECK(kept_names(s, up.kept) == std::vector<std::string>{"s", "l"});

    std::mt19937_64 rng(3);
    gen::MdpShape shape;
    shape.maxStates = 6;
    for (int round = 0; round < 15; ++round) {
        Mdp m = gen::with_random_rewards(rng, gen::random_mdp(rng, shape), 2);
        for (auto quant : {Quantifier::Exists, Quantifier::Forall}) {
            auto conn = quant == Quantifier::Exists ? Connective::And : Connective::Or;
            auto q = mp_query(quant, conn, {{CmpOp::Ge, "-1"}, {CmpOp::Ge, "-1"}});
            auto res = certify_mp(m, q);
            if (!res.holds) continue;
            auto supp = support_subsystem_mp(m, res.certificate);
            auto milp = milp_min_subsystem_mp(m, q);
            CHECK(milp.kept_count() <= supp.kept_count());
        }
    }
}
