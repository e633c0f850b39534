#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include "farkas/errors.hpp"
#include "farkas/mp_cert.hpp"

#include <doctest.h>

#include <cmath>

using namespace farkas;
using fixtures::mp_query;

namespace {

bool feasible(const CertSystem& cs) {
    auto out = solve(cs.sys);
    return out.status == SolveStatus::Optimal && check_assignment(cs.sys, to_rationals(out.values)).ok;
}

Mdp single_loop() { return parse_model_string("@initial s\ns a s 1\n@reward r1 s a 5\n"); }

// One initial action splits 50/50 into two absorbing loops with rewards 0 and 10.
Mdp two_sinks() {
    return parse_model_string(
        "@initial s\ns go l 1/2\ns go h 1/2\nl loop l 1\nh loop h 1\n"
        "@reward r1 l loop 0\n@reward r1 h loop 10\n@reward r1 s go 0\n");
}

// Two loops at one state, rewards 0 and 10.
Mdp two_loops() {
    return parse_model_string("@initial s\ns lo s 1\ns hi s 1\n@reward r1 s lo 0\n@reward r1 s hi 10\n");
}

// r2 = -r1 on a two-state MDP that can stay in either state or switch.
Mdp trade_off() {
    return parse_model_string(
        "@initial u\nu stay u 1\nu move w 1\nw stay w 1\nw move u 1\n"
        "@reward r1 u stay 1\n@reward r1 w stay -1\n@reward r1 u move 0\n@reward r1 w move 0\n"
        "@reward r2 u stay -1\n@reward r2 w stay 1\n@reward r2 u move 0\n@reward r2 w move 0\n");
}

std::vector<Rational> lam(std::initializer_list<const char*> xs) {
    std::vector<Rational> out;
    for (auto x : xs) out.push_back(parse_rational(x));
    return out;
}

std::vector<Rational> assignment(const CertSystem& cs, const std::map<std::string, std::vector<Rational>>& vecs) {
    std::vector<Rational> out(cs.sys.num_vars());
    for (std::size_t v = 0; v < out.size(); ++v) {
        if (cs.refs[v]) out[v] = vecs.at(cs.refs[v]->vec)[cs.refs[v]->index];
    }
    return out;
}

}  // namespace

TEST_CASE("r_min") {
    CHECK(build_r_min({{Rational(1), Rational(1)}}) == std::vector<Rational>{Rational(1)});
    CHECK(build_r_min({{Rational(3), Rational(-2)}}) == std::vector<Rational>{Rational(-2)});
    std::mt19937_64 rng(11);
    for (int round = 0; round < 20; ++round) {
        Mdp m = gen::with_random_rewards(rng, gen::random_mdp(rng), 2);
        auto rmin = build_r_min(query_rewards(m, mp_query(Quantifier::Exists, Connective::And,
                                                           {{CmpOp::Ge, "0"}, {CmpOp::Ge, "0"}})));
        for (std::size_t i = 0; i < 2; ++i) {
            Rational lo = m.rewards()[i].values.front();
            for (const auto& v : m.rewards()[i].values) lo = v < lo ? v : lo;
            CHECK(rmin[i] == lo);
        }
    }
    CHECK_THROWS_AS(build_r_min({{}}), Error);
}

TEST_CASE("H^MP on small models") {
    Mdp m = single_loop();
    auto reward = query_rewards(m, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "5"}}));
    auto h = build_Hmp(m, reward, lam({"5"}));
    auto hand = assignment(h, {{"x", {Rational(1)}}, {"y", {Rational(0)}}, {"z", {Rational(0)}}});
    CHECK(check_assignment(h.sys, hand, {CheckMode::Exact}).ok);
    CHECK(feasible(h));
    CHECK(!feasible(build_Hmp(m, reward, lam({"5.1"}))));

    Mdp s = two_sinks();
    auto r2 = query_rewards(s, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "5"}}));
    CHECK(feasible(build_Hmp(s, r2, lam({"5"}))));
    CHECK(!feasible(build_Hmp(s, r2, lam({"5.01"}))));
    CHECK(feasible(build_Hmp(s, r2, lam({"4.99"}), true)));
    CHECK(!feasible(build_Hmp(s, r2, lam({"5"}), true)));
}

TEST_CASE("F^MP on small models") {
    Mdp m = single_loop();
    auto reward = query_rewards(m, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "5"}}));
    auto f = build_Fmp(m, reward, lam({"5"}));
    auto hand = assignment(f, {{"g", {Rational(5)}}, {"b", {Rational(0)}}, {"z", {Rational(1)}}});
    CHECK(check_assignment(f.sys, hand, {CheckMode::Exact}).ok);
    CHECK(feasible(f));
    CHECK(!feasible(build_Fmp(m, reward, lam({"5.1"}))));

    Mdp two = two_loops();
    auto r2 = query_rewards(two, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "0"}}));
    auto floorCase = build_Fmp(two, r2, lam({"0"}));
    auto atFloor = assignment(floorCase, {{"g", {Rational(0)}}, {"b", {Rational(0)}}, {"z", {Rational(1)}}});
    CHECK(check_assignment(floorCase.sys, atFloor, {CheckMode::Exact}).ok);
    CHECK(!feasible(build_Fmp(two, r2, lam({"0.5"}))));
}

TEST_CASE("certify_mp examples") {
    Mdp m = single_loop();
    auto holds = certify_mp(m, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "5"}}));
    CHECK(holds.holds);
    CHECK(holds.certificate.variant == CertVariant::MpExistsAnd);
    CHECK(check_mp_certificate(m, holds.certificate).ok);

    auto violated = certify_mp(m, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "6"}}));
    CHECK(!violated.holds);
    CHECK(violated.forNegation);
    CHECK(violated.certificate.variant == CertVariant::MpForallOr);
    const auto& p = violated.certificate.query.predicates.front();
    CHECK(p.negatedReward);
    CHECK(p.op == CmpOp::Gt);
    CHECK(p.bound == Rational(-6));
    CHECK(check_mp_certificate(m, violated.certificate).ok);

    // Upper bounds go through reward negation.
    auto upper = certify_mp(m, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Le, "5"}}));
    CHECK(upper.holds);
    CHECK_THROWS_AS(certify_mp(m, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Gt, "4"}})), Error);
    try {
        certify_mp(m, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Gt, "4"}}));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::StrictUnsupported);
    }
}

TEST_CASE("two-sink mean payoff around the expectation") {
    Mdp s = two_sinks();
    CHECK(certify_mp(s, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "5"}})).holds);
    CHECK(!certify_mp(s, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "5.5"}})).holds);
    CHECK(certify_mp(s, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "5"}})).holds);
    CHECK(!certify_mp(s, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "5.5"}})).holds);
}

TEST_CASE("k=2 trade-off is violated and matches deterministic enumeration") {
    Mdp m = trade_off();
    auto q = mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.4"}, {CmpOp::Ge, "0.4"}});
    auto res = certify_mp(m, q);
    CHECK(!res.holds);
    CHECK(check_mp_certificate(m, res.certificate).ok);

    // Every memoryless deterministic scheduler yields gains summing to zero, so mixtures cannot
    // reach (0.4, 0.4) either.
    std::vector<std::array<double, 2>> points;
    oracle::for_each_md(m, [&](const std::vector<ChoiceId>& sel) {
        MdpBuilder b;
        for (StateId s = 0; s < m.num_states(); ++s) b.add_state(m.state_name(s));
        for (StateId s = 0; s < m.num_states(); ++s) {
            for (const auto& t : m.choice(sel[s]).dist) b.add_transition(s, "step", t.target, t.prob);
        }
        b.add_initial(0);
        Mdp chain = b.build();
        std::array<double, 2> pt{};
        for (int i = 0; i < 2; ++i) {
            std::vector<double> r(m.num_states());
            for (StateId s = 0; s < m.num_states(); ++s) r[s] = m.rewards()[i].values[sel[s]].get_d();
            pt[i] = oracle::mp_policy_iteration(chain, r, true)[0];
        }
        points.push_back(pt);
    });
    CHECK(points.size() == 4);
    bool reachable = false;
    for (const auto& a : points) {
        for (const auto& b : points) {
            for (int t = 0; t <= 20; ++t) {
                double w = t / 20.0;
                if (w * a[0] + (1 - w) * b[0] >= 0.4 && w * a[1] + (1 - w) * b[1] >= 0.4) reachable = true;
            }
        }
    }
    CHECK(!reachable);
    CHECK(certify_mp(m, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0"}, {CmpOp::Ge, "0"}})).holds);
}

TEST_CASE("check_mp_certificate reports specific rows") {
    Mdp two = two_loops();
    auto res = certify_mp(two, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "0"}}));
    REQUIRE(res.holds);
    Certificate bad = res.certificate;
    bad.vectors["g"].values[0] = Rational(-1);
    auto check = check_mp_certificate(two, bad);
    CHECK(!check.ok);
    bool floorHit = false;
    for (const auto& v : check.violations) floorHit = floorHit || v.what == "floor[s]";
    CHECK(floorHit);

    Mdp m = single_loop();
    auto tight = certify_mp(m, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "5"}}));
    REQUIRE(tight.holds);
    Certificate off = tight.certificate;
    off.vectors["g"].values[0] = Rational(6);
    off.vectors["z"].values[0] = Rational(1);
    auto c2 = check_mp_certificate(m, off);
    CHECK(!c2.ok);
    bool biasHit = false;
    for (const auto& v : c2.violations) {
        if (v.what == "bias[s:a]") {
            biasHit = true;
            CHECK(v.residual == doctest::Approx(1.0));
        }
    }
    CHECK(biasHit);

    Certificate shape = tight.certificate;
    shape.vectors["g"].values.push_back(Rational(0));
    CHECK_THROWS_AS(check_mp_certificate(m, shape), Error);
}

TEST_CASE("mean-payoff certificates survive JSON and exact mode") {
    Mdp s = two_sinks();
    CertifyOptions opts;
    opts.exact = true;
    for (const char* bound : {"5", "6"}) {
        auto res = certify_mp(s, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, bound}}), opts);
        CHECK(res.certificate.mode == CheckMode::Exact);
        auto back = certificate_from_json(certificate_to_json(res.certificate, s), s);
        CHECK(back.query == res.certificate.query);
        CHECK(check_mp_certificate(s, back).ok);
    }
}

TEST_CASE("constant rewards short-circuit") {
    Mdp m = parse_model_string("@initial a\na x b 1\nb y a 1/2\nb y b 1/2\n@reward r1 a x 2\n@reward r1 b y 2\n");
    auto yes = certify_mp(m, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "2"}}));
    CHECK(yes.holds);
    CHECK(check_mp_certificate(m, yes.certificate, {CheckMode::Exact}).ok);
    auto no = certify_mp(m, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "3"}}));
    CHECK(!no.holds);
    CHECK(check_mp_certificate(m, no.certificate).ok);
}

TEST_CASE("single objective agrees with policy iteration") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<long> grid(-20, 20);
    gen::MdpShape shape;
    shape.maxStates = 10;
    int compared = 0;
    for (int round = 0; round < 60; ++round) {
        Mdp m = gen::with_random_rewards(rng, gen::random_mdp(rng, shape), 1);
        std::vector<double> r(m.num_choices());
        for (ChoiceId c = 0; c < m.num_choices(); ++c) r[c] = m.rewards()[0].values[c].get_d();
        const double best = oracle::mp_policy_iteration(m, r, true)[0];
        const double worst = oracle::mp_policy_iteration(m, r, false)[0];
        Rational lambda(grid(rng), 4);
        lambda.canonicalize();
        const double l = lambda.get_d();
        const std::string b = to_string(lambda);
        if (std::abs(best - l) > 1e-6) {
            auto res = certify_mp(m, mp_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, b.c_str()}}));
            CHECK(res.holds == (best >= l));
            CHECK(check_mp_certificate(m, res.certificate).ok);
            ++compared;
        }
        if (std::abs(worst - l) > 1e-6) {
            auto res = certify_mp(m, mp_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, b.c_str()}}));
            CHECK(res.holds == (worst >= l));
            CHECK(check_mp_certificate(m, res.certificate).ok);
            ++compared;
        }
    }
    CHECK(compared > 80);
}

TEST_CASE("mean-payoff duality and recurrent-flow locality") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<long> grid(-12, 12);
    gen::MdpShape shape;
    shape.maxStates = 12;
    for (int round = 0; round < 40; ++round) {
        Mdp m = gen::with_random_rewards(rng, gen::random_mdp(rng, shape), 2);
        for (auto quant : {Quantifier::Exists, Quantifier::Forall}) {
            auto conn = quant == Quantifier::Exists ? Connective::And : Connective::Or;
            Rational l1(grid(rng), 4), l2(grid(rng), 4);
            l1.canonicalize();
            l2.canonicalize();
            const auto b1 = to_string(l1), b2 = to_string(l2);
            auto q = mp_query(quant, conn, {{CmpOp::Ge, b1.c_str()}, {CmpOp::Ge, b2.c_str()}});
            auto res = certify_mp(m, q);
            CHECK(check_mp_certificate(m, res.certificate).ok);
            // The other side must not be certifiable.
            const Query other = res.holds ? normalize_mean_payoff(negate(normalize_mean_payoff(q)))
                                          : normalize_mean_payoff(q);
            CHECK(!find_mp_certificate(m, other));
            if (res.certificate.variant == CertVariant::MpExistsAnd) CHECK(recurrent_leak(m, res.certificate) < 1e-6);
        }
    }
}
