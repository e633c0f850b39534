#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include "farkas/errors.hpp"
#include "farkas/product.hpp"

#include <doctest.h>

#include <set>

using namespace farkas;

TEST_CASE("empty tracking leaves the model unchanged") {
    auto m = fixtures::fig2();
    auto p = build_product(m, {}, {});
    CHECK(p.mdp.num_states() == m.num_states() - 0);
    CHECK(p.mdp.num_choices() == m.num_choices());
    CHECK(p.mdp.find_state("s0||"));
}

TEST_CASE("product of the running example") {
    auto m = fixtures::fig2();
    auto p = build_product(m, {m.state_set("goal")}, {m.state_set("safe")});
    std::set<std::string> states(p.mdp.state_names().begin(), p.mdp.state_names().end());
    CHECK(states == std::set<std::string>{"s0|0|0", "s3|0|1", "s4|0|1", "s1|0|0", "s2|1|1", "s1|1|1"});
    auto mecs = mec_decomposition(p.mdp);
    CHECK(mecs.size() == 3);
    auto cls = classify_mecs(p, mecs);
    // MECs sorted by smallest name: s1|0|0, s1|1|1 region, s3|0|1 region.
    CHECK(cls.A[0] == std::vector<std::size_t>{1});
    CHECK(cls.B[0] == std::vector<std::size_t>{0});
}

TEST_CASE("source update rule on a single absorbing target") {
    auto m = parse_model_string("@initial s\ns loop s 1\n@label T s\n");
    ProductOptions opts;
    opts.rule = UpdateRule::Source;
    auto p = build_product(m, {m.state_set("T")}, {}, opts);
    CHECK(p.mdp.state_names() == std::vector<std::string>{"s|0|", "s|1|"});
    auto mecs = mec_decomposition(p.mdp);
    REQUIRE(mecs.size() == 1);
    CHECK(p.mdp.state_name(mecs[0].states[0]) == "s|1|");
    CHECK(classify_mecs(p, mecs).A[0] == std::vector<std::size_t>{0});
    // The successor rule seeds the initial state directly.
    auto q = build_product(m, {m.state_set("T")}, {});
    CHECK(q.mdp.state_names() == std::vector<std::string>{"s|1|"});
}

TEST_CASE("blow-up cap") {
    auto m = fixtures::fig2();
    ProductOptions opts;
    opts.cap = 3;
    CHECK_THROWS_AS(build_product(m, {m.state_set("goal")}, {m.state_set("safe")}, opts), Error);
}

TEST_CASE("reduced query of the running example") {
    auto m = fixtures::fig2();
    auto rq = reduce_query(m, fixtures::fig2_forall_or());
    CHECK(rq.quotient.mdp.num_states() == 7);
    CHECK(rq.query.quantifier == Quantifier::Forall);
    CHECK(rq.query.connective == Connective::Or);
    auto goalNames = [&](std::size_t i) {
        std::set<std::string> out;
        for (StateId s = 0; s < rq.form.mdp.num_states(); ++s) {
            if (rq.form.goals[i][s]) out.insert(rq.form.mdp.state_name(s));
        }
        return out;
    };
    CHECK(goalNames(0) == std::set<std::string>{"bot:s1|0|0"});
    CHECK(goalNames(1) == std::set<std::string>{"bot:s1|1|1"});
    CHECK(rq.query.predicates[0].bound == Rational(1, 4));
}

TEST_CASE("vacuous invariant targets every sink") {
    auto m = fixtures::fig2();
    Query q;
    q.quantifier = Quantifier::Exists;
    Predicate p;
    p.kind = PredicateKind::Invariant;
    p.label = "all";
    p.bound = Rational(1, 2);
    q.predicates.push_back(p);
    MdpBuilder b = MdpBuilder::from(m);
    for (StateId s = 0; s < m.num_states(); ++s) b.add_label("all", s);
    auto rq = reduce_query(b.build(), q);
    for (StateId bot : rq.quotient.botState) CHECK(rq.form.goals[0][bot]);
}

TEST_CASE("reduction preserves optimal reach and invariant probabilities") {
    std::mt19937_64 rng(101);
    int checked = 0;
    for (int i = 0; i < 60; ++i) {
        auto base = gen::random_mdp(rng, {2, 8, 2, 2});
        const std::size_t n = base.num_states();
        MdpBuilder b = MdpBuilder::from(base);
        std::bernoulli_distribution coin(0.4);
        b.declare_label("T");
        b.declare_label("G");
        for (StateId s = 0; s < n; ++s) {
            if (coin(rng)) b.add_label("T", s);
            if (!coin(rng)) b.add_label("G", s);
        }
        auto m = b.build();
        Query q;
        Predicate reach, inv;
        reach.kind = PredicateKind::Reach;
        reach.label = "T";
        inv.kind = PredicateKind::Invariant;
        inv.label = "G";
        q.predicates = {reach, inv};
        auto rq = reduce_query(m, q);

        // Original values: reach T by VI; invariant G is 1 - reach of the complement with the opposite direction.
        auto T = m.state_set("T"), notG = m.state_set("!G");
        for (bool maximize : {true, false}) {
            double origReach = oracle::initial_value(m, oracle::vi_reach(m, T, maximize));
            double quotReach = oracle::initial_value(rq.form.mdp, oracle::vi_reach(rq.form.mdp, rq.form.goals[0], maximize));
            CHECK(origReach == doctest::Approx(quotReach).epsilon(1e-9));
            double origInv = 1 - oracle::initial_value(m, oracle::vi_reach(m, notG, !maximize));
            double quotInv = oracle::initial_value(rq.form.mdp, oracle::vi_reach(rq.form.mdp, rq.form.goals[1], maximize));
            CHECK(origInv == doctest::Approx(quotInv).epsilon(1e-9));
        }
        ++checked;
    }
    CHECK(checked == 60);
}
