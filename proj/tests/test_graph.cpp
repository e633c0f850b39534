#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include "farkas/graph.hpp"
#include "farkas/product.hpp"

#include <doctest.h>

#include <set>

using namespace farkas;

namespace {

std::set<std::set<ChoiceId>> as_sets(const std::vector<Mec>& mecs) {
    std::set<std::set<ChoiceId>> out;
    for (const auto& m : mecs) out.insert(std::set<ChoiceId>(m.choices.begin(), m.choices.end()));
    return out;
}

std::set<std::string> names(const Mdp& m, const std::vector<StateId>& states) {
    std::set<std::string> out;
    for (StateId s : states) out.insert(m.state_name(s));
    return out;
}

}  // namespace

TEST_CASE("acyclic models have no end components") {
    auto m = parse_model_string("@initial a\na x b 1/2\na x c 1/2\nb y c 1\n", BuildOptions{true});
    CHECK(mec_decomposition(m).empty());
    auto q = mec_quotient(m);
    CHECK(q.mdp.num_states() == m.num_states());
    CHECK(model_to_string(q.mdp) == model_to_string(m));
}

TEST_CASE("two disjoint 2-cycles give two MECs") {
    auto m = parse_model_string(
        "@initial s\ns go a 1/2\ns go c 1/2\na x b 1\nb x a 1\nc x d 1\nd x c 1\nd out s 1\n");
    auto mecs = mec_decomposition(m);
    REQUIRE(mecs.size() == 2);
    CHECK(as_sets(mecs) == oracle::brute_force_mecs(m));
    CHECK(names(m, mecs[0].states) == std::set<std::string>{"a", "b"});
    // s cannot join: its only action also reaches the first cycle.
    CHECK(names(m, mecs[1].states) == std::set<std::string>{"c", "d"});
}

TEST_CASE("MEC decomposition matches exhaustive enumeration") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 60; ++i) {
        auto m = gen::random_mdp(rng, {2, 5, 2, 2});
        if (m.num_choices() > 12) continue;
        CHECK(as_sets(mec_decomposition(m)) == oracle::brute_force_mecs(m));
    }
}

TEST_CASE("MEC decomposition does not depend on state order") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 30; ++i) {
        auto m = gen::random_mdp(rng, {3, 9, 3, 2});
        // Rebuild with reversed state insertion order.
        MdpBuilder b;
        for (StateId s = static_cast<StateId>(m.num_states()); s-- > 0;) b.add_state(m.state_name(s));
        for (const auto& ch : m.choices()) {
            for (const auto& t : ch.dist) {
                b.add_transition(*b.find_state(m.state_name(ch.state)), ch.action, *b.find_state(m.state_name(t.target)), t.prob);
            }
        }
        b.add_initial(*b.find_state(m.state_name(0)));
        auto r = b.build();
        auto a = mec_decomposition(m), c = mec_decomposition(r);
        REQUIRE(a.size() == c.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            std::vector<std::string> na, nc;
            for (StateId s : a[j].states) na.push_back(m.state_name(s));
            for (StateId s : c[j].states) nc.push_back(r.state_name(s));
            CHECK(na == nc);
        }
    }
}

TEST_CASE("single closed 2-cycle collapses to a MEC state and its sink") {
    auto m = parse_model_string("@initial a\na x b 1\nb x a 1\n");
    auto q = mec_quotient(m);
    CHECK(q.mdp.num_states() == 2);
    CHECK(q.mdp.state_names() == std::vector<std::string>{"mec:a", "bot:a"});
    CHECK(q.mdp.num_choices(q.mecState[0]) == 1);
    CHECK(q.mdp.choice(q.mdp.choice_begin(q.mecState[0])).action == "tau");
    CHECK(is_ec_free(q.mdp, q.bottom_states()));
}

TEST_CASE("quotient of the running example product") {
    auto m = fixtures::fig2();
    auto prod = build_product(m, {m.state_set("goal")}, {m.state_set("safe")});
    auto q = mec_quotient(prod.mdp);
    REQUIRE(q.mecs.size() == 3);
    CHECK(names(prod.mdp, q.mecs[0].states) == std::set<std::string>{"s1|0|0"});
    CHECK(names(prod.mdp, q.mecs[1].states) == std::set<std::string>{"s1|1|1", "s2|1|1"});
    CHECK(names(prod.mdp, q.mecs[2].states) == std::set<std::string>{"s3|0|1", "s4|0|1"});
    CHECK(q.mdp.num_states() == 7);
    CHECK(q.mdp.num_states() == prod.mdp.num_states() - 5 + 2 * 3);

    auto init = *q.mdp.find_state("s0|0|0");
    auto b = *q.mdp.find_choice(init, "b");
    std::set<std::pair<std::string, Rational>> succ;
    for (const auto& t : q.mdp.choice(b).dist) succ.insert({q.mdp.state_name(t.target), t.prob});
    CHECK(succ == std::set<std::pair<std::string, Rational>>{{"mec:s1|0|0", Rational(1, 2)}, {"mec:s3|0|1", Rational(1, 2)}});

    // Exit pairs keep their action identity.
    auto c1 = *q.mdp.find_state("mec:s3|0|1");
    CHECK(q.mdp.find_choice(c1, "d@s3|0|1"));
    CHECK(q.mdp.find_choice(c1, "a@s4|0|1"));
    CHECK(q.mdp.find_choice(c1, "tau"));
    CHECK(q.mdp.num_choices(c1) == 3);
    CHECK(q.mdp.find_choice(*q.mdp.find_state("mec:s1|0|0"), "c@s1|0|0"));
    CHECK(q.mdp.num_choices(*q.mdp.find_state("mec:s1|1|1")) == 1);

    auto form = make_reach_form(q.mdp, q.bottom_states(), {});
    CHECK(is_ec_free(form));
    CHECK(check_reachability_form(form.mdp, form.target).ok());
}

TEST_CASE("EC-freeness") {
    auto cyc = parse_model_string("@initial a\na x b 1\nb x a 1\nb y t 1\nt x t 1\n@label F t\n");
    CHECK(!is_ec_free(cyc, cyc.state_set("F")));
    auto chain = parse_model_string("@initial a\na x b 1\nb x t 1\nt x t 1\n@label F t\n");
    CHECK(is_ec_free(chain, chain.state_set("F")));
    CHECK(is_ec_free(make_reach_form(chain, chain.state_set("F"), {})));
}

TEST_CASE("quotient preserves maximal probabilities of ending in MECs") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 40; ++i) {
        auto m = gen::random_mdp(rng, {2, 8, 2, 2});
        auto q = mec_quotient(m);
        CHECK(is_ec_free(q.mdp, q.bottom_states()));
        for (std::size_t c = 0; c < q.mecs.size(); ++c) {
            std::vector<bool> inMec(m.num_states(), false), bot(q.mdp.num_states(), false);
            for (StateId s : q.mecs[c].states) inMec[s] = true;
            bot[q.botState[c]] = true;
            double orig = oracle::initial_value(m, oracle::vi_reach(m, inMec, true));
            double quot = oracle::initial_value(q.mdp, oracle::vi_reach(q.mdp, bot, true));
            CHECK(orig == doctest::Approx(quot).epsilon(1e-9));
        }
    }
}
