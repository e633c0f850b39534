#include "fixtures.hpp"

#include "farkas/errors.hpp"
#include "farkas/model.hpp"

#include <doctest.h>

using namespace farkas;

TEST_CASE("parser reads rationals, labels and rewards") {
    auto m = parse_model_string(
        "@initial a\n"
        "a go b 1/3  # comment\n"
        "a go a 0.6666666666666666666\n"
        "b stay b 1\n"
        "@reward r a go 2\n"
        "@label L b\n",
        BuildOptions{false, false, 1e-9});
    CHECK(m.num_states() == 2);
    CHECK(m.num_choices() == 2);
    CHECK(m.initial_state() == StateId(0));
    CHECK(m.state_set("L") == std::vector<bool>{false, true});
    CHECK(m.state_set("!L") == std::vector<bool>{true, false});
    CHECK(m.rewards().front().values[0] == 2);
    CHECK_THROWS_AS(m.state_set("nope"), Error);
}

TEST_CASE("parse errors carry the line number") {
    try {
        parse_model_string("@initial a\na go b 1\nb go b x\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("non-stochastic distributions are rejected") {
    CHECK_THROWS_AS(parse_model_string("@initial a\na go a 0.5\n"), Error);
    CHECK_THROWS_AS(parse_model_string("@initial a\na go a 1\nb go a 1\n@initial b\n"), Error);
}

TEST_CASE("serialization is canonical and round-trips") {
    auto m = fixtures::fig2();
    std::string once = model_to_string(m);
    std::string twice = model_to_string(parse_model_string(once));
    CHECK(once == twice);
    // Input order does not matter.
    auto shuffled = parse_model_string(
        "s4 a s2 1\n@label goal s2\ns0 b s1 1/2\ns3 d s2 1\ns1 stay s1 1\ns2 back s1 1\n"
        "s1 c s2 1\ns4 go s3 1\n@initial s0\ns3 go s4 1\ns2 stay s2 1\ns0 b s3 0.5\n@label safe s1 s0\n");
    CHECK(model_to_string(shuffled) == once);
}

TEST_CASE("induced subsystem of the running example") {
    auto m = fixtures::fig2();
    std::vector<bool> kept(m.num_states(), false);
    for (const char* s : {"s0", "s1", "s2"}) kept[*m.find_state(s)] = true;
    auto sub = induced_subsystem(m, kept);
    const auto& sm = sub.mdp;
    CHECK(sm.num_states() == 4);
    auto s0 = *sm.find_state("s0");
    auto b = *sm.find_choice(s0, "b");
    Rational toS1, toBot;
    for (const auto& t : sm.choice(b).dist) {
        if (t.target == *sm.find_state("s1")) toS1 = t.prob;
        if (t.target == sub.bot) toBot = t.prob;
    }
    CHECK(toS1 == Rational(1, 2));
    CHECK(toBot == Rational(1, 2));
    CHECK(!sm.find_state("s3"));

    std::vector<bool> noInit(m.num_states(), true);
    noInit[*m.find_state("s0")] = false;
    CHECK_THROWS_AS(induced_subsystem(m, noInit), Error);
}

TEST_CASE("induced subsystem redirects all mass of a dropped successor") {
    auto m = parse_model_string("@initial s0\ns0 a s1 1\ns1 a s2 1\ns2 a s2 1\n@reward r s2 a -3\n@reward r s0 a 2\n");
    auto sub = induced_subsystem(m, {true, true, false});
    auto s1 = *sub.mdp.find_state("s1");
    const auto& d = sub.mdp.choice(sub.mdp.choice_begin(s1)).dist;
    REQUIRE(d.size() == 1);
    CHECK(d[0].target == sub.bot);
    CHECK(d[0].prob == 1);
    // The sink collects the smallest reward of the original model.
    auto botChoice = sub.mdp.choice_begin(sub.bot);
    CHECK(sub.mdp.rewards()[0].values[botChoice] == -3);
}

TEST_CASE("identity subsystem keeps the transition function") {
    auto m = fixtures::fig2();
    auto sub = induced_subsystem(m, std::vector<bool>(m.num_states(), true));
    for (ChoiceId c = 0; c < m.num_choices(); ++c) {
        const auto& ch = m.choice(c);
        auto sc = sub.mdp.find_choice(*sub.toSub[ch.state], ch.action);
        REQUIRE(sc);
        CHECK(sub.mdp.choice(*sc).dist.size() == ch.dist.size());
    }
    CHECK(!can_reach(sub.mdp, [&] {
               std::vector<bool> v(sub.mdp.num_states(), false);
               v[sub.bot] = true;
               return v;
           }())[*sub.mdp.find_state("s0")]);
}

TEST_CASE("reach matrices of M1") {
    auto form = fixtures::m1_form();
    auto mats = build_reach_matrices(form);
    auto s0 = *form.mdp.find_state("s0");
    auto alpha = *form.mdp.find_choice(s0, "alpha");
    auto beta = *form.mdp.find_choice(s0, "beta");
    REQUIRE(form.mdp.num_choices() == 2);
    CHECK(mats.A[alpha] == std::vector<std::pair<StateId, Rational>>{{s0, Rational(1)}});
    CHECK(mats.A[beta] == std::vector<std::pair<StateId, Rational>>{{s0, Rational(1)}});
    CHECK(mats.T[alpha][0] == Rational(7, 10));
    CHECK(mats.T[beta][0] == Rational(1, 5));
}

TEST_CASE("reach matrix row sums equal the mass moved into F") {
    // Fixed pseudo-random 10-state instance.
    std::string text = "@initial q0\n";
    unsigned seed = 7;
    auto next = [&] { return seed = seed * 1103515245u + 12345u, (seed >> 8) % 10; };
    for (int s = 0; s < 8; ++s) {
        for (int a = 0; a < 2; ++a) {
            text += "q" + std::to_string(s) + " a" + std::to_string(a) + " q" + std::to_string(next()) + " 1/4\n";
            text += "q" + std::to_string(s) + " a" + std::to_string(a) + " q" + std::to_string(next()) + " 3/4\n";
        }
    }
    text += "q8 x q8 1\nq9 x q9 1\n@label F q8 q9\n";
    auto m = parse_model_string(text);
    auto form = make_reach_form(m, m.state_set("F"), {m.state_set("F")});
    auto mats = build_reach_matrices(form);
    for (ChoiceId c = 0; c < form.mdp.num_choices(); ++c) {
        Rational sum, toF;
        for (const auto& [s, v] : mats.A[c]) sum += v;
        for (const auto& t : form.mdp.choice(c).dist) {
            if (form.target[t.target]) toF += t.prob;
        }
        CHECK(sum == toF);
        CHECK(mats.T[c][0] == toF);
    }
}

TEST_CASE("reachability-form report") {
    auto m = parse_model_string("@initial a\na x b 1\nb y c 1\nc y b 1\nt x t 1\nd x d 1\nu x t 1\n@label F t\n");
    auto report = check_reachability_form(m, m.state_set("F"));
    // b and c loop forever, a only reaches them, d is absorbing outside F.
    CHECK(report.cannotReachTarget.size() == 4);
    CHECK(report.nonAbsorbingTargets.empty());

    auto m2 = parse_model_string("@initial a\na x t 1\nt x a 1\n@label F t\n");
    auto r2 = check_reachability_form(m2, m2.state_set("F"));
    CHECK(r2.nonAbsorbingTargets.size() == 1);
}
