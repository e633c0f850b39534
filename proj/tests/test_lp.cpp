#include "fixtures.hpp"

#include "farkas/errors.hpp"
#include "farkas/lp.hpp"
#include "farkas/reach_cert.hpp"

#include <doctest.h>

#include <cstdlib>
#include <random>
#include <sstream>

using namespace farkas;

TEST_CASE("bounded maximisation") {
    LinSystem s;
    auto x = s.add_var("x", Rational(0), Rational(1));
    s.set_objective(Sense::Maximize, {{x, 1.0}});
    auto out = solve(s);
    REQUIRE(out.status == SolveStatus::Optimal);
    CHECK(out.values[x] == doctest::Approx(1.0));
}

TEST_CASE("contradictory bounds are infeasible") {
    LinSystem s;
    auto x = s.add_var("x", std::nullopt, std::nullopt);
    s.add_constraint("lo", {{x, Rational(1)}}, Relation::Ge, Rational(1));
    s.add_constraint("hi", {{x, Rational(1)}}, Relation::Le, Rational(0));
    CHECK(solve(s).status == SolveStatus::Infeasible);
}

TEST_CASE("strict rows use a maximised shared slack") {
    LinSystem open;
    auto x = open.add_var("x", Rational(0), Rational(1));
    open.add_constraint("gt", {{x, Rational(1)}}, Relation::Ge, Rational(1, 2), true);
    auto out = solve(open);
    REQUIRE(out.status == SolveStatus::Optimal);
    CHECK(*out.slack > 0.4);
    CHECK(check_assignment(open, to_rationals(out.values)).ok);

    LinSystem closed;
    auto y = closed.add_var("y", Rational(0), Rational(1));
    closed.add_constraint("gt", {{y, Rational(1)}}, Relation::Ge, Rational(1), true);
    CHECK(solve(closed).status == SolveStatus::Infeasible);
    // The strict original rejects the boundary point in both modes.
    CHECK(!check_assignment(closed, {Rational(1)}).ok);
    CHECK(!check_assignment(closed, {Rational(1)}, {CheckMode::Exact}).ok);
}

TEST_CASE("indicator links in a MILP") {
    LinSystem s;
    auto x = s.add_var("x", Rational(0), Rational(1));
    auto g = s.add_binary("g");
    s.add_constraint("need", {{x, Rational(1)}}, Relation::Ge, Rational(1, 2));
    s.add_indicator(g, x);
    s.set_objective(Sense::Minimize, {{g, 1.0}});
    auto out = solve(s);
    REQUIRE(out.status == SolveStatus::Optimal);
    CHECK(out.values[g] == 1.0);
    CHECK(check_assignment(s, to_rationals(out.values)).ok);
    CHECK(!check_assignment(s, {Rational(1, 2), Rational(0)}).ok);
}

TEST_CASE("check_assignment on the M1 system") {
    auto form = fixtures::m1_form();
    auto q = fixtures::reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "7/10"}});
    auto cs = build_exists_and(form, q);
    auto s0 = *form.mdp.find_state("s0");
    auto alpha = *form.mdp.find_choice(s0, "alpha");
    auto beta = *form.mdp.find_choice(s0, "beta");
    std::vector<Rational> y(2);
    y[alpha] = 1;
    y[beta] = 0;
    auto exact = check_assignment(cs.sys, y, {CheckMode::Exact});
    CHECK(exact.ok);
    CHECK(exact.violations.empty());

    y[alpha] = parse_rational("1.001");
    auto tol = check_assignment(cs.sys, y);
    REQUIRE(!tol.ok);
    REQUIRE(tol.violations.size() == 1);
    CHECK(tol.violations[0].what == "flow[s0]");
    CHECK(tol.violations[0].residual == doctest::Approx(1e-3));
}

TEST_CASE("feasible outcomes pass the tolerance check") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> coef(-5, 5);
    std::uniform_real_distribution<double> pt(-2, 2);
    for (int round = 0; round < 50; ++round) {
        LinSystem s;
        const int n = 6, m = 8;
        std::vector<double> x0(n);
        for (int j = 0; j < n; ++j) {
            s.add_var("x" + std::to_string(j), std::nullopt, std::nullopt);
            x0[j] = pt(rng);
        }
        for (int i = 0; i < m; ++i) {
            LinExpr row;
            double lhs = 0;
            for (int j = 0; j < n; ++j) {
                int c = coef(rng);
                row.emplace_back(j, Rational(c));
                lhs += c * x0[j];
            }
            s.add_constraint("r" + std::to_string(i), row, i % 3 == 0 ? Relation::Eq : Relation::Le,
                             i % 3 == 0 ? Rational(lhs) : Rational(lhs + 0.5));
        }
        auto out = solve(s);
        REQUIRE(out.status == SolveStatus::Optimal);
        CHECK(check_assignment(s, to_rationals(out.values)).ok);
    }
}

TEST_CASE("LP text dump") {
    LinSystem s;
    auto x = s.add_var("x");
    auto g = s.add_binary("g");
    s.add_constraint("c1", {{x, Rational(2)}}, Relation::Ge, Rational(1), true);
    s.add_indicator(g, x, 5.0);
    std::ostringstream out;
    write_lp(s, out);
    auto text = out.str();
    CHECK(text.find("Subject To") != std::string::npos);
    CHECK(text.find("c1: + 2 x > 1") != std::string::npos);
    CHECK(text.find("Binaries\n g") != std::string::npos);
    CHECK(text.find("End") != std::string::npos);
}

TEST_CASE("solver selection") {
    CHECK(make_solver("highs")->name() == "highs");
    CHECK_THROWS_AS(make_solver("nope"), Error);
    setenv("FARKAS_SOLVER", "missing", 1);
    CHECK_THROWS_AS(make_solver(), Error);
    unsetenv("FARKAS_SOLVER");
    CHECK(make_solver()->name() == "highs");
}
