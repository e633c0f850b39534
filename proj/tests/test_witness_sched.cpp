#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include "farkas/errors.hpp"
#include "farkas/product.hpp"
#include "farkas/reach_cert.hpp"
#include "farkas/witness_sched.hpp"

#include <doctest.h>

using namespace farkas;
using fixtures::reach_query;

namespace {

ChoiceId choice_of(const Mdp& m, const std::string& state, const std::string& action) {
    auto s = m.find_state(state);
    REQUIRE(s);
    auto c = m.find_choice(*s, action);
    REQUIRE(c);
    return *c;
}

// Scheduler from explicit (state, action, probability) entries; unlisted states get their first action.
MemorylessScheduler hand_scheduler(const Mdp& m, std::initializer_list<std::tuple<const char*, const char*, double>> entries) {
    MemorylessScheduler out;
    out.prob.assign(m.num_choices(), 0.0);
    std::vector<bool> set(m.num_states(), false);
    for (const auto& [s, a, p] : entries) {
        ChoiceId c = choice_of(m, s, a);
        out.prob[c] = p;
        set[m.choice(c).state] = true;
    }
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!set[s] && m.num_choices(s) > 0) out.prob[m.choice_begin(s)] = 1.0;
    }
    return out;
}

MemorylessScheduler random_scheduler(std::mt19937_64& rng, const Mdp& m) {
    MemorylessScheduler out;
    out.prob.assign(m.num_choices(), 0.0);
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (m.num_choices(s) == 0) continue;
        auto d = gen::random_distribution(rng, m.num_choices(s));
        for (ChoiceId c = m.choice_begin(s); c < m.choice_end(s); ++c) out.prob[c] = d[c - m.choice_begin(s)];
    }
    return out;
}

// Running example (exists,and) data: product, quotient and the scheduler σ̂ on the quotient.
struct Fig2Exists {
    Mdp n = fixtures::fig2();
    ReducedQuery rq = reduce_query(n, normalize_lower_bounds(fixtures::fig2_exists_and()));
    MemorylessScheduler sigmaHat = hand_scheduler(rq.quotient.mdp, {{"mec:s3|0|0", "a@s4|0|0", 0.5},
                                                                    {"mec:s3|0|0", "d@s3|0|0", 0.25},
                                                                    {"mec:s3|0|0", "tau", 0.25},
                                                                    {"mec:s1|0|0", "c@s1|0|0", 0.25},
                                                                    {"mec:s1|0|0", "tau", 0.75}});
    std::size_t c1 = mec_index("s3|0|0");

    std::size_t mec_index(const std::string& name) const {
        auto s = rq.product.mdp.find_state(name);
        REQUIRE(s);
        return static_cast<std::size_t>(rq.quotient.mecOf[*s]);
    }
};

// Pr(◇ copy of s) in the chain that leaves s with probability λ(s), by an explicit absorbing construction.
std::vector<double> absorption_oracle(const DenseMatrix& P, const std::vector<double>& delta, const std::vector<double>& lambda) {
    const auto n = static_cast<Eigen::Index>(P.size());
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (Eigen::Index s = 0; s < n; ++s) {
        for (Eigen::Index t = 0; t < n; ++t) Q(s, t) = (1.0 - lambda[s]) * P[s][t];
        Q(s, n + s) = lambda[s];
        Q(n + s, n + s) = 1.0;
    }
    std::vector<double> out(P.size());
    for (Eigen::Index s = 0; s < n; ++s) {
        std::vector<bool> target(2 * n, false);
        target[n + s] = true;
        auto x = oracle::chain_reach(Q, target);
        for (Eigen::Index t = 0; t < n; ++t) out[s] += delta[t] * x[t];
    }
    return out;
}

DenseMatrix dense(const Mdp& dtmc) {
    DenseMatrix P(dtmc.num_states(), std::vector<double>(dtmc.num_states(), 0.0));
    for (StateId s = 0; s < dtmc.num_states(); ++s) {
        for (const auto& t : dtmc.choice(dtmc.choice_begin(s)).dist) P[s][t.target] += t.p;
    }
    return P;
}

}  // namespace

TEST_CASE("memoryless schedulers from flows") {
    Mdp m = fixtures::m1();
    auto alpha = choice_of(m, "s0", "alpha"), beta = choice_of(m, "s0", "beta");
    std::vector<double> y(m.num_choices(), 0.0);
    y[alpha] = 1.0;
    auto dirac = memoryless_from_flow(m, y);
    CHECK(dirac[alpha] == 1.0);
    CHECK(dirac[beta] == 0.0);
    y[alpha] = y[beta] = 0.5;
    auto uniform = memoryless_from_flow(m, y);
    CHECK(uniform[alpha] == doctest::Approx(0.5));
    CHECK(uniform[beta] == doctest::Approx(0.5));
    auto none = memoryless_from_flow(m, std::vector<double>(m.num_choices(), 0.0));
    CHECK(none[alpha] == 1.0);
    validate_scheduler(m, none);
    CHECK_THROWS_AS(memoryless_from_flow(m, std::vector<double>(1, 0.0)), Error);

    auto form = fixtures::m1_form();
    auto cert = find_certificate(form, reach_query(Quantifier::Exists, Connective::And, {{CmpOp::Ge, "0.7"}}));
    REQUIRE(cert);
    auto sigma = memoryless_from_flow(form.mdp, cert->at("y"));
    CHECK(sigma[choice_of(form.mdp, "s0", "alpha")] == doctest::Approx(1.0));
    // One-step analysis: Pr(◇t) = 0.7 under α.
    CHECK(evaluate_scheduler(form.mdp, sigma, goal_objectives(form))[0] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("scheduler evaluation basics") {
    Mdp m = fixtures::m1();
    auto sigma = hand_scheduler(m, {{"s0", "alpha", 1.0}});
    std::vector<StateObjective> objs{{StateObjective::Kind::Reach, m.state_set("t")},
                                     {StateObjective::Kind::Reach, std::vector<bool>(m.num_states(), true)},
                                     {StateObjective::Kind::Invariant, m.state_set("!t")},
                                     {StateObjective::Kind::Persist, m.state_set("t")}};
    auto v = evaluate_scheduler(m, sigma, objs);
    CHECK(v[0] == doctest::Approx(0.7));
    CHECK(v[1] == doctest::Approx(1.0));
    CHECK(v[2] == doctest::Approx(0.3));
    CHECK(v[3] == doctest::Approx(0.7));
    MemorylessScheduler bad{std::vector<double>(m.num_choices(), 0.0)};
    CHECK_THROWS_AS(evaluate_scheduler(m, bad, objs), Error);
}

TEST_CASE("separating schedulers for (forall,or) certificates") {
    auto form = fixtures::m1_form();
    auto q = reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Le, "0.7"}});
    auto w = forall_or_witness(form, std::vector<double>{1.0}, q);
    CHECK(w.maximize);
    CHECK(w.scheduler[choice_of(form.mdp, "s0", "alpha")] == 1.0);
    CHECK(w.gamma == doctest::Approx(0.7));
    // Two-scheduler oracle: the larger of the two deterministic values.
    double best = 0.0;
    oracle::for_each_md(form.mdp, [&](const std::vector<ChoiceId>& sel) {
        best = std::max(best, oracle::md_reach(form.mdp, sel, form.goals[0]));
    });
    CHECK(w.gamma == doctest::Approx(best));
    CHECK_THROWS_AS(forall_or_witness(form, std::vector<double>{1.0},
                                      reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Le, "0.5"}})),
                    Error);
    try {
        forall_or_witness(form, std::vector<double>{1.0}, reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "0.5"}}));
        FAIL("expected a separation failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SeparationFailed);
    }
    auto lower = forall_or_witness(form, std::vector<double>{1.0},
                                   reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "0.2"}}));
    CHECK(!lower.maximize);
    CHECK(lower.gamma == doctest::Approx(0.2));
    CHECK(lower.scheduler[choice_of(form.mdp, "s0", "beta")] == 1.0);
}

TEST_CASE("degenerate weights reduce to single-objective optimisation") {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 25; ++round) {
        auto form = gen::random_reach_form(rng, 6, 3, 2, round % 2 == 0);
        auto q = reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Le, "1"}, {CmpOp::Le, "1"}});
        auto w = forall_or_witness(form, std::vector<double>{1.0, 0.0}, q);
        auto vi = oracle::vi_reach(form.mdp, form.goals[0], true);
        CHECK(w.gamma == doctest::Approx(oracle::initial_value(form.mdp, vi)).epsilon(1e-7));
        if (!is_ec_free(form)) continue;
        auto ql = reach_query(Quantifier::Forall, Connective::Or, {{CmpOp::Ge, "0"}, {CmpOp::Ge, "0"}});
        auto wl = forall_or_witness(form, std::vector<double>{0.0, 1.0}, ql);
        auto vmin = oracle::vi_reach(form.mdp, form.goals[1], false);
        CHECK(wl.gamma == doctest::Approx(oracle::initial_value(form.mdp, vmin)).epsilon(1e-7));
    }
}

TEST_CASE("Running example quotient (forall,or) certificate separates") {
    Mdp n = fixtures::fig2();
    ReducedQuery rq = reduce_query(n, normalize_lower_bounds(fixtures::fig2_forall_or()));
    auto res = certify(rq.form, rq.query);
    REQUIRE(res.holds);
    auto w = forall_or_witness(rq.form, res.certificate);
    CHECK(!w.maximize);
    CHECK(w.gamma >= w.threshold - 1e-9);
    validate_scheduler(rq.form.mdp, w.scheduler);
}

TEST_CASE("expected frequencies") {
    Mdp chain = parse_model_string("@initial s0\ns0 go t 1\nt loop t 1\n");
    auto f = expected_frequencies(chain, hand_scheduler(chain, {}));
    CHECK(f[choice_of(chain, "s0", "go")] == doctest::Approx(1.0));
    CHECK(f[choice_of(chain, "t", "loop")] == 0.0);
    try {
        expected_frequencies(chain, hand_scheduler(chain, {}), false);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Divergent);
    }

    auto form = fixtures::m1_form();
    auto u = hand_scheduler(form.mdp, {{"s0", "alpha", 0.5}, {"s0", "beta", 0.5}});
    auto fu = expected_frequencies(form.mdp, u, false);
    CHECK(fu[choice_of(form.mdp, "s0", "alpha")] == doctest::Approx(0.5));
    CHECK(fu[choice_of(form.mdp, "s0", "beta")] == doctest::Approx(0.5));

    // Running example quotient: exits of C1 normalised by p = 3/4 give μ = (1/3, 2/3).
    Fig2Exists fx;
    const Mdp& qm = fx.rq.quotient.mdp;
    auto fq = expected_frequencies(qm, fx.sigmaHat);
    const double a = fq[choice_of(qm, "mec:s3|0|0", "a@s4|0|0")], d = fq[choice_of(qm, "mec:s3|0|0", "d@s3|0|0")];
    const double visits = a + d + fq[choice_of(qm, "mec:s3|0|0", "tau")];
    CHECK(visits == doctest::Approx(0.5));
    CHECK(d / (visits * 0.75) == doctest::Approx(1.0 / 3.0));
    CHECK(a / (visits * 0.75) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("exit rates on the running example cycle and a symmetric cycle") {
    DenseMatrix cycle{{0.0, 1.0}, {1.0, 0.0}};
    auto lambda = solve_exit_rates(cycle, {1.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0});
    CHECK(lambda[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(lambda[1] == doctest::Approx(2.0 / 5.0).epsilon(1e-12));
    auto reached = absorption_oracle(cycle, {1.0, 0.0}, lambda);
    CHECK(std::abs(reached[0] - 1.0 / 3.0) < 1e-10);
    CHECK(std::abs(reached[1] - 2.0 / 3.0) < 1e-10);

    auto sym = solve_exit_rates(cycle, {0.5, 0.5}, {0.5, 0.5});
    CHECK(sym[0] == doctest::Approx(sym[1]).epsilon(1e-12));

    CHECK_THROWS_AS(solve_exit_rates(DenseMatrix{{1.0, 0.0}, {0.0, 1.0}}, {1.0, 0.0}, {0.5, 0.5}), Error);
    try {
        solve_exit_rates(DenseMatrix{{1.0, 0.0}, {0.0, 1.0}}, {1.0, 0.0}, {0.5, 0.5});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotStronglyConnected);
    }
    try {
        solve_exit_rates(cycle, {0.7, 0.7}, {0.5, 0.5});
        FAIL("expected NotDistribution");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotDistribution);
    }
}

TEST_CASE("exit rates hit random target distributions") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<std::size_t> size(1, 10);
    for (int round = 0; round < 60; ++round) {
        const std::size_t n = round < 20 ? 6 : size(rng);
        Mdp d = gen::random_strongly_connected_dtmc(rng, n);
        auto delta = gen::random_distribution(rng, n);
        auto mu = gen::random_distribution(rng, n);
        auto lambda = solve_exit_rates(d, delta, mu);
        auto reached = absorption_oracle(dense(d), delta, lambda);
        for (std::size_t s = 0; s < n; ++s) {
            CHECK(lambda[s] >= 0.0);
            CHECK(lambda[s] <= 1.0);
            CHECK(std::abs(reached[s] - mu[s]) < 1e-8);
            if (mu[s] == 0.0) CHECK(lambda[s] == 0.0);
        }
    }
}

TEST_CASE("staying schedulers") {
    Mdp cyc = parse_model_string("@initial a\na go b 1\nb go a 1\n");
    auto mecs = mec_decomposition(cyc);
    REQUIRE(mecs.size() == 1);
    auto st = stay_scheduler(cyc, mecs[0]);
    CHECK(st[choice_of(cyc, "a", "go")] == 1.0);
    CHECK(st[choice_of(cyc, "b", "go")] == 1.0);

    Mdp m = parse_model_string("@initial a\na x a 1\na y b 1\na out z 1\nb back a 1\nz loop z 1\n@label z z\n");
    auto ms = mec_decomposition(m);
    const Mec* ab = nullptr;
    for (const auto& mec : ms) {
        if (mec.states.size() == 2) ab = &mec;
    }
    REQUIRE(ab);
    auto s2 = stay_scheduler(m, *ab);
    CHECK(s2[choice_of(m, "a", "x")] == doctest::Approx(0.5));
    CHECK(s2[choice_of(m, "a", "y")] == doctest::Approx(0.5));
    CHECK(s2[choice_of(m, "a", "out")] == 0.0);
    // Complete the scheduler outside the MEC and check that S(C) is never left.
    auto full = s2;
    full.prob[choice_of(m, "z", "loop")] = 1.0;
    auto v = evaluate_scheduler(m, full, {{StateObjective::Kind::Invariant, m.state_set("!z")}});
    CHECK(v[0] == doctest::Approx(1.0));
}

TEST_CASE("Running example leaving scheduler") {
    Fig2Exists fx;
    const Mdp& pm = fx.rq.product.mdp;
    auto freq = expected_frequencies(fx.rq.quotient.mdp, fx.sigmaHat);
    auto leave = leave_scheduler(pm, fx.rq.quotient, fx.c1, fx.sigmaHat, freq);
    CHECK(leave[choice_of(pm, "s3|0|0", "d")] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(leave[choice_of(pm, "s3|0|0", "go")] == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(leave[choice_of(pm, "s4|0|0", "a")] == doctest::Approx(2.0 / 5.0).epsilon(1e-12));
    CHECK(leave[choice_of(pm, "s4|0|0", "go")] == doctest::Approx(3.0 / 5.0).epsilon(1e-12));

    // Without any frequency flowing into C1 there is nothing to leave.
    try {
        auto sched = hand_scheduler(fx.rq.quotient.mdp, {{"mec:s3|0|0", "tau", 0.5}, {"mec:s3|0|0", "d@s3|0|0", 0.5}});
        leave_scheduler(pm, fx.rq.quotient, fx.c1, sched, std::vector<double>(fx.rq.quotient.mdp.num_choices(), 0.0));
        FAIL("expected NoEntryMass");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoEntryMass);
    }
}

TEST_CASE("leaving schedulers reproduce exit distributions") {
    // MEC {a, b} with a single exit pair.
    Mdp one = parse_model_string("@initial i\ni go a 1\na go b 1\nb go a 1\nb out z 1\nz loop z 1\n@label z z\n");
    Quotient q1 = mec_quotient(one);
    std::size_t mi = static_cast<std::size_t>(q1.mecOf[*one.find_state("a")]);
    auto sh = hand_scheduler(q1.mdp, {{"mec:a", "out@b", 0.5}, {"mec:a", "tau", 0.5}});
    auto leave1 = leave_scheduler(one, q1, mi, sh, expected_frequencies(q1.mdp, sh));
    auto full = leave1;
    full.prob[choice_of(one, "i", "go")] = 1.0;
    full.prob[choice_of(one, "z", "loop")] = 1.0;
    CHECK(evaluate_scheduler(one, full, {{StateObjective::Kind::Reach, one.state_set("z")}})[0] == doctest::Approx(1.0));

    // Random 3-state MECs with two exit pairs leading to distinct sinks.
    std::mt19937_64 rng(41);
    for (int round = 0; round < 30; ++round) {
        MdpBuilder b;
        for (const char* s : {"i", "a", "b", "c", "x", "y"}) b.add_state(s);
        auto sid = [&](const char* s) { return *b.find_state(s); };
        auto entry = gen::random_split(rng, 3);
        b.add_transition(sid("i"), "go", sid("a"), entry[0]);
        b.add_transition(sid("i"), "go", sid("b"), entry[1]);
        b.add_transition(sid("i"), "go", sid("c"), entry[2]);
        b.add_transition(sid("a"), "go", sid("b"), Rational(1));
        b.add_transition(sid("b"), "go", sid("c"), Rational(1));
        b.add_transition(sid("c"), "go", sid("a"), Rational(1));
        auto w = gen::random_split(rng, 3);
        b.add_transition(sid("c"), "alt", sid("a"), w[0]);
        b.add_transition(sid("c"), "alt", sid("b"), w[1] + w[2]);
        b.add_transition(sid("a"), "ex", sid("x"), Rational(1));
        b.add_transition(sid("b"), "ex", sid("y"), Rational(1));
        b.add_transition(sid("x"), "loop", sid("x"), Rational(1));
        b.add_transition(sid("y"), "loop", sid("y"), Rational(1));
        b.add_initial(sid("i"));
        Mdp m = b.build();
        Quotient quo = mec_quotient(m);
        const std::size_t ci = static_cast<std::size_t>(quo.mecOf[*m.find_state("a")]);
        auto sigmaHat = random_scheduler(rng, quo.mdp);
        const ChoiceId tau = choice_of(quo.mdp, "mec:a", "tau");
        if (sigmaHat[tau] > 0.95) continue;
        auto leave = leave_scheduler(m, quo, ci, sigmaHat, expected_frequencies(quo.mdp, sigmaHat));
        auto full2 = leave;
        full2.prob[choice_of(m, "i", "go")] = 1.0;
        full2.prob[choice_of(m, "x", "loop")] = 1.0;
        full2.prob[choice_of(m, "y", "loop")] = 1.0;
        // Independent absorption solve on the induced chain.
        auto P = oracle::induced_chain(m, [&](ChoiceId c) { return full2[c]; });
        std::vector<bool> atX(m.num_states(), false);
        atX[*m.find_state("x")] = true;
        const double px = oracle::initial_value(m, oracle::chain_reach(P, atX));
        const double pTot = 1.0 - sigmaHat[tau];
        const double muX = sigmaHat[choice_of(quo.mdp, "mec:a", "ex@a")] / pTot;
        CHECK(std::abs(px - muX) < 1e-8);
    }
}

TEST_CASE("Running example assembled scheduler") {
    Fig2Exists fx;
    const Mdp& pm = fx.rq.product.mdp;
    auto sched = assemble_fmc_scheduler(pm, fx.rq.quotient, fx.sigmaHat);
    validate_scheduler(pm, sched);
    const ChoiceId b = choice_of(pm, "s0|0|0", "b");
    const StateId s3 = *pm.find_state("s3|0|0");
    auto upd = sched.update(b, s3, 0);
    CHECK(upd[1] == doctest::Approx(0.25));
    CHECK(upd[0] == doctest::Approx(0.75));
    // Internal moves and memory m1 never flip.
    auto internal = sched.update(choice_of(pm, "s3|0|0", "go"), *pm.find_state("s4|0|0"), 0);
    CHECK(internal[0] == 1.0);
    for (ChoiceId c = 0; c < pm.num_choices(); ++c) {
        for (const auto& t : pm.choice(c).dist) CHECK(sched.update(c, t.target, 1)[1] == 1.0);
    }
    CHECK(sched.initialMemory[*pm.find_state("s0|0|0")][0] == 1.0);

    auto values = evaluate_scheduler(pm, sched, product_objectives(fx.rq));
    REQUIRE(values.size() == 2);
    CHECK(values[0] >= 0.5 - 1e-9);
    CHECK(values[1] >= 0.5 - 1e-9);
    auto quotientValues = evaluate_scheduler(fx.rq.quotient.mdp, fx.sigmaHat, goal_objectives(fx.rq.form));
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(values[i] - quotientValues[i]) < 1e-8);

    auto dot = scheduler_to_dot(pm, sched);
    CHECK(dot.find("mem m1:0.25") != std::string::npos);
    CHECK(dot.find("digraph") == 0);
}

TEST_CASE("MEC-free models degenerate to the quotient scheduler") {
    Mdp m = parse_model_string("@initial s0\ns0 alpha t 0.7\ns0 alpha b 0.3\ns0 beta t 0.2\ns0 beta b 0.8\n@label t t\n",
                               BuildOptions{true});
    Quotient quo = mec_quotient(m);
    REQUIRE(quo.mecs.empty());
    auto sh = hand_scheduler(quo.mdp, {{"s0", "alpha", 0.4}, {"s0", "beta", 0.6}});
    auto sched = assemble_fmc_scheduler(m, quo, sh);
    for (ChoiceId c = 0; c < m.num_choices(); ++c) {
        CHECK(sched.next[0][c] == doctest::Approx(sh[c]));
        for (const auto& t : m.choice(c).dist) CHECK(sched.update(c, t.target, 0)[0] == 1.0);
    }
    auto v = evaluate_scheduler(m, sched, {{StateObjective::Kind::Reach, m.state_set("t")}});
    CHECK(v[0] == doctest::Approx(0.4 * 0.7 + 0.6 * 0.2));
}

TEST_CASE("assembled schedulers stay in each MEC with the quotient's bottom probability") {
    std::mt19937_64 rng(77);
    gen::MdpShape shape;
    shape.minStates = 4;
    shape.maxStates = 14;
    int withMecs = 0;
    for (int round = 0; round < 60; ++round) {
        Mdp m = gen::random_mdp(rng, shape);
        Quotient quo = mec_quotient(m);
        if (quo.mecs.empty()) continue;
        ++withMecs;
        auto sigmaHat = random_scheduler(rng, quo.mdp);
        auto sched = assemble_fmc_scheduler(m, quo, sigmaHat);
        std::vector<StateObjective> bots, stays;
        for (std::size_t i = 0; i < quo.mecs.size(); ++i) {
            std::vector<bool> bot(quo.mdp.num_states(), false), inC(m.num_states(), false);
            bot[quo.botState[i]] = true;
            for (StateId s : quo.mecs[i].states) inC[s] = true;
            bots.push_back({StateObjective::Kind::Reach, bot});
            stays.push_back({StateObjective::Kind::Persist, inC});
        }
        auto expect = evaluate_scheduler(quo.mdp, sigmaHat, bots);
        auto got = evaluate_scheduler(m, sched, stays);
        for (std::size_t i = 0; i < expect.size(); ++i) CHECK(std::abs(expect[i] - got[i]) < 1e-8);
    }
    CHECK(withMecs > 20);
}

TEST_CASE("flow schedulers satisfy the certified (exists,and) query") {
    std::mt19937_64 rng(8);
    int checked = 0;
    for (int round = 0; round < 60; ++round) {
        auto form = gen::random_reach_form(rng, 7, 3, 2, true);
        const bool lower = round % 2 == 0;
        const auto b1 = to_string(gen::grid_bound(rng)), b2 = to_string(gen::grid_bound(rng));
        const CmpOp op = lower ? CmpOp::Ge : CmpOp::Le;
        auto q = reach_query(Quantifier::Exists, Connective::And, {{op, b1.c_str()}, {op, b2.c_str()}});
        auto cert = find_certificate(form, q);
        if (!cert) continue;
        auto sigma = memoryless_from_flow(form.mdp, cert->at("y"));
        auto v = evaluate_scheduler(form.mdp, sigma, goal_objectives(form));
        for (std::size_t i = 0; i < 2; ++i) {
            const double bound = q.predicates[i].bound.get_d();
            CHECK((lower ? v[i] >= bound - 1e-8 : v[i] <= bound + 1e-8));
        }
        ++checked;
    }
    CHECK(checked > 15);
}

TEST_CASE("end-to-end (exists,and) scheduler witness") {
    Mdp n = fixtures::fig2();
    auto w = exists_and_scheduler(n, fixtures::fig2_exists_and());
    REQUIRE(w.values.size() == 2);
    CHECK(w.values[0] >= 0.5 - 1e-8);
    CHECK(w.values[1] >= 0.5 - 1e-8);
    validate_scheduler(w.rq.product.mdp, w.scheduler);
    CHECK_THROWS_AS(exists_and_scheduler(n, fixtures::fig2_forall_or()), Error);

    Query tooMuch = fixtures::fig2_exists_and();
    tooMuch.predicates[1].bound = Rational(9, 10);
    CHECK_THROWS_AS(exists_and_scheduler(n, tooMuch), Error);
}
