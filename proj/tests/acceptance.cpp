// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include "farkas/errors.hpp"
#include "farkas/graph.hpp"
#include "farkas/mp_cert.hpp"
#include "farkas/product.hpp"
#include "farkas/reach_cert.hpp"
#include "farkas/witness_sched.hpp"
#include "farkas/witness_subsys.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace farkas;

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kTol = 1e-6;

struct Verdict {
    bool ok = true;
    std::ostringstream detail;
    std::vector<std::string> failures;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (failures.size() < 8) failures.push_back(what);
        }
    }
};

int g_failed = 0;

void criterion(int id, const std::string& title, double budgetSeconds, const std::function<void(Verdict&)>& body) {
    Verdict v;
    auto start = Clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    v.expect(secs < budgetSeconds, "runtime " + std::to_string(secs) + " s exceeds " + std::to_string(budgetSeconds) + " s");
    std::printf("[%s] %d %s (%.2f s / %.0f s) %s\n", v.ok ? "PASS" : "FAIL", id, title.c_str(), secs, budgetSeconds,
                v.detail.str().c_str());
    for (const auto& f : v.failures) std::printf("       - %s\n", f.c_str());
    std::fflush(stdout);
    if (!v.ok) ++g_failed;
}

std::set<std::string> names_of(const Mdp& m, const std::vector<bool>& set) {
    std::set<std::string> out;
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (set[s]) out.insert(m.state_name(s));
    }
    return out;
}

std::set<std::string> names_of(const Mdp& m, const std::vector<StateId>& states) {
    std::set<std::string> out;
    for (StateId s : states) out.insert(m.state_name(s));
    return out;
}

Query make_query(PredicateKind kind, Quantifier quant, Connective conn, CmpOp op, const std::vector<Rational>& bounds) {
    Query q;
    q.quantifier = quant;
    q.connective = conn;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        Predicate p;
        p.kind = kind;
        p.label = (kind == PredicateKind::MeanPayoff ? "r" : "G") + std::to_string(i + 1);
        p.op = op;
        p.bound = bounds[i];
        q.predicates.push_back(p);
    }
    return q;
}

CheckOptions at_tolerance() {
    CheckOptions o;
    o.tolerance = kTol;
    return o;
}

ChoiceId choice_of(const Mdp& m, const std::string& state, const std::string& action) {
    auto s = m.find_state(state);
    if (!s) throw std::runtime_error("missing state " + state);
    auto c = m.find_choice(*s, action);
    if (!c) throw std::runtime_error("missing action " + action + " at " + state);
    return *c;
}

// ---- 1 ----

void example_pipeline(Verdict& v) {
    const Mdp n = fixtures::fig2();
    const Query q = fixtures::fig2_forall_or();
    ReducedQuery rq = reduce_query(n, normalize_lower_bounds(q));

    const auto& pm = rq.product.mdp;
    const std::set<std::string> productStates(pm.state_names().begin(), pm.state_names().end());
    v.expect(productStates == std::set<std::string>{"s0|0|0", "s1|0|0", "s1|1|1", "s2|1|1", "s3|0|1", "s4|0|1"},
             "product states differ");
    auto mecs = mec_decomposition(pm);
    std::set<std::set<std::string>> mecNames;
    for (const auto& mec : mecs) mecNames.insert(names_of(pm, mec.states));
    v.expect(mecNames == std::set<std::set<std::string>>{{"s1|0|0"}, {"s1|1|1", "s2|1|1"}, {"s3|0|1", "s4|0|1"}},
             "product MECs differ");
    v.expect(rq.quotient.mdp.num_states() == 7, "quotient has " + std::to_string(rq.quotient.mdp.num_states()) + " states");

    auto res = certify(rq.form, rq.query);
    v.expect(res.holds, "query not certified");
    v.expect(res.certificate.variant == CertVariant::ForallOr, "certificate is not (forall,or)");
    v.expect(check_certificate(rq.form, res.certificate, at_tolerance()).ok, "checker rejects the certificate");

    auto ws = milp_min_subsystem(rq.form, rq.query);
    ws.level = WitnessLevel::Quotient;
    auto quotientKept = names_of(rq.form.mdp, ws.kept);
    v.expect(!quotientKept.count("mec:s3|0|1") && !quotientKept.count("bot:s3|0|1"),
             "quotient subsystem keeps the excluded MEC");
    v.expect(check_certificate(reach_subsystem(rq.form, ws.kept).form, ws.certificate, at_tolerance()).ok,
             "quotient subsystem certificate rejected");
    auto orig = transfer_subsystem(ws, n, q, rq);
    auto origKept = names_of(n, orig.kept);
    v.expect(!origKept.count("s3") && !origKept.count("s4"), "original subsystem keeps s3 or s4");
    v.expect(certify_reach_inv(orig.subsystem.mdp, q).holds, "original subsystem does not re-certify");
    v.detail << "mecs=" << mecs.size() << " quotient=" << rq.quotient.mdp.num_states() << " kept=" << ws.kept_count()
             << "/" << rq.form.mdp.num_states() << " original=" << orig.kept_count() << "/" << n.num_states();
}

// ---- 2 ----

void example_scheduler(Verdict& v) {
    const Mdp n = fixtures::fig2();
    ReducedQuery rq = reduce_query(n, normalize_lower_bounds(fixtures::fig2_exists_and()));
    const Mdp& qm = rq.quotient.mdp;
    MemorylessScheduler sigmaHat;
    sigmaHat.prob.assign(qm.num_choices(), 0.0);
    for (StateId s = 0; s < qm.num_states(); ++s) {
        if (qm.num_choices(s) > 0) sigmaHat.prob[qm.choice_begin(s)] = 1.0;
    }
    auto set = [&](const char* s, const char* a, double p) {
        ChoiceId c = choice_of(qm, s, a);
        for (ChoiceId d = qm.choice_begin(qm.choice(c).state); d < qm.choice_end(qm.choice(c).state); ++d) {
            if (d != c && sigmaHat.prob[d] == 1.0) sigmaHat.prob[d] = 0.0;
        }
        sigmaHat.prob[c] = p;
    };
    set("mec:s3|0|0", "a@s4|0|0", 0.5);
    set("mec:s3|0|0", "d@s3|0|0", 0.25);
    set("mec:s3|0|0", "tau", 0.25);
    set("mec:s1|0|0", "c@s1|0|0", 0.25);
    set("mec:s1|0|0", "tau", 0.75);
    validate_scheduler(qm, sigmaHat);

    const Mdp& pm = rq.product.mdp;
    FmcScheduler sched = assemble_fmc_scheduler(pm, rq.quotient, sigmaHat);
    validate_scheduler(pm, sched);
    auto values = evaluate_scheduler(pm, sched, product_objectives(rq));
    v.expect(values.size() == 2, "expected two objectives");
    for (std::size_t i = 0; i < values.size(); ++i) {
        v.expect(std::abs(values[i] - 0.5) < 1e-8, "objective " + std::to_string(i + 1) + " = " + std::to_string(values[i]));
    }
    const auto flip = sched.update(choice_of(pm, "s0|0|0", "b"), *pm.find_state("s3|0|0"), 0);
    v.expect(std::abs(flip[1] - 0.25) < 1e-12, "flip probability " + std::to_string(flip[1]));
    v.detail << "values=(" << values.at(0) << ", " << values.at(1) << ") flip=" << flip[1];
}

// ---- 3 and 6 ----

struct ProducedCertificate {
    ReachForm form;
    Certificate cert;
};

std::vector<ProducedCertificate> g_produced;

void duality(Verdict& v) {
    std::mt19937_64 rng(20240601);
    std::size_t decided = 0, certificates = 0;
    const std::pair<Quantifier, Connective> types[] = {{Quantifier::Exists, Connective::And},
                                                       {Quantifier::Exists, Connective::Or},
                                                       {Quantifier::Forall, Connective::Or},
                                                       {Quantifier::Forall, Connective::And}};
    for (int round = 0; round < 200; ++round) {
        // At most 17 inner states plus at most 3 targets.
        auto form = gen::random_reach_form(rng, 17, 3, 2, true);
        for (const auto& [quant, conn] : types) {
            for (CmpOp op : {CmpOp::Ge, CmpOp::Le}) {
                Query q = make_query(PredicateKind::Reach, quant, conn, op, {gen::grid_bound(rng), gen::grid_bound(rng)});
                auto pos = find_certificate(form, q);
                auto neg = find_certificate(form, negate(q));
                const std::string tag = "form " + std::to_string(round) + ": " + describe(q);
                v.expect(pos.has_value() != neg.has_value(),
                         tag + (pos ? " both sides certified" : " neither side certified"));
                for (auto* c : {&pos, &neg}) {
                    if (!*c) continue;
                    ++certificates;
                    v.expect(check_certificate(form, **c, at_tolerance()).ok, tag + " certificate rejected");
                    g_produced.push_back({form, **c});
                }
                ++decided;
            }
        }
    }
    v.detail << "queries=" << decided << " certificates=" << certificates;
}

void support_monotonicity(Verdict& v) {
    std::size_t reach = 0;
    for (const auto& [form, cert] : g_produced) {
        auto ws = support_subsystem(form, cert);
        v.expect(check_certificate(reach_subsystem(form, ws.kept).form, ws.certificate, at_tolerance()).ok,
                 describe(cert.query) + ": support subsystem certificate rejected");
        ++reach;
    }

    std::mt19937_64 rng(6061);
    std::uniform_int_distribution<long> grid(-12, 12);
    gen::MdpShape shape;
    shape.maxStates = 12;
    std::size_t mp = 0, leaks = 0;
    double worstLeak = 0.0;
    for (int round = 0; round < 50; ++round) {
        Mdp m = gen::with_random_rewards(rng, gen::random_mdp(rng, shape), 2);
        for (auto [quant, conn] : {std::pair{Quantifier::Exists, Connective::And}, {Quantifier::Forall, Connective::Or}}) {
            Rational l1(grid(rng), 4), l2(grid(rng), 4);
            l1.canonicalize();
            l2.canonicalize();
            auto res = certify_mp(m, make_query(PredicateKind::MeanPayoff, quant, conn, CmpOp::Ge, {l1, l2}));
            v.expect(check_mp_certificate(m, res.certificate, at_tolerance()).ok, "mean-payoff certificate rejected");
            auto ws = support_subsystem_mp(m, res.certificate);
            v.expect(check_mp_certificate(ws.subsystem.mdp, ws.certificate, at_tolerance()).ok,
                     "mean-payoff support subsystem certificate rejected");
            ++mp;
            if (res.certificate.variant == CertVariant::MpExistsAnd) {
                const double leak = recurrent_leak(m, res.certificate);
                worstLeak = std::max(worstLeak, leak);
                v.expect(leak < kTol, "recurrent flow outside MECs: " + std::to_string(leak));
                ++leaks;
            }
        }
    }
    v.detail << "reach=" << reach << " mp=" << mp << " mp-exists=" << leaks << " max-leak=" << worstLeak;
}

// ---- 4 ----

void oracle_agreement(Verdict& v) {
    std::mt19937_64 rng(4242);
    std::size_t reachCompared = 0, mpCompared = 0;
    auto pick_bound = [&](std::initializer_list<double> avoid) {
        for (int attempt = 0; attempt < 50; ++attempt) {
            Rational l = gen::grid_bound(rng);
            bool clear = true;
            for (double a : avoid) clear = clear && std::abs(a - l.get_d()) > kTol;
            if (clear) return l;
        }
        return Rational(-1);
    };
    for (int round = 0; round < 100; ++round) {
        const bool ecFree = round % 2 == 0;
        auto form = gen::random_reach_form(rng, 10, 3, 1, ecFree);
        const double vmax = oracle::initial_value(form.mdp, oracle::vi_reach(form.mdp, form.goals[0], true));
        const double vmin = oracle::initial_value(form.mdp, oracle::vi_reach(form.mdp, form.goals[0], false));
        Rational l = pick_bound({vmax, vmin});
        if (l < 0) continue;
        const double ld = l.get_d();
        auto agree = [&](Quantifier quant, CmpOp op, bool expected) {
            auto res = certify(form, make_query(PredicateKind::Reach, quant,
                                                quant == Quantifier::Exists ? Connective::And : Connective::Or, op, {l}));
            v.expect(res.holds == expected, "reach verdict disagrees with value iteration at bound " + to_string(l));
            v.expect(check_certificate(form, res.certificate, at_tolerance()).ok, "reach certificate rejected");
        };
        agree(Quantifier::Exists, CmpOp::Ge, vmax >= ld);
        agree(Quantifier::Forall, CmpOp::Le, vmax <= ld);
        if (ecFree) {
            agree(Quantifier::Forall, CmpOp::Ge, vmin >= ld);
            agree(Quantifier::Exists, CmpOp::Le, vmin <= ld);
        }
        ++reachCompared;
    }

    std::uniform_int_distribution<long> grid(-20, 20);
    gen::MdpShape shape;
    shape.maxStates = 10;
    for (int round = 0; round < 100; ++round) {
        Mdp m = gen::with_random_rewards(rng, gen::random_mdp(rng, shape), 1);
        std::vector<double> r(m.num_choices());
        for (ChoiceId c = 0; c < m.num_choices(); ++c) r[c] = m.rewards()[0].values[c].get_d();
        const double best = oracle::mp_policy_iteration(m, r, true)[0];
        const double worst = oracle::mp_policy_iteration(m, r, false)[0];
        Rational l;
        bool found = false;
        for (int attempt = 0; attempt < 50 && !found; ++attempt) {
            l = Rational(grid(rng), 4);
            l.canonicalize();
            found = std::abs(best - l.get_d()) > kTol && std::abs(worst - l.get_d()) > kTol;
        }
        if (!found) continue;
        const double ld = l.get_d();
        auto ex = certify_mp(m, make_query(PredicateKind::MeanPayoff, Quantifier::Exists, Connective::And, CmpOp::Ge, {l}));
        v.expect(ex.holds == (best >= ld), "mean-payoff (exists) verdict disagrees with policy iteration");
        v.expect(check_mp_certificate(m, ex.certificate, at_tolerance()).ok, "mean-payoff certificate rejected");
        auto fa = certify_mp(m, make_query(PredicateKind::MeanPayoff, Quantifier::Forall, Connective::Or, CmpOp::Ge, {l}));
        v.expect(fa.holds == (worst >= ld), "mean-payoff (forall) verdict disagrees with policy iteration");
        v.expect(check_mp_certificate(m, fa.certificate, at_tolerance()).ok, "mean-payoff certificate rejected");
        ++mpCompared;
    }
    v.expect(reachCompared == 100, "only " + std::to_string(reachCompared) + " reach instances compared");
    v.expect(mpCompared == 100, "only " + std::to_string(mpCompared) + " mean-payoff instances compared");
    v.detail << "reach=" << reachCompared << " mp=" << mpCompared;
}

// ---- 5 ----

// Pr(◇ copy of s) in the chain that leaves s with probability λ(s), by an explicit absorbing construction.
std::vector<double> absorption(const Mdp& dtmc, const std::vector<double>& delta, const std::vector<double>& lambda) {
    const auto n = static_cast<Eigen::Index>(dtmc.num_states());
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (StateId s = 0; s < dtmc.num_states(); ++s) {
        for (const auto& t : dtmc.choice(dtmc.choice_begin(s)).dist) Q(s, t.target) += (1.0 - lambda[s]) * t.p;
        Q(s, n + s) = lambda[s];
        Q(n + s, n + s) = 1.0;
    }
    std::vector<double> out(dtmc.num_states(), 0.0);
    for (Eigen::Index s = 0; s < n; ++s) {
        std::vector<bool> target(2 * n, false);
        target[n + s] = true;
        auto x = oracle::chain_reach(Q, target);
        for (Eigen::Index t = 0; t < n; ++t) out[s] += delta[t] * x[t];
    }
    return out;
}

void exit_rates(Verdict& v) {
    std::mt19937_64 rng(555);
    std::uniform_int_distribution<std::size_t> size(1, 10);
    double worst = 0.0;
    for (int round = 0; round < 100; ++round) {
        const std::size_t n = size(rng);
        Mdp d = gen::random_strongly_connected_dtmc(rng, n);
        auto delta = gen::random_distribution(rng, n);
        auto mu = gen::random_distribution(rng, n);
        auto lambda = solve_exit_rates(d, delta, mu);
        auto reached = absorption(d, delta, lambda);
        for (std::size_t s = 0; s < n; ++s) {
            v.expect(lambda[s] >= 0.0 && lambda[s] <= 1.0, "rate outside [0,1]: " + std::to_string(lambda[s]));
            worst = std::max(worst, std::abs(reached[s] - mu[s]));
        }
    }
    v.expect(worst < 1e-8, "absorption error " + std::to_string(worst));
    v.detail << "instances=100 max-error=" << worst;
}

// ---- 7 ----

void milp_minimality(Verdict& v) {
    std::mt19937_64 rng(777);
    std::size_t instances = 0, compared = 0;
    for (int round = 0; round < 400 && instances < 30; ++round) {
        // At most 9 inner states plus at most 3 targets.
        auto form = gen::random_reach_form(rng, 9, 2, 2, true);
        std::vector<std::pair<Query, std::size_t>> done;
        for (auto [quant, conn] : {std::pair{Quantifier::Exists, Connective::And}, {Quantifier::Forall, Connective::Or}}) {
            Query q = make_query(PredicateKind::Reach, quant, conn, CmpOp::Ge,
                                 {gen::grid_bound(rng) / 2, gen::grid_bound(rng) / 2});
            if (!certify(form, q).holds) break;
            auto ws = milp_min_subsystem(form, q);
            if (ws.optimality != Optimality::Proven) {
                v.expect(false, describe(q) + ": MILP not proven optimal");
                break;
            }
            done.emplace_back(q, ws.kept_count());
        }
        if (done.size() != 2) continue;
        ++instances;
        for (const auto& [q, size] : done) {
            auto brute = brute_force_min_subsystem(form, q);
            v.expect(brute == std::optional<std::size_t>(size),
                     describe(q) + ": MILP " + std::to_string(size) + " vs enumeration " +
                         (brute ? std::to_string(*brute) : std::string("none")));
            ++compared;
        }
    }
    v.expect(instances == 30, "only " + std::to_string(instances) + " instances with both queries holding");
    v.detail << "instances=" << instances << " comparisons=" << compared;
}

}  // namespace

int main() {
    criterion(1, "running example pipeline", 1.0, example_pipeline);
    criterion(2, "running example scheduler transfer", 1.0, example_scheduler);
    criterion(3, "duality suite", 60.0, duality);
    criterion(4, "oracle agreement", 60.0, oracle_agreement);
    criterion(5, "exit-rate property suite", 10.0, exit_rates);
    criterion(6, "support and monotonicity suite", 120.0, support_monotonicity);
    criterion(7, "MILP minimality", 120.0, milp_minimality);
    std::printf("%s: %d of 7 criteria failed\n", g_failed ? "FAIL" : "PASS", g_failed);
    return g_failed ? 1 : 0;
}
