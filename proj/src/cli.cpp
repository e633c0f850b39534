#include "farkas/cli.hpp"

#include "farkas/errors.hpp"
#include "farkas/graph.hpp"
#include "farkas/model.hpp"
#include "farkas/mp_cert.hpp"
#include "farkas/product.hpp"
#include "farkas/query.hpp"
#include "farkas/reach_cert.hpp"
#include "farkas/witness_sched.hpp"
#include "farkas/witness_subsys.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace farkas::cli {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct RunConfig {
    std::string model;
    std::string query;
    std::string certificate;
    std::string output;
    std::string keptOutput;
    std::string level = "quotient";
    std::string expectQuery;
    bool exact = false;
    bool weights = false;
    double timeLimit = 0.0;
    std::string dumpLp;
};

class Stopwatch {
public:
    double lap() {
        auto now = Clock::now();
        double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    Clock::time_point last_ = Clock::now();
};

// Internal failure that maps to a specific exit code.
struct Exit {
    int code;
    std::string message;
};

CertifyOptions certify_options(const RunConfig& cfg) {
    CertifyOptions o;
    o.exact = cfg.exact;
    if (cfg.timeLimit > 0) o.limits.timeSeconds = cfg.timeLimit;
    o.limits.dumpPath = cfg.dumpLp;
    return o;
}

CheckOptions check_options(const Certificate& cert, bool forceExact) {
    CheckOptions o;
    o.mode = forceExact ? CheckMode::Exact : cert.mode;
    o.tolerance = cert.tolerance > 0 ? cert.tolerance : kCheckTolerance;
    return o;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Exit{kUsage, "cannot open '" + path + "'"};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw Exit{kUsage, "cannot write '" + path + "'"};
    f << text;
}

void report_timings(std::ostream& err, double build, double cert) {
    err << std::fixed << std::setprecision(3) << "Build: " << build << " s\n"
        << "Cert: " << cert << " s\n";
    err.unsetf(std::ios::fixed);
}

void report_violations(const CheckResult& r, std::ostream& err) {
    for (const auto& v : r.violations) err << "violated: " << v.what << " (residual " << v.residual << ")\n";
}

std::string model_text(const Mdp& m) {
    std::ostringstream ss;
    write_model(m, ss);
    return ss.str();
}

std::string extra_json(const Query& user, QueryFamily family, bool holds) {
    json j;
    j["userQuery"] = json::parse(query_to_json(user));
    j["family"] = family == QueryFamily::ReachInvariant ? "reach-invariant" : "mean-payoff";
    j["level"] = family == QueryFamily::ReachInvariant ? "quotient" : "model";
    j["holds"] = holds;
    return j.dump();
}

ReducedQuery reduce_user_query(const Mdp& mdp, const Query& q) { return reduce_query(mdp, normalize_lower_bounds(q)); }

// ---- commands ----

int cmd_certify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Stopwatch sw;
    Mdp mdp = parse_model_file(cfg.model);
    Query q = parse_query_file(cfg.query);
    const QueryFamily family = validate(q);
    const CertifyOptions opts = certify_options(cfg);
    CertifyResult res;
    std::string text;
    double build = 0, cert = 0;
    if (family == QueryFamily::ReachInvariant) {
        ReducedQuery rq = reduce_user_query(mdp, q);
        build = sw.lap();
        res = certify(rq.form, rq.query, opts);
        text = certificate_to_json(res.certificate, rq.form.mdp, extra_json(q, family, res.holds));
        Certificate back = certificate_from_json(text, rq.form.mdp);
        auto chk = check_certificate(rq.form, back, check_options(back, false));
        cert = sw.lap();
        if (!chk.ok) {
            report_violations(chk, err);
            throw Exit{kUnknown, "certificate failed re-validation"};
        }
    } else {
        build = sw.lap();
        res = certify_mp(mdp, q, opts);
        text = certificate_to_json(res.certificate, mdp, extra_json(q, family, res.holds));
        Certificate back = certificate_from_json(text, mdp);
        auto chk = check_mp_certificate(mdp, back, check_options(back, false));
        cert = sw.lap();
        if (!chk.ok) {
            report_violations(chk, err);
            throw Exit{kUnknown, "certificate failed re-validation"};
        }
    }
    report_timings(err, build, cert);
    err << (res.holds ? "holds" : "violated") << ": " << describe(q) << "\n";
    emit(cfg.output, text + "\n", out);
    return res.holds ? kHolds : kViolated;
}

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Mdp mdp = parse_model_file(cfg.model);
    const std::string text = read_file(cfg.certificate);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("certificate: ") + e.what());
    }
    if (!j.contains("userQuery")) throw Error(ErrorCode::ShapeMismatch, "certificate carries no query echo");
    Query user = parse_query_json(j.at("userQuery").dump());
    if (!cfg.expectQuery.empty()) {
        Query expected = parse_query_file(cfg.expectQuery);
        if (!(expected == user)) {
            err << "certificate was issued for a different query: " << describe(user) << "\n";
            out << "rejected\n";
            return kViolated;
        }
    }
    const QueryFamily family = validate(user);
    Certificate cert;
    CheckResult r;
    bool proves = false, disproves = false;
    if (family == QueryFamily::ReachInvariant) {
        ReducedQuery rq = reduce_user_query(mdp, user);
        cert = certificate_from_json(text, rq.form.mdp);
        proves = cert.query == rq.query;
        disproves = cert.query == negate(rq.query);
        r = check_certificate(rq.form, cert, check_options(cert, cfg.exact));
    } else {
        cert = certificate_from_json(text, mdp);
        const Query qn = normalize_mean_payoff(user);
        proves = cert.query == qn;
        disproves = cert.query == normalize_mean_payoff(negate(qn));
        r = check_mp_certificate(mdp, cert, check_options(cert, cfg.exact));
    }
    if (!proves && !disproves) {
        err << "certificate proves neither the query nor its negation\n";
        out << "rejected\n";
        return kViolated;
    }
    if (!r.ok) {
        report_violations(r, err);
        out << "rejected\n";
        return kViolated;
    }
    out << "accepted: certificate shows the query " << (proves ? "holds" : "is violated") << "\n";
    return kHolds;
}

std::string kept_sidecar(const Mdp& m, const std::vector<bool>& kept) {
    std::vector<std::string> names;
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (kept[s]) names.push_back(m.state_name(s));
    }
    std::sort(names.begin(), names.end());
    std::string text;
    for (const auto& n : names) text += n + "\n";
    return text;
}

void report_size(std::ostream& err, const WitnessSubsystem& ws, std::size_t total) {
    const std::size_t k = ws.kept_count();
    err << "Size: " << k << "/" << total << " states (" << std::fixed << std::setprecision(1)
        << (total ? 100.0 * static_cast<double>(k) / static_cast<double>(total) : 0.0) << "%), level "
        << level_name(ws.level) << ", optimality " << optimality_name(ws.optimality) << "\n";
    err.unsetf(std::ios::fixed);
}

int cmd_witness_subsystem(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Stopwatch sw;
    Mdp mdp = parse_model_file(cfg.model);
    Query q = parse_query_file(cfg.query);
    const QueryFamily family = validate(q);
    const CertifyOptions copts = certify_options(cfg);
    WitnessOptions wopts;
    wopts.certify = copts;
    WitnessSubsystem ws;
    const Mdp* levelModel = &mdp;
    ReducedQuery rq;
    double build = 0;
    if (family == QueryFamily::ReachInvariant) {
        if (cfg.level != "quotient" && cfg.level != "original") throw Exit{kUsage, "--level must be quotient or original"};
        rq = reduce_user_query(mdp, q);
        build = sw.lap();
        auto verdict = certify(rq.form, rq.query, copts);
        if (!verdict.holds) {
            err << "violated: " << describe(q) << " (no witnessing subsystem)\n";
            return kViolated;
        }
        if (cfg.weights) wopts.weights = quotient_weights(rq);
        ws = milp_min_subsystem(rq.form, rq.query, wopts);
        ws.level = WitnessLevel::Quotient;
        if (!check_certificate(reach_subsystem(rq.form, ws.kept).form, ws.certificate).ok) {
            throw Exit{kUnknown, "quotient subsystem failed re-validation"};
        }
        levelModel = &rq.form.mdp;
        if (cfg.level == "original") {
            WitnessSubsystem orig = transfer_subsystem(ws, mdp, q, rq, copts);
            if (!certify_reach_inv(orig.subsystem.mdp, q, copts).holds) {
                throw Exit{kUnknown, "original subsystem failed re-validation"};
            }
            orig.optimality = ws.optimality == Optimality::Incumbent ? Optimality::Incumbent : orig.optimality;
            ws = std::move(orig);
            levelModel = &mdp;
        }
    } else {
        build = sw.lap();
        auto verdict = certify_mp(mdp, q, copts);
        if (!verdict.holds) {
            err << "violated: " << describe(q) << " (no witnessing subsystem)\n";
            return kViolated;
        }
        ws = milp_min_subsystem_mp(mdp, q, wopts);
        if (!check_mp_certificate(ws.subsystem.mdp, ws.certificate).ok) {
            throw Exit{kUnknown, "subsystem failed re-validation"};
        }
    }
    report_timings(err, build, sw.lap());
    report_size(err, ws, levelModel->num_states());
    emit(cfg.output, model_text(ws.subsystem.mdp), out);
    if (!cfg.keptOutput.empty()) emit(cfg.keptOutput, kept_sidecar(*levelModel, ws.kept), out);
    return ws.optimality == Optimality::Incumbent ? kTimeout : kHolds;
}

int cmd_witness_scheduler(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Stopwatch sw;
    Mdp mdp = parse_model_file(cfg.model);
    Query q = parse_query_file(cfg.query);
    if (validate(q) != QueryFamily::ReachInvariant) {
        throw Exit{kUsage, "scheduler witnesses cover reach/invariant queries only"};
    }
    const CertifyOptions copts = certify_options(cfg);
    ReducedQuery rq = reduce_user_query(mdp, q);
    const double build = sw.lap();
    auto verdict = certify(rq.form, rq.query, copts);
    if (!verdict.holds) {
        report_timings(err, build, sw.lap());
        err << "violated: " << describe(q) << " (no witnessing scheduler)\n";
        return kViolated;
    }
    const Query& nq = rq.query;
    std::string dot;
    if (nq.quantifier == Quantifier::Exists && (nq.connective == Connective::And || nq.size() == 1)) {
        SchedulerWitness w = exists_and_scheduler(mdp, q, copts);
        validate_scheduler(w.rq.product.mdp, w.scheduler);
        dot = scheduler_to_dot(w.rq.product.mdp, w.scheduler);
        report_timings(err, build, sw.lap());
        for (std::size_t i = 0; i < w.values.size(); ++i) {
            err << "predicate " << i + 1 << ": " << w.values[i] << " (bound " << to_string(nq.predicates[i].bound) << ")\n";
        }
    } else if (nq.quantifier == Quantifier::Forall && (nq.connective == Connective::Or || nq.size() == 1)) {
        ForallOrWitness w = forall_or_witness(rq.form, verdict.certificate);
        validate_scheduler(rq.form.mdp, w.scheduler);
        dot = scheduler_to_dot(rq.form.mdp, w.scheduler);
        report_timings(err, build, sw.lap());
        err << "separating scheduler: weighted value " << w.gamma << (w.maximize ? " <= " : " >= ") << w.threshold
            << "\n";
    } else {
        throw Exit{kUsage, "scheduler witnesses exist for (exists,and) and (forall,or) queries"};
    }
    emit(cfg.output, dot, out);
    return kHolds;
}

int cmd_product(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    Mdp mdp = parse_model_file(cfg.model);
    ReducedQuery rq = reduce_user_query(mdp, parse_query_file(cfg.query));
    emit(cfg.output, model_text(rq.product.mdp), out);
    return kHolds;
}

int cmd_quotient(const RunConfig& cfg, std::ostream& out, std::ostream&) {
    Mdp mdp = parse_model_file(cfg.model);
    if (cfg.query.empty()) {
        emit(cfg.output, model_text(mec_quotient(mdp).mdp), out);
    } else {
        ReducedQuery rq = reduce_user_query(mdp, parse_query_file(cfg.query));
        emit(cfg.output, model_text(rq.quotient.mdp), out);
    }
    return kHolds;
}

int cmd_reduce(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Mdp mdp = parse_model_file(cfg.model);
    ReducedQuery rq = reduce_user_query(mdp, parse_query_file(cfg.query));
    err << "reduced query: " << describe(rq.query) << "\n";
    emit(cfg.output, model_text(rq.form.mdp), out);
    return kHolds;
}

int exit_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::Parse:
        case ErrorCode::InvalidModel:
        case ErrorCode::UnknownLabel:
        case ErrorCode::UnsupportedQuery:
        case ErrorCode::MixedOperators:
        case ErrorCode::MixedFamilies:
        case ErrorCode::StrictUnsupported:
        case ErrorCode::ShapeMismatch:
        case ErrorCode::BlowupLimit:
            return kUsage;
        default:
            return kUnknown;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Certifying multi-objective model checker for finite MDPs", "farkas"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto common = [&](CLI::App* sub) {
        sub->add_flag("--exact", cfg.exact, "Reconstruct rational certificates and check exactly");
        sub->add_option("--time-limit", cfg.timeLimit, "Solver time limit in seconds")->check(CLI::PositiveNumber);
        sub->add_option("--dump-lp", cfg.dumpLp, "Write every solved system as LP text with this path prefix");
    };

    auto* certifyCmd = app.add_subcommand("certify", "Decide a query and write a certificate");
    certifyCmd->add_option("model", cfg.model)->required()->check(CLI::ExistingFile);
    certifyCmd->add_option("query", cfg.query)->required()->check(CLI::ExistingFile);
    certifyCmd->add_option("-o,--output", cfg.output, "Certificate file (default: stdout)");
    common(certifyCmd);

    auto* checkCmd = app.add_subcommand("check", "Check a certificate against a model");
    checkCmd->add_option("model", cfg.model)->required()->check(CLI::ExistingFile);
    checkCmd->add_option("certificate", cfg.certificate)->required()->check(CLI::ExistingFile);
    checkCmd->add_option("--query", cfg.expectQuery, "Require the certificate to concern this query")
        ->check(CLI::ExistingFile);
    checkCmd->add_flag("--exact", cfg.exact, "Check in exact arithmetic");

    auto* subCmd = app.add_subcommand("witness-subsystem", "Compute a minimal witnessing subsystem");
    subCmd->add_option("model", cfg.model)->required()->check(CLI::ExistingFile);
    subCmd->add_option("query", cfg.query)->required()->check(CLI::ExistingFile);
    subCmd->add_option("-o,--output", cfg.output, "Subsystem model file (default: stdout)");
    subCmd->add_option("--kept", cfg.keptOutput, "Write the kept state names, one per line");
    subCmd->add_option("--level", cfg.level, "quotient or original")
        ->check(CLI::IsMember({"quotient", "original"}));
    subCmd->add_flag("--weights", cfg.weights, "Weigh quotient states by the original states they represent");
    common(subCmd);

    auto* schedCmd = app.add_subcommand("witness-scheduler", "Compute a witnessing scheduler as DOT");
    schedCmd->add_option("model", cfg.model)->required()->check(CLI::ExistingFile);
    schedCmd->add_option("query", cfg.query)->required()->check(CLI::ExistingFile);
    schedCmd->add_option("-o,--output", cfg.output, "DOT file (default: stdout)");
    common(schedCmd);

    auto* productCmd = app.add_subcommand("product", "Write the product model of a query");
    productCmd->add_option("model", cfg.model)->required()->check(CLI::ExistingFile);
    productCmd->add_option("query", cfg.query)->required()->check(CLI::ExistingFile);
    productCmd->add_option("-o,--output", cfg.output);

    auto* quotientCmd = app.add_subcommand("quotient", "Write the MEC quotient (of the query product if given)");
    quotientCmd->add_option("model", cfg.model)->required()->check(CLI::ExistingFile);
    quotientCmd->add_option("query", cfg.query)->check(CLI::ExistingFile);
    quotientCmd->add_option("-o,--output", cfg.output);

    auto* reduceCmd = app.add_subcommand("reduce", "Write the reachability form a query reduces to");
    reduceCmd->add_option("model", cfg.model)->required()->check(CLI::ExistingFile);
    reduceCmd->add_option("query", cfg.query)->required()->check(CLI::ExistingFile);
    reduceCmd->add_option("-o,--output", cfg.output);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (certifyCmd->parsed()) return cmd_certify(cfg, out, err);
        if (checkCmd->parsed()) return cmd_check(cfg, out, err);
        if (subCmd->parsed()) return cmd_witness_subsystem(cfg, out, err);
        if (schedCmd->parsed()) return cmd_witness_scheduler(cfg, out, err);
        if (productCmd->parsed()) return cmd_product(cfg, out, err);
        if (quotientCmd->parsed()) return cmd_quotient(cfg, out, err);
        if (reduceCmd->parsed()) return cmd_reduce(cfg, out, err);
    } catch (const Exit& e) {
        err << "error: " << e.message << "\n";
        return e.code;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        if (e.code() == ErrorCode::SolverUnknown && cfg.timeLimit > 0) err << "(time limit " << cfg.timeLimit << " s)\n";
        return exit_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUnknown;
    }
    return kUsage;
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace farkas::cli
