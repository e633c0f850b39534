#include "farkas/cli.hpp"
#include "fixtures.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace farkas;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("farkas_cli_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content = "") const {
        auto p = (path / name).string();
        if (!content.empty()) std::ofstream(p) << content;
        return p;
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::string kFig2 = fixtures::data_path("fig2.mdp");
const std::string kForallOr = fixtures::data_path("fig2_forall_or.json");
const std::string kExistsAnd = fixtures::data_path("fig2_exists_and.json");
const std::string kM1 = fixtures::data_path("m1.mdp");

}  // namespace

TEST_CASE("cli certify and check round trip") {
    TempDir tmp;
    auto cert = tmp.file("c.json");
    auto r = run_cli({"certify", kFig2, kForallOr, "-o", cert});
    CHECK(r.code == cli::kHolds);
    CHECK(r.err.find("Build: ") != std::string::npos);
    CHECK(r.err.find("Cert: ") != std::string::npos);
    auto j = nlohmann::json::parse(slurp(cert));
    CHECK(j["variant"] == "forall-or");
    CHECK(j["holds"] == true);
    CHECK(j["userQuery"]["quantifier"] == "forall");

    CHECK(run_cli({"check", kFig2, cert}).code == cli::kHolds);
    CHECK(run_cli({"check", kFig2, cert, "--exact"}).code == cli::kHolds);
    CHECK(run_cli({"check", kFig2, cert, "--query", kForallOr}).code == cli::kHolds);
    CHECK(run_cli({"check", kFig2, cert, "--query", kExistsAnd}).code == cli::kViolated);
}

TEST_CASE("cli rejects a tampered certificate") {
    TempDir tmp;
    auto cert = tmp.file("c.json");
    REQUIRE(run_cli({"certify", kFig2, kForallOr, "-o", cert}).code == cli::kHolds);
    auto j = nlohmann::json::parse(slurp(cert));
    for (auto& [state, value] : j["vectors"]["x"]["values"].items()) {
        if (state == "mec:s1|0|0") value = 0.9;
    }
    auto bad = tmp.file("bad.json", j.dump());
    auto r = run_cli({"check", kFig2, bad});
    CHECK(r.code == cli::kViolated);
    CHECK(r.err.find("violated") != std::string::npos);
}

TEST_CASE("cli reports violated queries with a checkable certificate") {
    TempDir tmp;
    auto q = tmp.file("q.json", R"({"quantifier": "exists", "connective": "and",
        "predicates": [{"kind": "reach", "target": "t", "op": ">=", "bound": "0.8"}]})");
    auto cert = tmp.file("c.json");
    auto r = run_cli({"certify", kM1, q, "-o", cert});
    CHECK(r.code == cli::kViolated);
    auto j = nlohmann::json::parse(slurp(cert));
    CHECK(j["holds"] == false);
    CHECK(run_cli({"check", kM1, cert}).code == cli::kHolds);
    CHECK(run_cli({"witness-subsystem", kM1, q}).code == cli::kViolated);

    auto ok = tmp.file("ok.json", R"({"quantifier": "exists", "connective": "and",
        "predicates": [{"kind": "reach", "target": "t", "op": ">=", "bound": "0.7"}]})");
    CHECK(run_cli({"certify", kM1, ok}).code == cli::kHolds);
}

TEST_CASE("cli usage errors exit 64") {
    TempDir tmp;
    auto broken = tmp.file("broken.mdp", "@initial s0\ns0 a t 0.5\n");
    CHECK(run_cli({"certify", broken, kForallOr}).code == cli::kUsage);
    CHECK(run_cli({"certify", kFig2}).code == cli::kUsage);
    CHECK(run_cli({"frobnicate"}).code == cli::kUsage);
    CHECK(run_cli({"certify", kFig2, tmp.path.string() + "/missing.json"}).code == cli::kUsage);
    auto mixed = tmp.file("mixed.json", R"({"quantifier": "exists", "connective": "and",
        "predicates": [{"kind": "reach", "target": "t", "op": ">=", "bound": "0.5"},
                       {"kind": "mean-payoff", "reward": "r", "op": ">=", "bound": "1"}]})");
    CHECK(run_cli({"certify", kM1, mixed}).code == cli::kUsage);
    CHECK(run_cli({"witness-subsystem", kM1, mixed}).code == cli::kUsage);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("cli witness subsystem on both levels") {
    TempDir tmp;
    auto sub = tmp.file("sub.mdp");
    auto kept = tmp.file("kept.txt");
    auto r = run_cli({"witness-subsystem", kFig2, kForallOr, "-o", sub, "--kept", kept});
    CHECK(r.code == cli::kHolds);
    CHECK(r.err.find("Size: 5/7") != std::string::npos);
    CHECK(slurp(kept) == "bot:s1|0|0\nbot:s1|1|1\nmec:s1|0|0\nmec:s1|1|1\ns0|0|0\n");
    BuildOptions terminal;
    terminal.allowDeadlocks = true;
    Mdp m = parse_model_file(sub, terminal);
    CHECK(m.num_states() >= 5);

    auto orig = run_cli({"witness-subsystem", kFig2, kForallOr, "--level", "original", "--kept", kept, "-o", sub});
    CHECK(orig.code == cli::kHolds);
    CHECK(orig.err.find("Size: 3/5") != std::string::npos);
    CHECK(slurp(kept) == "s0\ns1\ns2\n");
    CHECK(run_cli({"witness-subsystem", kFig2, kForallOr, "--level", "product"}).code == cli::kUsage);
}

TEST_CASE("cli witness schedulers") {
    auto ex = run_cli({"witness-scheduler", kFig2, kExistsAnd});
    CHECK(ex.code == cli::kHolds);
    CHECK(ex.out.find("digraph") != std::string::npos);
    CHECK(ex.out.find(", m0") != std::string::npos);
    CHECK(ex.err.find("predicate 2: 0.5") != std::string::npos);

    auto fa = run_cli({"witness-scheduler", kFig2, kForallOr});
    CHECK(fa.code == cli::kHolds);
    CHECK(fa.out.find("mec:s3|0|1") != std::string::npos);
    CHECK(fa.err.find("separating scheduler") != std::string::npos);
}

TEST_CASE("cli mean-payoff certify and subsystem") {
    TempDir tmp;
    auto model = tmp.file("mp.mdp",
                          "@initial s\ns go l 1/2\ns go h 1/2\nl loop l 1\nh loop h 1\n"
                          "@reward r1 l loop 0\n@reward r1 h loop 10\n@reward r1 s go 0\n");
    auto q = tmp.file("q.json", R"({"quantifier": "forall", "connective": "or",
        "predicates": [{"kind": "mean-payoff", "reward": "r1", "op": ">=", "bound": "5"}]})");
    auto cert = tmp.file("c.json");
    CHECK(run_cli({"certify", model, q, "-o", cert}).code == cli::kHolds);
    CHECK(nlohmann::json::parse(slurp(cert))["family"] == "mean-payoff");
    CHECK(run_cli({"check", model, cert}).code == cli::kHolds);
    auto r = run_cli({"witness-subsystem", model, q});
    CHECK(r.code == cli::kHolds);
    CHECK(r.err.find("Size: 2/3") != std::string::npos);
    auto hi = tmp.file("hi.json", R"({"quantifier": "forall", "connective": "or",
        "predicates": [{"kind": "mean-payoff", "reward": "r1", "op": ">=", "bound": "6"}]})");
    CHECK(run_cli({"certify", model, hi}).code == cli::kViolated);
}

TEST_CASE("cli model transformations") {
    auto p = run_cli({"product", kFig2, kExistsAnd});
    CHECK(p.code == cli::kHolds);
    CHECK(p.out.find("s1|1|1") != std::string::npos);
    auto q = run_cli({"quotient", kFig2, kForallOr});
    CHECK(q.out.find("mec:s3|0|1") != std::string::npos);
    auto plain = run_cli({"quotient", kFig2});
    CHECK(plain.code == cli::kHolds);
    auto r = run_cli({"reduce", kFig2, kForallOr});
    CHECK(r.out.find("G1") != std::string::npos);
    CHECK(r.err.find("reduced query") != std::string::npos);
}
