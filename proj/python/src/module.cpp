#include "farkas/certificate.hpp"
#include "farkas/cli.hpp"
#include "farkas/errors.hpp"
#include "farkas/model.hpp"
#include "farkas/mp_cert.hpp"
#include "farkas/product.hpp"
#include "farkas/query.hpp"
#include "farkas/reach_cert.hpp"
#include "farkas/witness_sched.hpp"
#include "farkas/witness_subsys.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace farkas;

namespace {

struct Certified {
    bool holds;
    std::string variant;
    std::string certificate;  // JSON
};

// Reach/invariant queries are decided on the reduced quotient, mean-payoff queries on the model.
Certified certify_text(const std::string& model, const std::string& query, bool exact) {
    Mdp mdp = parse_model_string(model);
    Query q = parse_query_json(query);
    CertifyOptions opts;
    opts.exact = exact;
    if (validate(q) == QueryFamily::ReachInvariant) {
        ReducedQuery rq = reduce_query(mdp, normalize_lower_bounds(q));
        auto res = certify(rq.form, rq.query, opts);
        return {res.holds, variant_name(res.certificate.variant), certificate_to_json(res.certificate, rq.form.mdp)};
    }
    auto res = certify_mp(mdp, q, opts);
    return {res.holds, variant_name(res.certificate.variant), certificate_to_json(res.certificate, mdp)};
}

std::vector<std::string> kept_names(const Mdp& m, const std::vector<bool>& kept) {
    std::vector<std::string> out;
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (kept[s]) out.push_back(m.state_name(s));
    }
    return out;
}

py::dict witness_subsystem_text(const std::string& model, const std::string& query, bool original) {
    Mdp mdp = parse_model_string(model);
    Query q = parse_query_json(query);
    py::dict out;
    if (validate(q) == QueryFamily::MeanPayoff) {
        auto ws = milp_min_subsystem_mp(mdp, q);
        out["kept"] = kept_names(mdp, ws.kept);
        out["total"] = mdp.num_states();
        out["optimality"] = optimality_name(ws.optimality);
        return out;
    }
    ReducedQuery rq = reduce_query(mdp, normalize_lower_bounds(q));
    auto ws = milp_min_subsystem(rq.form, rq.query);
    ws.level = WitnessLevel::Quotient;
    if (original) {
        auto orig = transfer_subsystem(ws, mdp, q, rq);
        out["kept"] = kept_names(mdp, orig.kept);
        out["total"] = mdp.num_states();
        out["optimality"] = optimality_name(orig.optimality);
    } else {
        out["kept"] = kept_names(rq.form.mdp, ws.kept);
        out["total"] = rq.form.mdp.num_states();
        out["optimality"] = optimality_name(ws.optimality);
    }
    return out;
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_farkas, m) {
    m.doc() = "Certificates and witnesses for multi-objective queries on finite MDPs";

    py::register_exception<Error>(m, "FarkasError", PyExc_RuntimeError);

    py::class_<Certified>(m, "Certified")
        .def_readonly("holds", &Certified::holds)
        .def_readonly("variant", &Certified::variant)
        .def_readonly("certificate", &Certified::certificate)
        .def("__repr__", [](const Certified& c) {
            return std::string("Certified(holds=") + (c.holds ? "True" : "False") + ", variant='" + c.variant + "')";
        });

    m.def("certify", &certify_text, py::arg("model"), py::arg("query"), py::arg("exact") = false,
          "Decide a query given as model text and query JSON.");
    m.def("witness_subsystem", &witness_subsystem_text, py::arg("model"), py::arg("query"),
          py::arg("original") = false, "Minimal witnessing subsystem of a holding lower-bounded query.");
    m.def(
        "model_states",
        [](const std::string& model) { return parse_model_string(model).state_names(); }, py::arg("model"));
    m.def(
        "solve_exit_rates",
        [](const DenseMatrix& P, const std::vector<double>& delta, const std::vector<double>& mu) {
            return solve_exit_rates(P, delta, mu);
        },
        py::arg("P"), py::arg("delta"), py::arg("mu"));
    m.def(
        "exit_distribution",
        [](const DenseMatrix& P, const std::vector<double>& delta, const std::vector<double>& lambda) {
            return exit_distribution(P, delta, lambda);
        },
        py::arg("P"), py::arg("delta"), py::arg("lam"));
    m.def("run_cli", &run_cli, py::arg("args"), "Run the command-line tool in-process: (exit code, stdout, stderr).");
}
