#pragma once

#include "farkas/lp.hpp"
#include "farkas/model.hpp"
#include "farkas/query.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace farkas {

enum class CertVariant { ExistsAnd, ExistsOr, ForallOr, ForallAnd, MpExistsAnd, MpForallOr };

const char* variant_name(CertVariant v);
CertVariant parse_variant(const std::string& text);

// Index domain of a certificate vector.
enum class Domain { Choice, State, Objective };

struct CertVector {
    Domain domain = Domain::State;
    std::vector<Rational> values;
};

struct Certificate {
    CertVariant variant = CertVariant::ExistsAnd;
    Query query;               // the query this certificate proves
    std::size_t disjunct = 0;  // ExistsOr only
    CheckMode mode = CheckMode::Tolerance;
    double tolerance = kCheckTolerance;
    std::map<std::string, CertVector> vectors;

    const std::vector<Rational>& at(const std::string& name) const;
};

// Position of one LP variable inside the certificate vectors.
struct VarRef {
    std::string vec;
    std::size_t index;
};

// A Farkas system together with the map from its variables to certificate vectors.
// Variables without a reference (selection binaries) are not part of the certificate.
struct CertSystem {
    LinSystem sys;
    std::vector<std::optional<VarRef>> refs;
    std::map<std::string, std::pair<Domain, std::size_t>> shapes;
    CertVariant variant = CertVariant::ExistsAnd;
    std::size_t disjunct = 0;

    void declare(const std::string& vec, Domain domain, std::size_t size);
    std::size_t add_var(const std::string& vec, std::size_t index, std::string name, std::optional<Rational> lower,
                        std::optional<Rational> upper = std::nullopt);
    std::size_t add_free(std::string name, std::optional<Rational> lower, std::optional<Rational> upper,
                         VarType type = VarType::Continuous);
};

// Certificate carrying the solver's values.
Certificate extract_certificate(const CertSystem& cs, const std::vector<double>& values, const Query& query);
// Assignment for the system's variables read from a certificate; free variables are taken from `extra` or zero.
std::vector<Rational> certificate_assignment(const CertSystem& cs, const Certificate& cert);

// Tries rational reconstruction with growing denominators until the exact check passes.
bool make_exact(const CertSystem& cs, Certificate& cert);

CheckResult check_against(const CertSystem& cs, const Certificate& cert, const CheckOptions& base = {});

struct CertifyOptions {
    SolveLimits limits;
    bool exact = false;
    std::shared_ptr<const SolverBackend> solver;  // null: make_solver()
};

struct CertifyResult {
    bool holds = false;
    bool forNegation = false;
    Certificate certificate;
};

// JSON certificate file. Choice vectors are nested {state: {action: value}}, state vectors {state: value},
// objective vectors arrays. Tolerance-mode values are written as numbers, exact ones as rational strings.
std::string certificate_to_json(const Certificate& cert, const Mdp& mdp, const std::string& extraJson = "");
Certificate certificate_from_json(const std::string& text, const Mdp& mdp);

}  // namespace farkas
