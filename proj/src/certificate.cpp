#include "farkas/certificate.hpp"

#include "farkas/errors.hpp"

#include <json.hpp>

#include <cmath>

namespace farkas {

using nlohmann::json;

const char* variant_name(CertVariant v) {
    switch (v) {
        case CertVariant::ExistsAnd: return "exists-and";
        case CertVariant::ExistsOr: return "exists-or";
        case CertVariant::ForallOr: return "forall-or";
        case CertVariant::ForallAnd: return "forall-and";
        case CertVariant::MpExistsAnd: return "mp-exists-and";
        case CertVariant::MpForallOr: return "mp-forall-or";
    }
    return "?";
}

CertVariant parse_variant(const std::string& text) {
    for (auto v : {CertVariant::ExistsAnd, CertVariant::ExistsOr, CertVariant::ForallOr, CertVariant::ForallAnd,
                   CertVariant::MpExistsAnd, CertVariant::MpForallOr}) {
        if (text == variant_name(v)) return v;
    }
    throw Error(ErrorCode::Parse, "unknown certificate variant '" + text + "'");
}

const std::vector<Rational>& Certificate::at(const std::string& name) const {
    auto it = vectors.find(name);
    if (it == vectors.end()) throw Error(ErrorCode::ShapeMismatch, "certificate lacks vector '" + name + "'");
    return it->second.values;
}

void CertSystem::declare(const std::string& vec, Domain domain, std::size_t size) { shapes[vec] = {domain, size}; }

std::size_t CertSystem::add_var(const std::string& vec, std::size_t index, std::string name, std::optional<Rational> lower,
                                std::optional<Rational> upper) {
    std::size_t id = sys.add_var(std::move(name), std::move(lower), std::move(upper));
    refs.resize(sys.num_vars());
    refs[id] = VarRef{vec, index};
    return id;
}

std::size_t CertSystem::add_free(std::string name, std::optional<Rational> lower, std::optional<Rational> upper,
                                 VarType type) {
    std::size_t id = sys.add_var(std::move(name), std::move(lower), std::move(upper), type);
    refs.resize(sys.num_vars());
    return id;
}

Certificate extract_certificate(const CertSystem& cs, const std::vector<double>& values, const Query& query) {
    Certificate cert;
    cert.variant = cs.variant;
    cert.query = query;
    cert.disjunct = cs.disjunct;
    for (const auto& [name, shape] : cs.shapes) {
        cert.vectors[name] = CertVector{shape.first, std::vector<Rational>(shape.second)};
    }
    for (std::size_t v = 0; v < cs.refs.size() && v < values.size(); ++v) {
        if (!cs.refs[v]) continue;
        // Denormal noise is cut so that exact reconstruction and supports stay clean.
        double x = std::abs(values[v]) < 1e-15 ? 0.0 : values[v];
        cert.vectors[cs.refs[v]->vec].values[cs.refs[v]->index] = Rational(x);
    }
    return cert;
}

std::vector<Rational> certificate_assignment(const CertSystem& cs, const Certificate& cert) {
    for (const auto& [name, shape] : cs.shapes) {
        auto it = cert.vectors.find(name);
        if (it == cert.vectors.end()) throw Error(ErrorCode::ShapeMismatch, "certificate lacks vector '" + name + "'");
        if (it->second.values.size() != shape.second) {
            throw Error(ErrorCode::ShapeMismatch, "vector '" + name + "' has " + std::to_string(it->second.values.size()) +
                                                      " entries, expected " + std::to_string(shape.second));
        }
    }
    std::vector<Rational> out(cs.sys.num_vars());
    for (std::size_t v = 0; v < cs.sys.num_vars(); ++v) {
        if (v < cs.refs.size() && cs.refs[v]) out[v] = cert.vectors.at(cs.refs[v]->vec).values[cs.refs[v]->index];
    }
    return out;
}

CheckResult check_against(const CertSystem& cs, const Certificate& cert, const CheckOptions& base) {
    if (cert.variant != cs.variant) {
        throw Error(ErrorCode::ShapeMismatch, std::string("certificate variant ") + variant_name(cert.variant) +
                                                  " does not match query type " + variant_name(cs.variant));
    }
    if (cert.variant == CertVariant::ExistsOr && cert.disjunct != cs.disjunct) {
        throw Error(ErrorCode::ShapeMismatch, "disjunct index mismatch");
    }
    CheckOptions opts = base;
    opts.mode = cert.mode;
    if (cert.mode == CheckMode::Tolerance) opts.tolerance = cert.tolerance;
    return check_assignment(cs.sys, certificate_assignment(cs, cert), opts);
}

bool make_exact(const CertSystem& cs, Certificate& cert) {
    Certificate trial = cert;
    trial.mode = CheckMode::Exact;
    trial.tolerance = 0;
    for (unsigned long den : {1000UL, 100000UL, 10000000UL, 1000000000UL}) {
        for (auto& [name, vec] : trial.vectors) {
            const auto& src = cert.vectors.at(name).values;
            for (std::size_t i = 0; i < src.size(); ++i) vec.values[i] = approximate(src[i].get_d(), den);
        }
        if (check_against(cs, trial).ok) {
            cert = std::move(trial);
            return true;
        }
    }
    return false;
}

namespace {

json value_json(const Rational& v, CheckMode mode) {
    if (mode == CheckMode::Exact) return to_string(v);
    return v.get_d();
}

Rational value_from(const json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long>());
    if (j.is_number()) return Rational(j.get<double>());
    throw Error(ErrorCode::Parse, "certificate entry is not a number");
}

const char* domain_name(Domain d) {
    switch (d) {
        case Domain::Choice: return "pairs";
        case Domain::State: return "states";
        case Domain::Objective: return "objectives";
    }
    return "?";
}

}  // namespace

std::string certificate_to_json(const Certificate& cert, const Mdp& mdp, const std::string& extraJson) {
    json j;
    j["queryEcho"] = json::parse(query_to_json(cert.query));
    j["variant"] = variant_name(cert.variant);
    if (cert.variant == CertVariant::ExistsOr) j["disjunct"] = cert.disjunct;
    j["mode"] = cert.mode == CheckMode::Exact ? "exact" : "tol";
    j["tolerance"] = cert.mode == CheckMode::Exact ? 0.0 : cert.tolerance;
    json vecs = json::object();
    for (const auto& [name, vec] : cert.vectors) {
        json entry;
        entry["domain"] = domain_name(vec.domain);
        json values;
        switch (vec.domain) {
            case Domain::Choice:
                if (vec.values.size() != mdp.num_choices()) throw Error(ErrorCode::ShapeMismatch, "pair vector size");
                values = json::object();
                for (ChoiceId c = 0; c < mdp.num_choices(); ++c) {
                    if (vec.values[c] == 0) continue;
                    const auto& ch = mdp.choice(c);
                    values[mdp.state_name(ch.state)][ch.action] = value_json(vec.values[c], cert.mode);
                }
                break;
            case Domain::State:
                if (vec.values.size() != mdp.num_states()) throw Error(ErrorCode::ShapeMismatch, "state vector size");
                values = json::object();
                for (StateId s = 0; s < mdp.num_states(); ++s) {
                    if (vec.values[s] != 0) values[mdp.state_name(s)] = value_json(vec.values[s], cert.mode);
                }
                break;
            case Domain::Objective:
                values = json::array();
                for (const auto& v : vec.values) values.push_back(value_json(v, cert.mode));
                break;
        }
        entry["values"] = std::move(values);
        vecs[name] = std::move(entry);
    }
    j["vectors"] = std::move(vecs);
    if (!extraJson.empty()) {
        const json extra = json::parse(extraJson);
        for (const auto& [key, value] : extra.items()) j[key] = value;
    }
    return j.dump(2);
}

Certificate certificate_from_json(const std::string& text, const Mdp& mdp) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("certificate: ") + e.what());
    }
    try {
        Certificate cert;
        cert.query = parse_query_json(j.at("queryEcho").dump());
        cert.variant = parse_variant(j.at("variant").get<std::string>());
        if (j.contains("disjunct")) cert.disjunct = j.at("disjunct").get<std::size_t>();
        std::string mode = j.at("mode").get<std::string>();
        if (mode != "tol" && mode != "exact") throw Error(ErrorCode::Parse, "unknown mode '" + mode + "'");
        cert.mode = mode == "exact" ? CheckMode::Exact : CheckMode::Tolerance;
        cert.tolerance = j.value("tolerance", kCheckTolerance);
        for (const auto& [name, entry] : j.at("vectors").items()) {
            std::string domain = entry.at("domain").get<std::string>();
            const json& values = entry.at("values");
            CertVector vec;
            if (domain == "pairs") {
                vec.domain = Domain::Choice;
                vec.values.assign(mdp.num_choices(), Rational(0));
                for (const auto& [sname, acts] : values.items()) {
                    auto s = mdp.find_state(sname);
                    if (!s) throw Error(ErrorCode::ShapeMismatch, "certificate names unknown state '" + sname + "'");
                    for (const auto& [aname, v] : acts.items()) {
                        auto c = mdp.find_choice(*s, aname);
                        if (!c) throw Error(ErrorCode::ShapeMismatch, "certificate names unknown pair " + sname + ":" + aname);
                        vec.values[*c] = value_from(v);
                    }
                }
            } else if (domain == "states") {
                vec.domain = Domain::State;
                vec.values.assign(mdp.num_states(), Rational(0));
                for (const auto& [sname, v] : values.items()) {
                    auto s = mdp.find_state(sname);
                    if (!s) throw Error(ErrorCode::ShapeMismatch, "certificate names unknown state '" + sname + "'");
                    vec.values[*s] = value_from(v);
                }
            } else if (domain == "objectives") {
                vec.domain = Domain::Objective;
                for (const auto& v : values) vec.values.push_back(value_from(v));
            } else {
                throw Error(ErrorCode::Parse, "unknown vector domain '" + domain + "'");
            }
            cert.vectors[name] = std::move(vec);
        }
        return cert;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("certificate: ") + e.what());
    }
}

}  // namespace farkas
