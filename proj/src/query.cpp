#include "farkas/query.hpp"

#include "farkas/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace farkas {

using nlohmann::json;

bool Predicate::operator==(const Predicate& o) const {
    return kind == o.kind && label == o.label && limit == o.limit && negatedReward == o.negatedReward &&
           op == o.op && bound == o.bound;
}

bool Query::operator==(const Query& o) const {
    return quantifier == o.quantifier && connective == o.connective && predicates == o.predicates;
}

bool is_lower(CmpOp op) { return op == CmpOp::Ge || op == CmpOp::Gt; }
bool is_strict(CmpOp op) { return op == CmpOp::Gt || op == CmpOp::Lt; }

CmpOp complement(CmpOp op) {
    switch (op) {
        case CmpOp::Ge: return CmpOp::Lt;
        case CmpOp::Gt: return CmpOp::Le;
        case CmpOp::Le: return CmpOp::Gt;
        case CmpOp::Lt: return CmpOp::Ge;
    }
    return op;
}

CmpOp mirror(CmpOp op) {
    switch (op) {
        case CmpOp::Ge: return CmpOp::Le;
        case CmpOp::Gt: return CmpOp::Lt;
        case CmpOp::Le: return CmpOp::Ge;
        case CmpOp::Lt: return CmpOp::Gt;
    }
    return op;
}

const char* op_symbol(CmpOp op) {
    switch (op) {
        case CmpOp::Ge: return ">=";
        case CmpOp::Gt: return ">";
        case CmpOp::Le: return "<=";
        case CmpOp::Lt: return "<";
    }
    return "?";
}

CmpOp parse_op(const std::string& text) {
    if (text == ">=" || text == "≥") return CmpOp::Ge;
    if (text == ">") return CmpOp::Gt;
    if (text == "<=" || text == "≤") return CmpOp::Le;
    if (text == "<") return CmpOp::Lt;
    throw Error(ErrorCode::Parse, "unknown comparison operator '" + text + "'");
}

QueryFamily validate(const Query& q) {
    if (q.predicates.empty()) throw Error(ErrorCode::UnsupportedQuery, "query without predicates");
    bool mp = false, prob = false;
    for (const auto& p : q.predicates) {
        if (p.kind == PredicateKind::MeanPayoff) {
            mp = true;
        } else {
            prob = true;
            if (p.bound < 0 || p.bound > 1) {
                throw Error(ErrorCode::UnsupportedQuery, "probability bound outside [0,1]: " + to_string(p.bound));
            }
        }
    }
    if (mp && prob) throw Error(ErrorCode::MixedFamilies, "reach/invariant and mean-payoff predicates mixed");
    return mp ? QueryFamily::MeanPayoff : QueryFamily::ReachInvariant;
}

bool uniform_op(const Query& q) {
    for (const auto& p : q.predicates) {
        if (p.op != q.predicates.front().op) return false;
    }
    return true;
}

std::string label_complement(const std::string& label) {
    if (!label.empty() && label.front() == '!') return label.substr(1);
    return "!" + label;
}

Query normalize_lower_bounds(const Query& q) {
    Query out = q;
    for (auto& p : out.predicates) {
        if (p.kind == PredicateKind::MeanPayoff || is_lower(p.op)) continue;
        // Pr(<>G) <= l  <=>  Pr([](S\G)) >= 1-l, and symmetrically for invariants.
        p.kind = p.kind == PredicateKind::Reach ? PredicateKind::Invariant : PredicateKind::Reach;
        p.label = label_complement(p.label);
        p.op = mirror(p.op);
        p.bound = 1 - p.bound;
    }
    return out;
}

Query negate(const Query& q) {
    Query out = q;
    out.quantifier = q.quantifier == Quantifier::Exists ? Quantifier::Forall : Quantifier::Exists;
    out.connective = q.connective == Connective::And ? Connective::Or : Connective::And;
    for (auto& p : out.predicates) {
        p.op = complement(p.op);
        if (p.kind == PredicateKind::MeanPayoff) p.limit = p.limit == MpLimit::Inf ? MpLimit::Sup : MpLimit::Inf;
    }
    return out;
}

Query normalize_mean_payoff(const Query& q) {
    Query out = q;
    for (auto& p : out.predicates) {
        if (p.kind != PredicateKind::MeanPayoff || is_lower(p.op)) continue;
        // E[mp_inf r] <= l  <=>  E[mp_sup(-r)] >= -l
        p.negatedReward = !p.negatedReward;
        p.limit = p.limit == MpLimit::Inf ? MpLimit::Sup : MpLimit::Inf;
        p.op = mirror(p.op);
        p.bound = -p.bound;
    }
    return out;
}

bool trivially_true(const Predicate& p) {
    return p.kind != PredicateKind::MeanPayoff && p.op == CmpOp::Ge && p.bound == 0;
}

namespace {

Rational bound_from_json(const json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long>());
    if (j.is_number_float()) return parse_rational(format_double(j.get<double>()));
    throw Error(ErrorCode::Parse, "bound must be a number or a string");
}

Predicate predicate_from_json(const json& j) {
    Predicate p;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "reach") {
        p.kind = PredicateKind::Reach;
        p.label = j.at("target").get<std::string>();
    } else if (kind == "invariant") {
        p.kind = PredicateKind::Invariant;
        p.label = j.contains("safe") ? j.at("safe").get<std::string>() : j.at("target").get<std::string>();
    } else if (kind == "mean-payoff") {
        p.kind = PredicateKind::MeanPayoff;
        p.label = j.at("reward").get<std::string>();
        const auto limit = j.value("limit", std::string("liminf"));
        if (limit == "liminf") {
            p.limit = MpLimit::Inf;
        } else if (limit == "limsup") {
            p.limit = MpLimit::Sup;
        } else {
            throw Error(ErrorCode::Parse, "limit must be liminf or limsup");
        }
        p.negatedReward = j.value("negated", false);
    } else {
        throw Error(ErrorCode::Parse, "unknown predicate kind '" + kind + "'");
    }
    p.op = parse_op(j.at("op").get<std::string>());
    p.bound = bound_from_json(j.at("bound"));
    return p;
}

}  // namespace

Query parse_query_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("query: ") + e.what());
    }
    try {
        Query q;
        const auto quant = j.at("quantifier").get<std::string>();
        if (quant == "exists") {
            q.quantifier = Quantifier::Exists;
        } else if (quant == "forall") {
            q.quantifier = Quantifier::Forall;
        } else {
            throw Error(ErrorCode::Parse, "quantifier must be exists or forall");
        }
        const auto conn = j.at("connective").get<std::string>();
        if (conn == "and") {
            q.connective = Connective::And;
        } else if (conn == "or") {
            q.connective = Connective::Or;
        } else {
            throw Error(ErrorCode::Parse, "connective must be and or or");
        }
        for (const auto& pj : j.at("predicates")) q.predicates.push_back(predicate_from_json(pj));
        validate(q);
        return q;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("query: ") + e.what());
    }
}

Query parse_query_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Parse, "cannot open query file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_query_json(ss.str());
}

std::string query_to_json(const Query& q) {
    json j;
    j["quantifier"] = q.quantifier == Quantifier::Exists ? "exists" : "forall";
    j["connective"] = q.connective == Connective::And ? "and" : "or";
    j["predicates"] = json::array();
    for (const auto& p : q.predicates) {
        json pj;
        switch (p.kind) {
            case PredicateKind::Reach:
                pj["kind"] = "reach";
                pj["target"] = p.label;
                break;
            case PredicateKind::Invariant:
                pj["kind"] = "invariant";
                pj["safe"] = p.label;
                break;
            case PredicateKind::MeanPayoff:
                pj["kind"] = "mean-payoff";
                pj["reward"] = p.label;
                pj["limit"] = p.limit == MpLimit::Inf ? "liminf" : "limsup";
                if (p.negatedReward) pj["negated"] = true;
                break;
        }
        pj["op"] = op_symbol(p.op);
        pj["bound"] = to_string(p.bound);
        j["predicates"].push_back(pj);
    }
    return j.dump();
}

std::string describe(const Query& q) {
    std::ostringstream out;
    out << (q.quantifier == Quantifier::Exists ? "exists" : "forall") << " sigma. ";
    for (std::size_t i = 0; i < q.predicates.size(); ++i) {
        const auto& p = q.predicates[i];
        if (i > 0) out << (q.connective == Connective::And ? " and " : " or ");
        switch (p.kind) {
            case PredicateKind::Reach: out << "Pr(<> " << p.label << ")"; break;
            case PredicateKind::Invariant: out << "Pr([] " << p.label << ")"; break;
            case PredicateKind::MeanPayoff:
                out << "E[" << (p.limit == MpLimit::Inf ? "mp_inf" : "mp_sup") << "("
                    << (p.negatedReward ? "-" : "") << p.label << ")]";
                break;
        }
        out << ' ' << op_symbol(p.op) << ' ' << to_string(p.bound);
    }
    return out.str();
}

}  // namespace farkas
