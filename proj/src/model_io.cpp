#include "farkas/errors.hpp"
#include "farkas/model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace farkas {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    return tokens;
}

}  // namespace

Mdp parse_model(std::istream& in, const std::string& source, const BuildOptions& options) {
    MdpBuilder b;
    std::string line;
    std::size_t lineNo = 0;
    bool haveInitial = false;

    auto number = [&](const std::string& text) {
        try {
            return parse_rational(text);
        } catch (const Error&) {
            throw ParseError(source, lineNo, "malformed number '" + text + "'");
        }
    };

    while (std::getline(in, line)) {
        ++lineNo;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto tok = split_ws(line);
        if (tok.empty()) continue;

        if (tok[0][0] != '@') {
            if (tok.size() != 4) throw ParseError(source, lineNo, "expected 'state action successor probability'");
            Rational p = number(tok[3]);
            if (p < 0 || p > 1) throw ParseError(source, lineNo, "probability out of range");
            StateId s = b.add_state(tok[0]);
            StateId t = b.add_state(tok[2]);
            b.add_transition(s, tok[1], t, p);
        } else if (tok[0] == "@initial") {
            if (tok.size() != 2 && tok.size() != 3) throw ParseError(source, lineNo, "expected '@initial state [prob]'");
            b.add_initial(b.add_state(tok[1]), tok.size() == 3 ? number(tok[2]) : Rational(1));
            haveInitial = true;
        } else if (tok[0] == "@label") {
            if (tok.size() < 2) throw ParseError(source, lineNo, "expected '@label name state...'");
            b.declare_label(tok[1]);
            for (std::size_t i = 2; i < tok.size(); ++i) b.add_label(tok[1], b.add_state(tok[i]));
        } else if (tok[0] == "@reward") {
            if (tok.size() != 5) throw ParseError(source, lineNo, "expected '@reward name state action value'");
            b.set_reward(tok[1], b.add_state(tok[2]), tok[3], number(tok[4]));
        } else if (tok[0] == "@state") {
            for (std::size_t i = 1; i < tok.size(); ++i) b.add_state(tok[i]);
        } else {
            throw ParseError(source, lineNo, "unknown directive '" + tok[0] + "'");
        }
    }
    if (!haveInitial) throw ParseError(source, lineNo, "missing '@initial'");
    try {
        return b.build(options);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Parse) throw;
        throw ParseError(source, lineNo, e.what());
    }
}

Mdp parse_model_string(std::string_view text, const BuildOptions& options) {
    std::istringstream in{std::string(text)};
    return parse_model(in, "<string>", options);
}

Mdp parse_model_file(const std::string& path, const BuildOptions& options) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return parse_model(in, path, options);
}

void write_model(const Mdp& mdp, std::ostream& out) {
    const auto n = mdp.num_states();
    std::vector<StateId> order(n);
    for (StateId s = 0; s < n; ++s) order[s] = s;
    std::sort(order.begin(), order.end(),
              [&](StateId a, StateId b) { return mdp.state_name(a) < mdp.state_name(b); });
    auto byName = [&](StateId a, StateId b) { return mdp.state_name(a) < mdp.state_name(b); };

    std::vector<std::pair<StateId, Rational>> init(mdp.initial().begin(), mdp.initial().end());
    std::sort(init.begin(), init.end(), [&](const auto& a, const auto& b) { return byName(a.first, b.first); });
    for (const auto& [s, p] : init) {
        out << "@initial " << mdp.state_name(s);
        if (init.size() > 1 || p != 1) out << ' ' << to_string(p);
        out << '\n';
    }
    for (StateId s : order) {
        if (mdp.num_choices(s) == 0) out << "@state " << mdp.state_name(s) << '\n';
    }
    for (StateId s : order) {
        for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            const auto& ch = mdp.choice(c);
            std::vector<const Transition*> ts;
            for (const auto& t : ch.dist) ts.push_back(&t);
            std::sort(ts.begin(), ts.end(), [&](auto* a, auto* b) { return byName(a->target, b->target); });
            for (const auto* t : ts) {
                out << mdp.state_name(s) << ' ' << ch.action << ' ' << mdp.state_name(t->target) << ' '
                    << to_string(t->prob) << '\n';
            }
        }
    }
    for (const auto& [name, states] : mdp.labels()) {
        std::vector<StateId> sorted(states);
        std::sort(sorted.begin(), sorted.end(), byName);
        out << "@label " << name;
        for (StateId s : sorted) out << ' ' << mdp.state_name(s);
        out << '\n';
    }
    std::vector<const RewardVector*> rewards;
    for (const auto& r : mdp.rewards()) rewards.push_back(&r);
    std::sort(rewards.begin(), rewards.end(), [](auto* a, auto* b) { return a->name < b->name; });
    for (const auto* r : rewards) {
        bool any = false;
        for (StateId s : order) {
            for (ChoiceId c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
                if (r->values[c] == 0) continue;
                out << "@reward " << r->name << ' ' << mdp.state_name(s) << ' ' << mdp.choice(c).action << ' '
                    << to_string(r->values[c]) << '\n';
                any = true;
            }
        }
        if (!any && mdp.num_choices() > 0) {
            // keep an all-zero reward declared
            ChoiceId c = mdp.choice_begin(order.front());
            for (StateId s : order) {
                if (mdp.num_choices(s) > 0) {
                    c = mdp.choice_begin(s);
                    break;
                }
            }
            out << "@reward " << r->name << ' ' << mdp.state_name(mdp.choice(c).state) << ' '
                << mdp.choice(c).action << " 0\n";
        }
    }
}

std::string model_to_string(const Mdp& mdp) {
    std::ostringstream out;
    write_model(mdp, out);
    return out.str();
}

}  // namespace farkas
