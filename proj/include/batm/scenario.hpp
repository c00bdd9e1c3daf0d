#pragma once

#include <istream>
#include <sstream>
#include <string>

#include "batm/identity.hpp"
#include "batm/params.hpp"

namespace batm {

enum class ScenarioAction : std::uint8_t { join, renew, blame, misbehave, fork };

struct ScenarioEvent {
    Hours at = 0;
    std::string node;
    ScenarioAction action = ScenarioAction::join;
    std::string target;            // blame only
    std::uint64_t fork_length = 0; // fork only
    std::size_t line = 0;
};

// A scripted multi-node run: protocol parameters, the cast of nodes (first
// one crafts the genesis block), and scheduled actions. The seed fully
// determines the run.
struct Scenario {
    ChainParams params;
    Hours horizon = 500;
    Hours block_interval = 1;
    std::uint64_t seed = 1;
    bool trust_gates = true;
    bool mine_when_idle = true;
    std::vector<NodeDescriptor> nodes;
    std::vector<ScenarioEvent> events;

    const NodeDescriptor* find_node(const std::string& name) const {
        for (const auto& n : nodes)
            if (n.name == name) return &n;
        return nullptr;
    }
};

namespace scenario_detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

[[noreturn]] inline void bad_line(std::size_t line, const std::string& why) {
    throw Error(Errc::scenario_invalid, "line " + std::to_string(line) + ": " + why);
}

inline std::uint64_t parse_u64(const std::string& s, std::size_t line, const char* what) {
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(s, &pos);
        if (pos != s.size()) bad_line(line, std::string("bad ") + what + " value: " + s);
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        bad_line(line, std::string("bad ") + what + " value: " + s);
    }
}

}  // namespace scenario_detail

// Line-oriented scenario grammar, one directive per line:
//   param <name> <value>
//   node <name> kind=NN|AS [abilities=a,b] [energy=x] [cpu=x]
//               [deps=a,b] [resdeps=r,s] [provides=p,q]
//   at <hour> <node> join | renew | blame <target> | misbehave | fork <len>
// '#' starts a comment. The same format doubles as the genesis params file.
inline Scenario parse_scenario(std::istream& in) {
    using scenario_detail::bad_line;
    using scenario_detail::parse_u64;
    using scenario_detail::split;

    Scenario sc;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto pos = raw.find('#'); pos != std::string::npos) raw.erase(pos);
        std::istringstream ls(raw);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;

        if (tok[0] == "param") {
            if (tok.size() != 3) bad_line(line_no, "param needs a name and a value");
            const std::string& name = tok[1];
            const std::string& value = tok[2];
            if (name == "horizon") sc.horizon = parse_u64(value, line_no, "horizon");
            else if (name == "block_interval")
                sc.block_interval = parse_u64(value, line_no, "block_interval");
            else if (name == "seed") sc.seed = parse_u64(value, line_no, "seed");
            else if (name == "trust_gates")
                sc.trust_gates = parse_u64(value, line_no, "trust_gates") != 0;
            else if (name == "mine_when_idle")
                sc.mine_when_idle = parse_u64(value, line_no, "mine_when_idle") != 0;
            else {
                bool ok = false;
                try {
                    ok = set_param(sc.params, name, value);
                } catch (...) {
                    bad_line(line_no, "bad value for parameter " + name);
                }
                if (!ok) bad_line(line_no, "unknown parameter " + name);
            }
        } else if (tok[0] == "node") {
            if (tok.size() < 2) bad_line(line_no, "node needs a name");
            NodeDescriptor d;
            d.name = tok[1];
            if (sc.find_node(d.name)) bad_line(line_no, "duplicate node name " + d.name);
            for (std::size_t i = 2; i < tok.size(); ++i) {
                auto eq = tok[i].find('=');
                if (eq == std::string::npos) bad_line(line_no, "expected key=value, got " + tok[i]);
                std::string key = tok[i].substr(0, eq), value = tok[i].substr(eq + 1);
                if (key == "kind") {
                    if (value == "NN") d.kind = NodeKind::network_node;
                    else if (value == "AS") d.kind = NodeKind::available_service;
                    else bad_line(line_no, "kind must be NN or AS");
                } else if (key == "abilities") d.abilities = split(value, ',');
                else if (key == "deps") d.ability_dependencies = split(value, ',');
                else if (key == "resdeps") d.resource_dependencies = split(value, ',');
                else if (key == "provides") d.resources_provided = split(value, ',');
                else if (key == "energy") d.energy = std::stod(value);
                else if (key == "cpu") d.cpu = std::stod(value);
                else bad_line(line_no, "unknown node attribute " + key);
            }
            if (d.kind == NodeKind::network_node &&
                (!d.ability_dependencies.empty() || !d.resources_provided.empty() ||
                 !d.resource_dependencies.empty()))
                bad_line(line_no, "NN nodes cannot carry service dependency vectors");
            if (d.kind == NodeKind::available_service && !d.abilities.empty())
                bad_line(line_no, "AS entries carry dependencies, not abilities");
            sc.nodes.push_back(std::move(d));
        } else if (tok[0] == "at") {
            if (tok.size() < 4) bad_line(line_no, "at needs: at <hour> <node> <action> [...]");
            ScenarioEvent ev;
            ev.line = line_no;
            ev.at = parse_u64(tok[1], line_no, "hour");
            ev.node = tok[2];
            const std::string& act = tok[3];
            if (act == "join") {
                if (tok.size() != 4) bad_line(line_no, "join takes no arguments");
                ev.action = ScenarioAction::join;
            } else if (act == "renew") {
                if (tok.size() != 4) bad_line(line_no, "renew takes no arguments");
                ev.action = ScenarioAction::renew;
            } else if (act == "misbehave") {
                if (tok.size() != 4) bad_line(line_no, "misbehave takes no arguments");
                ev.action = ScenarioAction::misbehave;
            } else if (act == "blame") {
                if (tok.size() != 5) bad_line(line_no, "blame needs a target");
                ev.action = ScenarioAction::blame;
                ev.target = tok[4];
            } else if (act == "fork") {
                if (tok.size() != 5) bad_line(line_no, "fork needs a length");
                ev.action = ScenarioAction::fork;
                ev.fork_length = parse_u64(tok[4], line_no, "fork length");
            } else {
                bad_line(line_no, "unknown action " + act);
            }
            sc.events.push_back(std::move(ev));
        } else {
            bad_line(line_no, "unknown directive " + tok[0]);
        }
    }

    if (sc.horizon == 0) throw Error(Errc::scenario_invalid, "horizon must be positive");
    if (sc.block_interval == 0) throw Error(Errc::scenario_invalid, "block_interval must be positive");
    for (const auto& ev : sc.events) {
        if (ev.at >= sc.horizon)
            bad_line(ev.line, "event time " + std::to_string(ev.at) + " is past the horizon");
        if (!sc.find_node(ev.node)) bad_line(ev.line, "unknown node " + ev.node);
        if (ev.action == ScenarioAction::blame && !sc.find_node(ev.target))
            bad_line(ev.line, "unknown blame target " + ev.target);
    }
    return sc;
}

inline Scenario parse_scenario(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

}  // namespace batm
