#pragma once

#include "orbiflow/common.hpp"
#include "orbiflow/graphdec.hpp"
#include "orbiflow/orb2.hpp"
#include "orbiflow/orb3.hpp"
#include "orbiflow/ricciflow2d.hpp"
#include "orbiflow/surgeryflow3d.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace orbiflow {

// ---- documents ----

struct OrbDocument {
    int version = 1;
    std::variant<TwoOrbSig, ThreeOrbDesc, GraphOrb> body;
};

namespace detail {

inline std::string first_token(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        return t.substr(0, t.find_first_of(" \t"));
    }
    return {};
}

}  // namespace detail

// Dispatch on the first meaningful token: "orb3" header, "piece" lines, otherwise a signature.
inline OrbDocument parse_document(const std::string& text) {
    OrbDocument d;
    auto head = detail::first_token(text);
    if (head.empty()) throw ParseError("empty document", 1, 1);
    if (head == "orb3") d.body = parse_orb3(text);
    else if (head == "piece" || head == "bdry" || head == "glue") d.body = parse_graph(text);
    else d.body = parse_sig(text);
    return d;
}

inline std::string print_document(const OrbDocument& d) {
    if (auto s = std::get_if<TwoOrbSig>(&d.body)) return print_sig(*s) + "\n";
    if (auto o = std::get_if<ThreeOrbDesc>(&d.body)) return print_orb3(*o);
    return print_graph(std::get<GraphOrb>(d.body));
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for '" + path + "'");
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << data;
    if (!out) throw IoError("write failed for '" + path + "'");
}

// ---- snapshots ----

// Line-oriented key/value state with hexfloat numbers, a command tag, a format version and an
// FNV-1a checksum over everything before the checksum line.
struct StateDoc {
    static constexpr int kVersion = 1;
    std::string command;
    std::vector<std::pair<std::string, std::string>> fields;

    void put(const std::string& k, const std::string& v) { fields.emplace_back(k, v); }
    const std::string& get(const std::string& k) const {
        for (const auto& [key, v] : fields)
            if (key == k) return v;
        throw IoError("state file lacks field '" + k + "'");
    }
    std::vector<std::string> get_all(const std::string& k) const {
        std::vector<std::string> out;
        for (const auto& [key, v] : fields)
            if (key == k) out.push_back(v);
        return out;
    }
};

inline std::string hexd(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

inline double unhexd(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw IoError("bad number '" + s + "' in state file");
    return v;
}

inline std::string hex_vec(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += hexd(v[i]);
    }
    return out;
}

inline std::vector<double> unhex_vec(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(unhexd(tok));
    return out;
}

inline std::string write_state(const StateDoc& d) {
    std::string body = "orbiflow-state " + std::to_string(StateDoc::kVersion) + "\ncommand " + d.command + "\n";
    for (const auto& [k, v] : d.fields) body += k + " " + v + "\n";
    char sum[32];
    std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(fnv1a(body)));
    return body + "checksum " + sum + "\n";
}

inline StateDoc read_state(const std::string& text, const std::string& expected_command) {
    auto pos = text.rfind("checksum ");
    if (pos == std::string::npos || (pos > 0 && text[pos - 1] != '\n')) throw IoError("state file has no checksum line");
    std::string body = text.substr(0, pos);
    char sum[32];
    std::snprintf(sum, sizeof sum, "%016llx", static_cast<unsigned long long>(fnv1a(body)));
    if (trim(text.substr(pos + 9)) != sum) throw IoError("state file checksum mismatch (corrupted)");
    std::istringstream in(body);
    std::string line;
    std::getline(in, line);
    if (line != "orbiflow-state " + std::to_string(StateDoc::kVersion))
        throw IoError("state file version mismatch: '" + line + "'");
    StateDoc d;
    std::getline(in, line);
    if (line.rfind("command ", 0) != 0) throw IoError("state file lacks a command tag");
    d.command = line.substr(8);
    if (d.command != expected_command)
        throw IoError("state file was written by '" + d.command + "', cannot restore into '" + expected_command + "'");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto sp = line.find(' ');
        d.fields.emplace_back(line.substr(0, sp), sp == std::string::npos ? "" : line.substr(sp + 1));
    }
    return d;
}

inline void put_flow2(StateDoc& d, const Flow2State& s) {
    d.put("k0", std::to_string(s.profile.k0));
    d.put("k1", std::to_string(s.profile.k1));
    d.put("L", hexd(s.profile.L));
    d.put("t", hexd(s.t));
    d.put("steps", std::to_string(s.steps));
    d.put("area0", hexd(s.area0));
    d.put("phi", hex_vec(s.profile.phi));
}

inline Flow2State get_flow2(const StateDoc& d) {
    Flow2State s;
    s.profile.k0 = std::stoi(d.get("k0"));
    s.profile.k1 = std::stoi(d.get("k1"));
    s.profile.L = unhexd(d.get("L"));
    s.t = unhexd(d.get("t"));
    s.steps = std::stoll(d.get("steps"));
    s.area0 = unhexd(d.get("area0"));
    s.profile.phi = unhex_vec(d.get("phi"));
    return s;
}

inline void put_flow3(StateDoc& d, const FlowState& s) {
    d.put("t", hexd(s.t));
    d.put("steps", std::to_string(s.steps));
    d.put("components", std::to_string(s.components.size()));
    for (const auto& p : s.components) {
        d.put("component", print_sig(p.cross_section) + " " + (p.end0 == EndKind::Cap ? "cap" : "boundary") + " " +
                               (p.end1 == EndKind::Cap ? "cap" : "boundary") + " " + hexd(p.L));
        d.put("psi", hex_vec(p.psi));
    }
    for (const auto& e : s.events)
        d.put("event", hexd(e.t) + " " + std::to_string(e.component) + " " + hexd(e.center) + " " + hexd(e.scale) + " " +
                           std::to_string(e.kept) + " " + std::to_string(e.discarded) + " " + e.note);
    for (const auto& q : s.sigma_samples)
        d.put("sigma", hexd(q.t) + " " + hexd(q.r_min) + " " + hexd(q.volume) + " " + hexd(q.sigma));
}

inline FlowState get_flow3(const StateDoc& d) {
    FlowState s;
    s.t = unhexd(d.get("t"));
    s.steps = std::stoll(d.get("steps"));
    auto comps = d.get_all("component");
    auto psis = d.get_all("psi");
    if (comps.size() != psis.size() || comps.size() != std::stoul(d.get("components")))
        throw IoError("state file component count mismatch");
    for (std::size_t i = 0; i < comps.size(); ++i) {
        std::istringstream in(comps[i]);
        std::string sig, e0, e1, L;
        in >> sig >> e0 >> e1 >> L;
        WarpProfile p;
        p.cross_section = parse_sig(sig);
        p.end0 = e0 == "cap" ? EndKind::Cap : EndKind::Boundary;
        p.end1 = e1 == "cap" ? EndKind::Cap : EndKind::Boundary;
        p.L = unhexd(L);
        p.psi = unhex_vec(psis[i]);
        s.components.push_back(std::move(p));
    }
    for (const auto& line : d.get_all("event")) {
        std::istringstream in(line);
        std::string t, c, sc;
        FlowEvent e;
        in >> t >> e.component >> c >> sc >> e.kept >> e.discarded;
        std::getline(in, e.note);
        e.note = trim(e.note);
        e.t = unhexd(t);
        e.center = unhexd(c);
        e.scale = unhexd(sc);
        s.events.push_back(e);
    }
    for (const auto& line : d.get_all("sigma")) {
        auto v = unhex_vec(line);
        if (v.size() != 4) throw IoError("bad sigma sample in state file");
        s.sigma_samples.push_back({v[0], v[1], v[2], v[3]});
    }
    return s;
}

}  // namespace orbiflow
