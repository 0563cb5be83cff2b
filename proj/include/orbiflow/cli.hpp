#pragma once

// Subcommand drivers behind tools/orbiflow.cpp. Each returns the process exit status and writes
// human-readable verdicts to `out`; numeric series go to CSV files under the output directory.

#include "orbiflow/graphdec.hpp"
#include "orbiflow/io.hpp"
#include "orbiflow/lfunc.hpp"
#include "orbiflow/orb2.hpp"
#include "orbiflow/orb3.hpp"
#include "orbiflow/ricciflow2d.hpp"
#include "orbiflow/surgeryflow3d.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

namespace orbiflow::cli {

constexpr int kOk = 0;
constexpr int kParse = 2;
constexpr int kInvariant = 3;
constexpr int kNumeric = 4;
constexpr int kIo = 5;

inline std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::string default_out_dir() {
    const char* env = std::getenv("ORBIFLOW_OUT");
    return env && *env ? env : ".";
}

// Opens a CSV for a fresh run (truncate + header) or a restored run (append, no header), so that
// the restored rows continue the file the interrupted run left behind.
inline std::ofstream open_csv(const std::string& dir, const std::string& name, const std::string& header, bool append) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    auto path = (std::filesystem::path(dir) / name).string();
    std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
    if (!f) throw IoError("cannot write '" + path + "'");
    if (!append && !header.empty()) f << header << '\n';
    return f;
}

inline void check_stream(const std::ofstream& f, const std::string& what) {
    if (!f) throw IoError("write failed for " + what);
}

// ---- classify2 / validate3 / decompose ----

inline int run_classify2(const std::string& text, std::ostream& out) {
    auto sig = parse_sig(text);
    validate(sig);
    out << to_string(classify_geometry(sig)) << ", chi_orb = " << to_string(orb_euler_char(sig)) << '\n';
    return kOk;
}

inline int run_validate3(const std::string& path, std::ostream& out) {
    auto doc = parse_document(read_file(path));
    auto* d = std::get_if<ThreeOrbDesc>(&doc.body);
    if (!d) throw ParseError("validate3 expects an 'orb3' document");
    validate(*d);
    out << "valid: components=" << d->components.size() << " edges=" << d->edges.size()
        << " vertices=" << d->vertices.size() << " sites=" << d->sites.size() << '\n';
    out << "edge labels:";
    for (int k : edge_label_multiset(*d)) out << ' ' << k;
    out << '\n';
    return kOk;
}

inline int run_decompose(const std::string& path, std::ostream& out) {
    auto doc = parse_document(read_file(path));
    auto* g = std::get_if<GraphOrb>(&doc.body);
    if (!g) throw ParseError("decompose expects a graph-orbifold document");
    auto r = normalize(*g);
    out << print_report(r);
    auto v = verify_strong(r.strong);
    bool ok = reconcile(r, static_cast<int>(g->gluings.size()));
    out << "strong check: " << (v.ok ? "pass" : "FAIL") << '\n';
    for (const auto& why : v.violations) out << "  " << why << '\n';
    out << "gluing count: " << (ok ? "reconciled" : "MISMATCH") << '\n';
    return v.ok && ok ? kOk : kInvariant;
}

// ---- flow2 ----

struct Flow2Config {
    int cone = 0;
    int football = 0;
    double eps = 0.1;  // football perturbation amplitude
    int grid = 200;
    double t_end = -1;  // <0: 1 for plain runs, 100 for --to-soliton
    double snapshot_every = -1;  // <0: 0.1 for plain runs, 1 for --to-soliton
    bool to_soliton = false;
    bool unnormalized = false;
    std::string out_dir = default_out_dir();
    double save_at = -1;
    std::string state_path;
    std::string restore_path;
};

inline void flow2_snapshot(const Flow2State& s, std::ofstream& csv, std::ofstream& summary) {
    const auto& p = s.profile;
    auto K = gauss_curvature(p);
    auto x = p.xi();
    for (int i = 0; i <= p.N(); ++i) csv << num(s.t) << ',' << num(x[i]) << ',' << num(p.phi[i]) << ',' << num(K[i]) << '\n';
    summary << num(s.t) << ',' << num(area(p)) << ',' << num(gauss_bonnet(p)) << ',' << num(curvature_spread(p)) << '\n';
    check_stream(csv, "flow2.csv");
    check_stream(summary, "flow2_summary.csv");
}

inline int run_flow2(Flow2Config cfg, std::ostream& out) {
    constexpr double tiny = 1e-12;
    const bool restored = !cfg.restore_path.empty();
    if (cfg.save_at >= 0 && cfg.state_path.empty()) throw InvariantError("--save-at needs --state <path>");
    Flow2State state;
    Flow2Params params;
    double next_snap = 0;
    long long last_emit = -1;
    if (restored) {
        auto d = read_state(read_file(cfg.restore_path), "flow2");
        state = get_flow2(d);
        params.normalization = d.get("normalization") == "none" ? Normalization::None : Normalization::AreaPreserving;
        cfg.to_soliton = d.get("to_soliton") == "1";
        cfg.snapshot_every = unhexd(d.get("snapshot_every"));
        next_snap = unhexd(d.get("next_snap"));
        last_emit = std::stoll(d.get("last_emit"));
    } else {
        if ((cfg.cone > 0) == (cfg.football > 0)) throw InvariantError("flow2 needs exactly one of --cone k or --football k");
        if (cfg.grid < 16) throw InvariantError("--grid must be at least 16");
        state.profile = cfg.cone > 0 ? teardrop(cfg.cone, cfg.grid) : football(cfg.football, cfg.grid, cfg.eps);
        if (cfg.to_soliton && cfg.cone == 0) throw InvariantError("--to-soliton applies to --cone seeds only");
        params.normalization = cfg.unnormalized ? Normalization::None : Normalization::AreaPreserving;
        state.area0 = area(state.profile);
        if (cfg.snapshot_every < 0) cfg.snapshot_every = cfg.to_soliton ? 1.0 : 0.1;
    }
    if (cfg.t_end < 0) cfg.t_end = cfg.to_soliton ? 100.0 : 1.0;
    if (!(cfg.snapshot_every > 0)) throw InvariantError("--snapshot-every must be positive");

    auto csv = open_csv(cfg.out_dir, "flow2.csv", "t,xi,phi,K", restored);
    auto summary = open_csv(cfg.out_dir, "flow2_summary.csv", "t,area,int_K_dA,spread", restored);
    auto emit = [&] {
        flow2_snapshot(state, csv, summary);
        last_emit = state.steps;
    };
    if (!restored) {
        emit();
        next_snap = cfg.snapshot_every;
    }
    const int check_every = 200;
    const double soliton_tol = 1e-5;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    while (state.t < cfg.t_end - tiny) {
        if (cfg.save_at >= 0 && state.t >= cfg.save_at - tiny) {
            StateDoc d;
            d.command = "flow2";
            put_flow2(d, state);
            d.put("normalization", params.normalization == Normalization::None ? "none" : "area");
            d.put("to_soliton", cfg.to_soliton ? "1" : "0");
            d.put("snapshot_every", hexd(cfg.snapshot_every));
            d.put("next_snap", hexd(next_snap));
            d.put("last_emit", std::to_string(last_emit));
            write_file(cfg.state_path, write_state(d));
            out << "saved state at t=" << num(state.t) << " to " << cfg.state_path << '\n';
            return kOk;
        }
        state = flow_step(state, params);
        if (state.t >= next_snap - tiny) {
            emit();
            while (next_snap <= state.t + tiny) next_snap += cfg.snapshot_every;
        }
        if (cfg.to_soliton && state.steps % check_every == 0) {
            residual = soliton_residual(state.profile);
            if (residual < soliton_tol) {
                converged = true;
                break;
            }
        }
    }
    if (last_emit != state.steps) emit();
    const auto& p = state.profile;
    out << "summary t=" << num(state.t) << " area=" << num(area(p)) << " int_K_dA=" << num(gauss_bonnet(p))
        << " expected_int_K_dA=" << num(2 * std::numbers::pi * chi_orb(p)) << " spread=" << num(curvature_spread(p))
        << '\n';
    if (!cfg.to_soliton) return kOk;
    residual = soliton_residual(p);
    out << "soliton residual " << num(residual) << (converged ? "" : " (t_end reached before tolerance)") << '\n';
    if (p.k0 == 1 && p.k1 >= 2) {
        auto shot = soliton_shoot(p.k1);
        out << "oracle distance " << num(sup_distance(p, shot)) << " (shooting c=" << num(shot.c) << ")\n";
    }
    if (!(residual < 1e-3)) {
        out << "soliton residual above 1e-3: flow did not reach a shrinking soliton\n";
        return kNumeric;
    }
    return kOk;
}

// ---- flow3 ----

struct Flow3Config {
    std::string cross_section = "S2";
    std::string seed = "dumbbell";
    double delta = 0.25;
    double h = 0.1;
    double stop_time = 0.3;
    int grid = 500;
    double snapshot_every = 0.05;
    std::string out_dir = default_out_dir();
    double save_at = -1;
    std::string state_path;
    std::string restore_path;
};

inline bool all_closed(const FlowState& s) {
    for (const auto& p : s.components)
        if (!p.closed()) return false;
    return !s.components.empty();
}

inline int run_flow3(Flow3Config cfg, std::ostream& out) {
    constexpr double tiny = 1e-12;
    const bool restored = !cfg.restore_path.empty();
    if (cfg.save_at >= 0 && cfg.state_path.empty()) throw InvariantError("--save-at needs --state <path>");
    FlowState state;
    SurgeryParams sp;
    PinchFn phi;
    double next_snap = 0;
    long long last_emit = -1;
    if (restored) {
        auto d = read_state(read_file(cfg.restore_path), "flow3");
        state = get_flow3(d);
        sp.delta = unhexd(d.get("delta"));
        sp.h = unhexd(d.get("h"));
        phi.C = unhexd(d.get("pinch_C"));
        cfg.snapshot_every = unhexd(d.get("snapshot_every"));
        next_snap = unhexd(d.get("next_snap"));
        last_emit = std::stoll(d.get("last_emit"));
    } else {
        auto cross = parse_sig(cfg.cross_section);
        validate(cross);
        if (cross.base_genus != 0 || !cross.closed() || cross.reflector || classify_geometry(cross) != GeometryClass::Spherical)
            throw InvariantError("cross-section must be a good spherical S2 quotient, got " + cfg.cross_section);
        if (cfg.grid < 32) throw InvariantError("--grid must be at least 32");
        WarpProfile seed;
        if (cfg.seed == "dumbbell") seed = dumbbell(cfg.grid, {}, cross);
        else if (cfg.seed == "round") seed = round_s3(cfg.grid, 1.0, cross);
        else if (cfg.seed == "cylinder") seed = cylinder(std::numbers::sqrt2, 10.0, cfg.grid, cross);
        else throw InvariantError("--seed must be dumbbell, round or cylinder");
        state.components = {seed};
        sp.delta = cfg.delta;
        sp.h = cfg.h;
        phi = fit_pinch(seed);
    }
    validate(sp);
    if (!(cfg.snapshot_every > 0)) throw InvariantError("--snapshot-every must be positive");

    auto csv = open_csv(cfg.out_dir, "flow3.csv", "t,component,s,psi,R", restored);
    auto sig = open_csv(cfg.out_dir, "sigma.csv", "t,r_min,volume,sigma", restored);
    auto ev = open_csv(cfg.out_dir, "events.txt", "", restored);
    auto emit = [&] {
        for (std::size_t c = 0; c < state.components.size(); ++c) {
            const auto& p = state.components[c];
            auto cv = curvatures(p);
            for (int i = 0; i <= p.N(); ++i)
                csv << num(state.t) << ',' << c << ',' << num(p.s(i)) << ',' << num(p.psi[i]) << ',' << num(cv.R[i]) << '\n';
        }
        if (all_closed(state)) {
            sigma_track(state);
            const auto& q = state.sigma_samples.back();
            sig << num(q.t) << ',' << num(q.r_min) << ',' << num(q.volume) << ',' << num(q.sigma) << '\n';
        }
        check_stream(csv, "flow3.csv");
        check_stream(sig, "sigma.csv");
        last_emit = state.steps;
    };
    if (!restored) {
        ev << "t=0 seed=" << cfg.seed << " cross_section=" << cfg.cross_section << " pinch_C=" << num(phi.C) << '\n';
        emit();
        next_snap = cfg.snapshot_every;
    }
    const double limit = 1 / (sp.h * sp.h);
    int surgeries = 0, failed_pinching = 0;
    while (state.t < cfg.stop_time - tiny && !state.components.empty()) {
        if (cfg.save_at >= 0 && state.t >= cfg.save_at - tiny) {
            StateDoc d;
            d.command = "flow3";
            put_flow3(d, state);
            d.put("delta", hexd(sp.delta));
            d.put("h", hexd(sp.h));
            d.put("pinch_C", hexd(phi.C));
            d.put("snapshot_every", hexd(cfg.snapshot_every));
            d.put("next_snap", hexd(next_snap));
            d.put("last_emit", std::to_string(last_emit));
            write_file(cfg.state_path, write_state(d));
            out << "saved state at t=" << num(state.t) << " to " << cfg.state_path << '\n';
            return kOk;
        }
        state = flow_step3(state);
        // components whose curvature everywhere exceeds h^-2 go extinct before psi reaches 0
        for (int c = static_cast<int>(state.components.size()) - 1; c >= 0; --c) {
            if (min_scalar(state.components[c]) <= limit) continue;
            FlowEvent e;
            e.t = state.t;
            e.component = c;
            e.discarded = 1;
            e.note = "extinct";
            state.events.push_back(e);
            state.components.erase(state.components.begin() + c);
            ev << "t=" << num(state.t) << " extinct component=" << c << '\n';
        }
        for (int c = 0; c < static_cast<int>(state.components.size()); ++c) {
            auto neck = detect_neck(state.components[c], sp.delta);
            if (!neck || neck->scale > sp.h) continue;
            auto pre = pinching_check(state.components[c], phi);
            const auto before = state.events.size();
            const auto count = state.components.size();
            state = neck_surgery(state, c, *neck, sp);
            if (state.events.size() == before) continue;
            int kept = 0, discarded = 0;
            for (auto i = before; i < state.events.size(); ++i) discarded += state.events[i].discarded;
            kept = static_cast<int>(state.components.size() + 1 - count);
            ev << "t=" << num(state.t) << " surgery component=" << c << " neck_center=" << num(neck->center)
               << " neck_scale=" << num(neck->scale) << " cuts=" << state.events.size() - before << " kept=" << kept
               << " discarded=" << discarded << " pinching_pre=" << (pre.pass ? "pass" : "FAIL") << " margin=" << num(pre.margin);
            failed_pinching += !pre.pass;
            for (int k = 0; k < kept; ++k) {
                auto post = pinching_check(state.components[c + k], phi);
                ev << " pinching_post" << k << '=' << (post.pass ? "pass" : "FAIL") << " margin=" << num(post.margin);
                failed_pinching += !post.pass;
            }
            ev << '\n';
            ++surgeries;
            break;
        }
        if (state.t >= next_snap - tiny) {
            emit();
            while (next_snap <= state.t + tiny) next_snap += cfg.snapshot_every;
        }
    }
    if (last_emit != state.steps && !state.components.empty()) emit();
    check_stream(ev, "events.txt");
    out << "flow3 t=" << num(state.t) << " components=" << state.components.size() << " surgeries_this_run=" << surgeries
        << '\n';
    if (state.components.empty()) out << "all components extinct\n";
    if (failed_pinching) {
        out << "pinching condition Rm >= -Phi(R) violated " << failed_pinching << " time(s)\n";
        return kInvariant;
    }
    return kOk;
}

// ---- lvolume ----

struct LvolumeConfig {
    std::string model = "flat";
    int n = 3;
    long long group_order = 1;
    std::string tau_grid = "0.001:1:20";
    std::string out_path;  // empty: CSV to `out`
};

inline int run_lvolume(const LvolumeConfig& cfg, std::ostream& out) {
    ModelFlowSpec m;
    if (cfg.model == "flat") m = flat_model(cfg.n, cfg.group_order);
    else if (cfg.model == "sphere") m = round_model(cfg.n, cfg.group_order);
    else if (cfg.model == "cylinder") {
        if (cfg.n != 3) throw InvariantError("the cylinder model is 3-dimensional");
        m = cylinder_model(cfg.group_order);
    } else throw InvariantError("--model must be flat, sphere or cylinder");
    validate(m);
    auto parts = split(cfg.tau_grid, ':');
    if (parts.size() != 3) throw ParseError("--tau-grid must read a:b:steps");
    double a = 0, b = 0;
    try {
        a = std::stod(parts[0]);
        b = std::stod(parts[1]);
    } catch (const std::exception&) {
        throw ParseError("--tau-grid bounds must be numbers");
    }
    int steps = parse_int(parts[2], "tau grid steps");
    auto taus = geometric_grid(a, b, steps);
    auto curve = reduced_volume_curve(m, taus);

    std::string csv = "tau,V\n";
    for (const auto& [t, v] : curve.samples) csv += num(t) + ',' + num(v) + '\n';
    if (cfg.out_path.empty()) out << csv;
    else write_file(cfg.out_path, csv);

    bool ok = true;
    if (curve.monotone) {
        out << "verdict monotone: pass (V nonincreasing in tau within 1e-05)\n";
    } else {
        ok = false;
        out << "verdict monotone: FAIL at tau=" << num(curve.samples[curve.violation].first)
            << " (V must be nonincreasing in tau)\n";
    }
    auto ml = min_reduced_length(m, b);
    bool ml_ok = ml.l <= 0.5 * m.n + 1e-3;
    ok = ok && ml_ok;
    out << "verdict min reduced length: " << (ml_ok ? "pass" : "FAIL") << " l=" << num(ml.l) << " at tau=" << num(b)
        << " bound n/2=" << num(0.5 * m.n) << '\n';
    if (m.kind == ModelKind::Flat) {
        double expect = std::pow(4 * std::numbers::pi, 0.5 * m.n) / static_cast<double>(m.group_order);
        double err = 0;
        for (const auto& s : curve.samples) err = std::max(err, std::abs(s.second - expect));
        bool g_ok = err < 1e-4;
        ok = ok && g_ok;
        out << "verdict gaussian value: " << (g_ok ? "pass" : "FAIL") << " expected (4pi)^(n/2)/m=" << num(expect)
            << " max_error=" << num(err) << '\n';
    }
    return ok ? kOk : kInvariant;
}

}  // namespace orbiflow::cli
