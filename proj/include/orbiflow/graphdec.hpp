#pragma once

#include "orbiflow/orb3.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace orbiflow {

enum class EucKind { T2, S2222 };

inline const char* to_string(EucKind k) { return k == EucKind::T2 ? "T2" : "S2222"; }

// Fiber class on a gluing 2-orbifold, in a basis shared by both sides of the gluing.
struct Slope {
    int a = 1, b = 0;
    auto operator<=>(const Slope&) const = default;
};

inline Slope make_slope(int a, int b) {
    if (a == 0 && b == 0) throw InvariantError("slope 0/0");
    if (std::gcd(a, b) != 1) throw InvariantError("slope " + std::to_string(a) + "/" + std::to_string(b) + " not primitive");
    if (a < 0 || (a == 0 && b < 0)) a = -a, b = -b;
    return {a, b};
}

inline long long slope_det(Slope x, Slope y) {
    return static_cast<long long>(x.a) * y.b - static_cast<long long>(x.b) * y.a;
}

// A slope y with det(x, y) = 1.
inline Slope dual_slope(Slope x) {
    long long old_r = x.a, r = x.b, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
        long long q = old_r / r;
        std::tie(old_r, r) = std::make_tuple(r, old_r - q * r);
        std::tie(old_s, s) = std::make_tuple(s, old_s - q * s);
        std::tie(old_t, t) = std::make_tuple(t, old_t - q * t);
    }
    // old_s*a + old_t*b = old_r = +-1; want a*d - b*c = 1
    long long d = old_s, c = -old_t;
    if (old_r < 0) d = -d, c = -c;
    Slope y{static_cast<int>(c), static_cast<int>(d)};
    return y;
}

struct Bdry {
    std::string name;  // stable identity across operations
    EucKind kind = EucKind::T2;
    int mirror = -1;  // reflector component carrying this arc (S2222 only)
    Slope fiber;
};

struct SeifertPiece {
    std::string id;
    int genus = 0;
    std::vector<int> cones;                       // exceptional fibers, sorted
    std::vector<std::vector<int>> mirror_corners;  // one entry per reflector component
    std::vector<Bdry> bdry;                        // T2 first, then arcs by reflector component

    int t2_count() const {
        return static_cast<int>(std::count_if(bdry.begin(), bdry.end(), [](auto& b) { return b.kind == EucKind::T2; }));
    }
    int arcs_on(int m) const {
        return static_cast<int>(std::count_if(bdry.begin(), bdry.end(), [&](auto& b) { return b.mirror == m; }));
    }
    int mirrors() const { return static_cast<int>(mirror_corners.size()); }

    bool solid_toric() const {
        if (genus != 0 || bdry.size() != 1) return false;
        if (mirror_corners.empty()) return bdry[0].kind == EucKind::T2 && cones.size() <= 1;
        return mirror_corners.size() == 1 && cones.empty() && bdry[0].kind == EucKind::S2222 &&
               mirror_corners[0].size() <= 1;
    }
    // Label r of the singular core (1 when nonsingular).
    int solid_toric_order() const {
        if (!cones.empty()) return cones[0];
        if (!mirror_corners.empty() && !mirror_corners[0].empty()) return mirror_corners[0][0];
        return 1;
    }
    const Bdry* find(const std::string& name) const {
        for (const auto& b : bdry)
            if (b.name == name) return &b;
        return nullptr;
    }
    Bdry* find(const std::string& name) {
        for (auto& b : bdry)
            if (b.name == name) return &b;
        return nullptr;
    }
    Rational euler_char() const {
        int bcomp = t2_count() + mirrors();
        Rational chi(2 - 2 * genus - bcomp);
        for (int k : cones) chi -= Rational(1) - Rational(1, k);
        for (const auto& m : mirror_corners)
            for (int c : m) chi -= Rational(1, 2) * (Rational(1) - Rational(1, c));
        int arcs = static_cast<int>(bdry.size()) - t2_count();
        chi -= Rational(arcs, 2);
        return chi;
    }
};

inline void tidy(SeifertPiece& p) {
    std::sort(p.cones.begin(), p.cones.end());
    for (auto& m : p.mirror_corners) std::sort(m.begin(), m.end());
    std::stable_sort(p.bdry.begin(), p.bdry.end(), [](const Bdry& x, const Bdry& y) {
        if (x.kind != y.kind) return x.kind == EucKind::T2;
        return x.mirror < y.mirror;
    });
}

struct Gluing {
    std::string end1, end2;  // boundary names; meridian data refers to the piece owning end2
    bool isotopic = false;
    std::optional<int> u;
    bool meridian_fiber = false;
    bool has_meridian_data() const { return meridian_fiber || u.has_value(); }
};

struct GraphOrb {
    std::vector<SeifertPiece> pieces;
    std::vector<Gluing> gluings;
    int fresh = 0;  // counter for generated names

    std::string next_name(const char* prefix) { return std::string(prefix) + std::to_string(fresh++); }

    int piece_of(const std::string& bname) const {
        for (std::size_t i = 0; i < pieces.size(); ++i)
            if (pieces[i].find(bname)) return static_cast<int>(i);
        return -1;
    }
    int piece_index(const std::string& id) const {
        for (std::size_t i = 0; i < pieces.size(); ++i)
            if (pieces[i].id == id) return static_cast<int>(i);
        return -1;
    }
    const Bdry& bdry(const std::string& name) const {
        int p = piece_of(name);
        if (p < 0) throw InvariantError("unknown boundary '" + name + "'");
        return *pieces[p].find(name);
    }
    int gluing_of(const std::string& bname) const {
        for (std::size_t i = 0; i < gluings.size(); ++i)
            if (gluings[i].end1 == bname || gluings[i].end2 == bname) return static_cast<int>(i);
        return -1;
    }
    std::vector<std::string> free_boundaries() const {
        std::vector<std::string> out;
        for (const auto& p : pieces)
            for (const auto& b : p.bdry)
                if (gluing_of(b.name) < 0) out.push_back(b.name);
        return out;
    }
};

inline void validate(const GraphOrb& g) {
    std::set<std::string> ids, names;
    for (const auto& p : g.pieces) {
        if (!ids.insert(p.id).second) throw InvariantError("duplicate piece id '" + p.id + "'");
        if (p.genus < 0) throw InvariantError("piece '" + p.id + "' has negative genus");
        for (int k : p.cones)
            if (k < 2) throw InvariantError("piece '" + p.id + "' exceptional fiber order < 2");
        for (const auto& m : p.mirror_corners)
            for (int c : m)
                if (c < 2) throw InvariantError("piece '" + p.id + "' corner order < 2");
        for (const auto& b : p.bdry) {
            if (!names.insert(b.name).second) throw InvariantError("duplicate boundary name '" + b.name + "'");
            if (b.kind == EucKind::T2 && b.mirror != -1) throw InvariantError("T2 boundary on a reflector");
            if (b.kind == EucKind::S2222 && (b.mirror < 0 || b.mirror >= p.mirrors()))
                throw InvariantError("S2222 boundary '" + b.name + "' not on a reflector component");
        }
    }
    std::set<std::string> used;
    for (const auto& gl : g.gluings) {
        for (const auto* e : {&gl.end1, &gl.end2}) {
            if (g.piece_of(*e) < 0) throw InvariantError("gluing references unknown boundary '" + *e + "'");
            if (!used.insert(*e).second) throw InvariantError("boundary '" + *e + "' glued twice");
        }
        const Bdry& b1 = g.bdry(gl.end1);
        const Bdry& b2 = g.bdry(gl.end2);
        if (b1.kind != b2.kind) throw InvariantError("gluing " + gl.end1 + "~" + gl.end2 + " joins T2 to S2222");
        bool iso = slope_det(b1.fiber, b2.fiber) == 0;
        if (iso != gl.isotopic)
            throw InvariantError("gluing " + gl.end1 + "~" + gl.end2 + ": isotopic flag disagrees with fiber slopes");
        if (gl.u && *gl.u < 1) throw InvariantError("intersection number u must be >= 1");
        if (gl.has_meridian_data()) {
            if (gl.isotopic) throw InvariantError("meridian data is forbidden on an isotopic gluing");
            if (gl.u && gl.meridian_fiber) throw InvariantError("u given together with meridian_fiber=true");
            if (!g.pieces[g.piece_of(gl.end2)].solid_toric())
                throw InvariantError("meridian data given but '" + gl.end2 + "' is not on a solid-toric piece");
        }
        // A solid-toric neighbour without meridian data is an ordinary gluing: no operation applies to it.
    }
}

// ---- connectivity ----

inline std::vector<int> component_labels(const GraphOrb& g) {
    std::vector<int> parent(g.pieces.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };
    for (const auto& gl : g.gluings) {
        int a = root(g.piece_of(gl.end1)), b = root(g.piece_of(gl.end2));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<int> lab(g.pieces.size());
    std::map<int, int> ren;
    for (std::size_t i = 0; i < g.pieces.size(); ++i) {
        int r = root(static_cast<int>(i));
        if (!ren.count(r)) ren[r] = static_cast<int>(ren.size());
        lab[i] = ren[r];
    }
    return lab;
}

inline int component_count(const GraphOrb& g) {
    auto lab = component_labels(g);
    return lab.empty() ? 0 : *std::max_element(lab.begin(), lab.end()) + 1;
}

inline GraphOrb restrict_to(const GraphOrb& g, const std::set<int>& piece_idx) {
    GraphOrb out;
    out.fresh = g.fresh;
    for (int i : piece_idx) out.pieces.push_back(g.pieces[i]);
    for (const auto& gl : g.gluings)
        if (piece_idx.count(g.piece_of(gl.end1))) out.gluings.push_back(gl);
    return out;
}

// ---- strong check ----

struct StrongVerdict {
    bool ok = true;
    std::vector<std::string> violations;
};

inline StrongVerdict verify_strong(const GraphOrb& g) {
    validate(g);
    StrongVerdict v;
    for (std::size_t i = 0; i < g.gluings.size(); ++i) {
        const auto& gl = g.gluings[i];
        std::string tag = "gluing " + std::to_string(i) + " (" + gl.end1 + "~" + gl.end2 + ")";
        if (gl.isotopic) v.violations.push_back(tag + ": adjacent fibrations isotopic, condition (2)");
        if (gl.meridian_fiber)
            v.violations.push_back(tag + ": compressible, solid-toric meridian is a fiber, condition (3)");
        else if (gl.u)
            v.violations.push_back(tag + ": compressible, solid-toric neighbour admits a Dehn merge, condition (3)");
    }
    v.ok = v.violations.empty();
    return v;
}

// ---- normalization ----

enum class OpKind {
    Merge,
    DehnMerge,
    Step1,
    Step2,
    Step3,
    Step4,
    Step5Annulus,
    Step5Disc,
    Step5DiscCone,
    Step5Reflector,
    Step5ReflectorCorner,
    Step5MixedAnnulus,
    QuotientS1xS2,
};

inline const char* to_string(OpKind k) {
    switch (k) {
        case OpKind::Merge: return "first-op-merge";
        case OpKind::DehnMerge: return "dehn-merge";
        case OpKind::Step1: return "step1";
        case OpKind::Step2: return "step2";
        case OpKind::Step3: return "step3";
        case OpKind::Step4: return "step4";
        case OpKind::Step5Annulus: return "step5-case1";
        case OpKind::Step5Disc: return "step5-case2";
        case OpKind::Step5DiscCone: return "step5-case3";
        case OpKind::Step5Reflector: return "step5-case4";
        case OpKind::Step5ReflectorCorner: return "step5-case5";
        case OpKind::Step5MixedAnnulus: return "step5-case6";
        case OpKind::QuotientS1xS2: return "s1xs2-quotient";
    }
    return "?";
}

// Change in the number of gluings caused by each operation.
inline int gluing_delta(OpKind k) {
    switch (k) {
        case OpKind::Merge:
        case OpKind::DehnMerge:
        case OpKind::Step5Annulus:
        case OpKind::Step5Disc:
        case OpKind::Step5DiscCone:
        case OpKind::Step5Reflector:
        case OpKind::Step5ReflectorCorner:
        case OpKind::Step5MixedAnnulus: return -1;
        case OpKind::Step1:
        case OpKind::Step2:
        case OpKind::Step3: return +1;
        case OpKind::Step4: return 0;
        case OpKind::QuotientS1xS2: return -2;
    }
    return 0;
}

struct TraceEntry {
    OpKind op;
    int gluing = -1;
    std::string detail;
    int gluings_before = 0, gluings_after = 0;
    int pieces_before = 0, pieces_after = 0;
};

struct NormalizationResult {
    GraphOrb strong;
    std::vector<SurgeryRecord> surgeries;
    std::vector<std::string> recognized;
    std::vector<TraceEntry> trace;
};

inline bool reconcile(const NormalizationResult& r, int gluings_in) {
    int g = gluings_in;
    for (const auto& t : r.trace) {
        if (t.gluings_before != g) return false;
        if (t.gluings_after - t.gluings_before != gluing_delta(t.op)) return false;
        g = t.gluings_after;
    }
    return g == static_cast<int>(r.strong.gluings.size());
}

namespace detail {

inline std::string z(int n) { return "Z" + std::to_string(n); }

inline std::string lens_token(int r) { return r == 1 ? "S3" : "S3//" + z(r); }
inline std::string torus_pair_token(int r, int s) {
    if (r == 1) return "S3//" + z(s);
    return "S3//(" + z(r) + "×" + z(s) + ")";
}
inline std::string dihedral_token(int r) { return r == 1 ? "S3//Z2" : "S3//D" + std::to_string(r); }
inline std::string dihedral_pair_token(int r, int s) {
    if (r == 1) return "S3//D" + std::to_string(s);
    return "(S3//(" + z(r) + "×" + z(s) + "))//Z2";
}

// Labels of 1 mark a nonsingular fiber and drop out of the signature.
inline TwoOrbSig splitting_sphere(std::vector<int> labels) {
    labels.erase(std::remove(labels.begin(), labels.end(), 1), labels.end());
    return sphere(std::move(labels));
}

inline SurgeryRecord record(const TwoOrbSig& gamma, GraphOrb& g, bool split) {
    SurgeryRecord rec;
    rec.gamma = gamma;
    rec.site_ids = {g.next_name("x"), g.next_name("x")};
    rec.direction = split ? SurgeryRecord::Split : SurgeryRecord::Join;
    return rec;
}

inline void erase_piece(GraphOrb& g, const std::string& id) {
    g.pieces.erase(std::remove_if(g.pieces.begin(), g.pieces.end(), [&](auto& p) { return p.id == id; }),
                   g.pieces.end());
}

inline void erase_gluing_of(GraphOrb& g, const std::string& bname) {
    int k = g.gluing_of(bname);
    if (k >= 0) g.gluings.erase(g.gluings.begin() + k);
}

inline SeifertPiece make_cap(GraphOrb& g, int r, bool z2, Slope fiber) {
    SeifertPiece c;
    c.id = g.next_name("cap");
    Bdry b;
    b.name = g.next_name("~");
    b.fiber = fiber;
    if (z2) {
        c.mirror_corners.push_back(r > 1 ? std::vector<int>{r} : std::vector<int>{});
        b.kind = EucKind::S2222;
        b.mirror = 0;
    } else {
        if (r > 1) c.cones.push_back(r);
        b.kind = EucKind::T2;
    }
    c.bdry.push_back(b);
    return c;
}

// A solid-toric piece replacing U u cap on the surviving boundary `keep` of U.
inline void replace_by_solid_torus(GraphOrb& g, const std::string& u_id, const std::string& cap_id,
                                   const Bdry& keep, int r) {
    int h = g.gluing_of(keep.name);
    Slope meridian = keep.fiber;
    SeifertPiece n;
    n.id = g.next_name("st");
    Bdry nb;
    nb.name = keep.name;
    nb.kind = keep.kind;
    nb.fiber = dual_slope(meridian);
    if (keep.kind == EucKind::T2) {
        if (r > 1) n.cones.push_back(r);
    } else {
        n.mirror_corners.push_back(r > 1 ? std::vector<int>{r} : std::vector<int>{});
        nb.mirror = 0;
    }
    n.bdry.push_back(nb);
    erase_piece(g, u_id);
    erase_piece(g, cap_id);
    g.pieces.push_back(n);
    if (h >= 0) {
        Gluing& gl = g.gluings[h];
        std::string other = gl.end1 == keep.name ? gl.end2 : gl.end1;
        gl.end1 = other;
        gl.end2 = keep.name;
        Slope vf = g.bdry(other).fiber;
        long long u = std::llabs(slope_det(meridian, vf));
        gl.isotopic = slope_det(nb.fiber, vf) == 0;
        gl.meridian_fiber = false;
        gl.u.reset();
        if (!gl.isotopic) {
            if (u == 0) gl.meridian_fiber = true;
            else gl.u = static_cast<int>(u);
        }
    }
}

}  // namespace detail

// First operation: extend the Seifert fibration across an isotopic gluing.
inline GraphOrb op1_merge(const GraphOrb& in, int e) {
    if (e < 0 || e >= static_cast<int>(in.gluings.size())) throw InvariantError("op1_merge: no gluing " + std::to_string(e));
    const Gluing gl = in.gluings[e];
    if (!gl.isotopic) throw InvariantError("op1_merge: fibrations on gluing " + std::to_string(e) + " are not isotopic");
    GraphOrb g = in;
    int pi = g.piece_of(gl.end1), qi = g.piece_of(gl.end2);
    const Bdry b1 = *g.pieces[pi].find(gl.end1);
    const Bdry b2 = *g.pieces[qi].find(gl.end2);
    g.gluings.erase(g.gluings.begin() + e);
    if (pi == qi) {
        SeifertPiece& p = g.pieces[pi];
        auto drop = [&](const std::string& n) {
            p.bdry.erase(std::remove_if(p.bdry.begin(), p.bdry.end(), [&](auto& b) { return b.name == n; }), p.bdry.end());
        };
        drop(b1.name);
        drop(b2.name);
        if (b1.kind == EucKind::T2) {
            p.genus += 1;
        } else if (b1.mirror == b2.mirror) {
            // the reflector circle splits in two; remaining corners and arcs stay on the first
            p.mirror_corners.push_back({});
        } else {
            int keep = std::min(b1.mirror, b2.mirror), gone = std::max(b1.mirror, b2.mirror);
            auto& mc = p.mirror_corners;
            mc[keep].insert(mc[keep].end(), mc[gone].begin(), mc[gone].end());
            mc.erase(mc.begin() + gone);
            for (auto& b : p.bdry) {
                if (b.mirror == gone) b.mirror = keep;
                else if (b.mirror > gone) --b.mirror;
            }
            p.genus += 1;
        }
        tidy(p);
        return g;
    }
    SeifertPiece p = g.pieces[pi], q = g.pieces[qi];
    SeifertPiece m;
    m.id = p.id + "+" + q.id;
    m.genus = p.genus + q.genus;
    m.cones = p.cones;
    m.cones.insert(m.cones.end(), q.cones.begin(), q.cones.end());
    m.mirror_corners = p.mirror_corners;
    const int shift = p.mirrors();
    m.mirror_corners.insert(m.mirror_corners.end(), q.mirror_corners.begin(), q.mirror_corners.end());
    for (const auto& b : p.bdry)
        if (b.name != b1.name) m.bdry.push_back(b);
    for (auto b : q.bdry) {
        if (b.name == b2.name) continue;
        if (b.mirror >= 0) b.mirror += shift;
        m.bdry.push_back(b);
    }
    if (b1.kind == EucKind::S2222) {
        int keep = b1.mirror, gone = b2.mirror + shift;
        auto& mc = m.mirror_corners;
        mc[keep].insert(mc[keep].end(), mc[gone].begin(), mc[gone].end());
        mc.erase(mc.begin() + gone);
        for (auto& b : m.bdry) {
            if (b.mirror == gone) b.mirror = keep;
            else if (b.mirror > gone) --b.mirror;
        }
    }
    tidy(m);
    int first = std::min(pi, qi);
    std::string pid = p.id, qid = q.id;
    g.pieces[first] = m;
    g.pieces.erase(g.pieces.begin() + std::max(pi, qi));
    return g;
}

// Second operation, meridian not a fiber: base becomes B u_R D2(u*r).
inline GraphOrb op2_dehn_merge(const GraphOrb& in, int e) {
    if (e < 0 || e >= static_cast<int>(in.gluings.size()))
        throw InvariantError("op2_dehn_merge: no gluing " + std::to_string(e));
    const Gluing gl = in.gluings[e];
    if (gl.meridian_fiber) throw InvariantError("op2_dehn_merge: meridian is a fiber, use steps 1-5");
    if (!gl.u) throw InvariantError("op2_dehn_merge: gluing carries no intersection number u");
    GraphOrb g = in;
    int ui = g.piece_of(gl.end1), ci = g.piece_of(gl.end2);
    const SeifertPiece cap = g.pieces[ci];
    int order = *gl.u * cap.solid_toric_order();
    SeifertPiece& p = g.pieces[ui];
    Bdry r = *p.find(gl.end1);
    p.bdry.erase(std::remove_if(p.bdry.begin(), p.bdry.end(), [&](auto& b) { return b.name == r.name; }), p.bdry.end());
    if (r.kind == EucKind::T2) {
        if (order > 1) p.cones.push_back(order);
    } else if (order > 1) {
        p.mirror_corners[r.mirror].push_back(order);
    }
    tidy(p);
    g.gluings.erase(g.gluings.begin() + e);
    detail::erase_piece(g, cap.id);
    return g;
}

enum class StepKind { Separating, Nonseparating, ReflectorSeparating, ReflectorNonseparating };

struct StepOutcome {
    GraphOrb graph;
    std::vector<SurgeryRecord> surgeries;
    std::vector<std::string> recognized;
    OpKind op = OpKind::Step1;
};

namespace detail {

// Units that can be moved to the far side of a separating arc.
struct Unit {
    enum Kind { Cone, Torus, Mirror, Handle, Corner, Arc } kind;
    int index = 0;
};

inline std::vector<Unit> movable_units(const SeifertPiece& p, const std::string& r_name, int r_mirror) {
    std::vector<Unit> out;
    for (std::size_t i = 0; i < p.cones.size(); ++i) out.push_back({Unit::Cone, static_cast<int>(i)});
    for (std::size_t i = 0; i < p.bdry.size(); ++i)
        if (p.bdry[i].kind == EucKind::T2 && p.bdry[i].name != r_name) out.push_back({Unit::Torus, static_cast<int>(i)});
    for (int m = 0; m < p.mirrors(); ++m)
        if (m != r_mirror) out.push_back({Unit::Mirror, m});
    for (int h = 0; h < p.genus; ++h) out.push_back({Unit::Handle, h});
    return out;
}

// Move one unit of `p` into a new piece `q` (genus/cones/boundaries/reflectors).
inline void move_unit(SeifertPiece& p, SeifertPiece& q, const Unit& u) {
    switch (u.kind) {
        case Unit::Cone:
            q.cones.push_back(p.cones[u.index]);
            p.cones.erase(p.cones.begin() + u.index);
            break;
        case Unit::Torus:
            q.bdry.push_back(p.bdry[u.index]);
            p.bdry.erase(p.bdry.begin() + u.index);
            break;
        case Unit::Mirror: {
            int qm = q.mirrors();
            q.mirror_corners.push_back(p.mirror_corners[u.index]);
            for (auto it = p.bdry.begin(); it != p.bdry.end();) {
                if (it->mirror == u.index) {
                    Bdry b = *it;
                    b.mirror = qm;
                    q.bdry.push_back(b);
                    it = p.bdry.erase(it);
                } else {
                    ++it;
                }
            }
            p.mirror_corners.erase(p.mirror_corners.begin() + u.index);
            for (auto& b : p.bdry)
                if (b.mirror > u.index) --b.mirror;
            break;
        }
        case Unit::Handle:
            --p.genus;
            ++q.genus;
            break;
        case Unit::Corner: {
            auto& mc = p.mirror_corners[0];
            q.mirror_corners[0].push_back(mc[u.index]);
            mc.erase(mc.begin() + u.index);
            break;
        }
        case Unit::Arc: {
            Bdry b = p.bdry[u.index];
            b.mirror = 0;
            q.bdry.push_back(b);
            p.bdry.erase(p.bdry.begin() + u.index);
            break;
        }
    }
}

inline void replace_piece(GraphOrb& g, const std::string& id, std::vector<SeifertPiece> by) {
    int i = g.piece_index(id);
    g.pieces.erase(g.pieces.begin() + i);
    for (auto& p : by) tidy(p);
    g.pieces.insert(g.pieces.begin() + i, by.begin(), by.end());
}

}  // namespace detail

// Dispatch of the second operation on a gluing whose solid-toric side has meridian = fiber.
// Applies the first applicable of: quotient of S1xS2, step 5 case 6, steps 1-4, step 5.
inline StepOutcome second_op_fiber_meridian(const GraphOrb& in, int e) {
    using detail::Unit;
    const Gluing gl = in.gluings[e];
    if (!gl.meridian_fiber) throw InvariantError("gluing " + std::to_string(e) + " is not a fiber-meridian gluing");
    StepOutcome out;
    GraphOrb g = in;
    const SeifertPiece cap = g.pieces[g.piece_of(gl.end2)];
    SeifertPiece u = g.pieces[g.piece_of(gl.end1)];
    const Bdry R = *u.find(gl.end1);
    const int r = cap.solid_toric_order();
    const bool arc = R.kind == EucKind::S2222;
    const int comps_before = component_count(g);

    auto finish_split = [&](GraphOrb& gg, const TwoOrbSig& gamma) {
        out.surgeries.push_back(detail::record(gamma, gg, component_count(gg) > comps_before));
    };

    std::vector<const Bdry*> others;
    for (const auto& b : u.bdry)
        if (b.name != R.name) others.push_back(&b);

    // Prop A.23 shape: U over an annulus (or its reflector analogue) capped on both sides.
    if (u.genus == 0 && u.cones.empty() && others.size() == 1 && others[0]->kind == R.kind &&
        (arc ? (u.mirrors() == 1 && u.mirror_corners[0].empty()) : u.mirrors() == 0)) {
        int h = g.gluing_of(others[0]->name);
        if (h >= 0 && g.gluings[h].meridian_fiber && g.gluings[h].end1 == others[0]->name) {
            const SeifertPiece cap2 = g.pieces[g.piece_of(g.gluings[h].end2)];
            int r2 = cap2.solid_toric_order();
            int lo = std::min(r, r2), hi = std::max(r, r2);
            std::string tok = (lo == 1 && hi == 1) ? "S1xS2" : "S1xS2(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
            if (arc) tok = "(" + tok + ")//Z2";
            detail::erase_gluing_of(g, others[0]->name);
            detail::erase_gluing_of(g, R.name);
            detail::erase_piece(g, u.id);
            detail::erase_piece(g, cap.id);
            detail::erase_piece(g, cap2.id);
            out.recognized.push_back(tok);
            out.op = OpKind::QuotientS1xS2;
            out.graph = g;
            return out;
        }
    }

    if (!arc) {
        auto units = detail::movable_units(u, R.name, -1);
        if (units.size() >= 2) {
            // Step 1: separating arc from R to R.
            SeifertPiece a, b = u;
            a.id = u.id + "a";
            b.id = u.id + "b";
            detail::move_unit(b, a, units.front());
            Bdry r1 = R, r2 = R;
            r1.name = g.next_name("~");
            r2.name = g.next_name("~");
            a.bdry.push_back(r1);
            for (auto& x : b.bdry)
                if (x.name == R.name) x = r2;
            SeifertPiece c1 = detail::make_cap(g, r, false, cap.bdry[0].fiber);
            SeifertPiece c2 = detail::make_cap(g, r, false, cap.bdry[0].fiber);
            detail::erase_gluing_of(g, R.name);
            detail::erase_piece(g, cap.id);
            detail::replace_piece(g, u.id, {a, b});
            g.pieces.push_back(c1);
            g.pieces.push_back(c2);
            g.gluings.push_back({r1.name, c1.bdry[0].name, false, std::nullopt, true});
            g.gluings.push_back({r2.name, c2.bdry[0].name, false, std::nullopt, true});
            finish_split(g, detail::splitting_sphere({r, r}));
            out.op = OpKind::Step1;
            out.graph = g;
            return out;
        }
        if (u.genus >= 1) {
            // Step 2: nonseparating arc from R to R.
            SeifertPiece a = u;
            a.genus -= 1;
            Bdry r1 = R, r2 = R;
            r1.name = g.next_name("~");
            r2.name = g.next_name("~");
            a.bdry.erase(std::remove_if(a.bdry.begin(), a.bdry.end(), [&](auto& x) { return x.name == R.name; }),
                         a.bdry.end());
            a.bdry.push_back(r1);
            a.bdry.push_back(r2);
            SeifertPiece c1 = detail::make_cap(g, r, false, cap.bdry[0].fiber);
            SeifertPiece c2 = detail::make_cap(g, r, false, cap.bdry[0].fiber);
            detail::erase_gluing_of(g, R.name);
            detail::erase_piece(g, cap.id);
            detail::replace_piece(g, u.id, {a});
            g.pieces.push_back(c1);
            g.pieces.push_back(c2);
            g.gluings.push_back({r1.name, c1.bdry[0].name, false, std::nullopt, true});
            g.gluings.push_back({r2.name, c2.bdry[0].name, false, std::nullopt, true});
            out.surgeries.push_back(detail::record(detail::splitting_sphere({r, r}), g, false));
            out.op = OpKind::Step2;
            out.graph = g;
            return out;
        }
        if (u.mirrors() >= 1) {
            // Step 4: nonseparating arc from R to a reflector; R becomes an arc on it.
            SeifertPiece a = u;
            Bdry nr = R;
            nr.name = g.next_name("~");
            nr.kind = EucKind::S2222;
            nr.mirror = 0;
            for (auto& x : a.bdry)
                if (x.name == R.name) x = nr;
            SeifertPiece c = detail::make_cap(g, r, true, cap.bdry[0].fiber);
            detail::erase_gluing_of(g, R.name);
            detail::erase_piece(g, cap.id);
            detail::replace_piece(g, u.id, {a});
            g.pieces.push_back(c);
            g.gluings.push_back({nr.name, c.bdry[0].name, false, std::nullopt, true});
            out.surgeries.push_back(detail::record(detail::splitting_sphere({2, 2, r}), g, false));
            out.op = OpKind::Step4;
            out.graph = g;
            return out;
        }
        // Step 5 on a planar base without reflectors and at most one unit.
        if (units.empty()) {
            detail::erase_gluing_of(g, R.name);
            detail::erase_piece(g, u.id);
            detail::erase_piece(g, cap.id);
            out.recognized.push_back(detail::lens_token(r));
            out.op = OpKind::Step5Disc;
        } else if (units[0].kind == Unit::Cone) {
            detail::erase_gluing_of(g, R.name);
            detail::erase_piece(g, u.id);
            detail::erase_piece(g, cap.id);
            out.recognized.push_back(detail::torus_pair_token(r, u.cones[0]));
            out.op = OpKind::Step5DiscCone;
        } else {
            detail::erase_gluing_of(g, R.name);
            detail::replace_by_solid_torus(g, u.id, cap.id, *others[0], r);
            out.recognized.push_back(SolidToricToken{false, r}.name());
            out.op = OpKind::Step5Annulus;
        }
        out.graph = g;
        return out;
    }

    // R is an arc on reflector component R.mirror.
    const int m = R.mirror;
    auto units = detail::movable_units(u, R.name, m);
    const bool mixed_annulus = u.genus == 0 && u.cones.empty() && u.mirrors() == 1 && u.mirror_corners[0].empty() &&
                               u.arcs_on(0) == 1 && others.size() == 1 && others[0]->kind == EucKind::T2;
    if (mixed_annulus) {
        Bdry keep = *others[0];
        detail::erase_gluing_of(g, R.name);
        detail::replace_by_solid_torus(g, u.id, cap.id, keep, r);
        out.recognized.push_back(detail::dihedral_token(r));
        out.surgeries.push_back(detail::record(detail::splitting_sphere({r, r}), g, true));
        out.op = OpKind::Step5MixedAnnulus;
        out.graph = g;
        return out;
    }
    if (!units.empty()) {
        // Step 1 with R an arc: the far side gets a pure circle capped by S1xD2(r).
        SeifertPiece a, b = u;
        a.id = u.id + "a";
        b.id = u.id + "b";
        detail::move_unit(b, a, units.front());
        Bdry r1 = R, r2 = R;
        r1.name = g.next_name("~");
        r1.kind = EucKind::T2;
        r1.mirror = -1;
        r2.name = g.next_name("~");
        a.bdry.push_back(r1);
        for (auto& x : b.bdry)
            if (x.name == R.name) {
                int mm = x.mirror;
                x = r2;
                x.mirror = mm;
            }
        SeifertPiece c1 = detail::make_cap(g, r, false, cap.bdry[0].fiber);
        SeifertPiece c2 = detail::make_cap(g, r, true, cap.bdry[0].fiber);
        detail::erase_gluing_of(g, R.name);
        detail::erase_piece(g, cap.id);
        detail::replace_piece(g, u.id, {a, b});
        g.pieces.push_back(c1);
        g.pieces.push_back(c2);
        g.gluings.push_back({r1.name, c1.bdry[0].name, false, std::nullopt, true});
        g.gluings.push_back({r2.name, c2.bdry[0].name, false, std::nullopt, true});
        finish_split(g, detail::splitting_sphere({r, r}));
        out.op = OpKind::Step1;
        out.graph = g;
        return out;
    }
    // Disc with a single reflector circle carrying R, corners and further arcs.
    std::vector<Unit> on_mirror;
    for (std::size_t i = 0; i < u.mirror_corners[0].size(); ++i) on_mirror.push_back({Unit::Corner, static_cast<int>(i)});
    for (std::size_t i = 0; i < u.bdry.size(); ++i)
        if (u.bdry[i].name != R.name) on_mirror.push_back({Unit::Arc, static_cast<int>(i)});
    if (on_mirror.size() >= 2) {
        // Step 3: separating arc from R to the reflector.
        SeifertPiece a, b = u;
        a.id = u.id + "a";
        b.id = u.id + "b";
        a.mirror_corners.push_back({});
        detail::move_unit(b, a, on_mirror.front());
        Bdry r1 = R, r2 = R;
        r1.name = g.next_name("~");
        r1.mirror = 0;
        r2.name = g.next_name("~");
        a.bdry.push_back(r1);
        for (auto& x : b.bdry)
            if (x.name == R.name) x = r2;
        SeifertPiece c1 = detail::make_cap(g, r, true, cap.bdry[0].fiber);
        SeifertPiece c2 = detail::make_cap(g, r, true, cap.bdry[0].fiber);
        detail::erase_gluing_of(g, R.name);
        detail::erase_piece(g, cap.id);
        detail::replace_piece(g, u.id, {a, b});
        g.pieces.push_back(c1);
        g.pieces.push_back(c2);
        g.gluings.push_back({r1.name, c1.bdry[0].name, false, std::nullopt, true});
        g.gluings.push_back({r2.name, c2.bdry[0].name, false, std::nullopt, true});
        finish_split(g, detail::splitting_sphere({2, 2, r}));
        out.op = OpKind::Step3;
        out.graph = g;
        return out;
    }
    if (on_mirror.empty()) {
        detail::erase_gluing_of(g, R.name);
        detail::erase_piece(g, u.id);
        detail::erase_piece(g, cap.id);
        out.recognized.push_back(detail::dihedral_token(r));
        out.op = OpKind::Step5Reflector;
    } else if (on_mirror[0].kind == Unit::Corner) {
        detail::erase_gluing_of(g, R.name);
        detail::erase_piece(g, u.id);
        detail::erase_piece(g, cap.id);
        out.recognized.push_back(detail::dihedral_pair_token(r, u.mirror_corners[0][0]));
        out.op = OpKind::Step5ReflectorCorner;
    } else {
        detail::erase_gluing_of(g, R.name);
        detail::replace_by_solid_torus(g, u.id, cap.id, *others[0], r);
        out.recognized.push_back(SolidToricToken{true, r}.name());
        out.op = OpKind::Step5Annulus;
    }
    out.graph = g;
    return out;
}

// Explicit-kind entry point: fails unless the requested step is the one the base admits.
inline StepOutcome step_cut(const GraphOrb& g, int e, StepKind kind) {
    auto res = second_op_fiber_meridian(g, e);
    OpKind want = kind == StepKind::Separating         ? OpKind::Step1
                  : kind == StepKind::Nonseparating    ? OpKind::Step2
                  : kind == StepKind::ReflectorSeparating ? OpKind::Step3
                                                           : OpKind::Step4;
    if (res.op != want)
        throw InvariantError(std::string("step_cut: base admits ") + to_string(res.op) + ", not " + to_string(want));
    return res;
}

// Terminal-base table of step 5 in isolation: base described by a piece whose boundary index 0 is R.
struct Step5Result {
    std::optional<std::string> token;
    std::optional<std::string> residual;  // solid-toric piece that replaces U u cap
    OpKind op;
};

inline Step5Result step5_recognize(const TwoOrbSig& base, int r) {
    validate(base);
    if (r < 1) throw InvariantError("step5_recognize: r must be >= 1");
    if (base.reflector) {
        if (base.reflector->kind == Reflector::Z2) return {detail::dihedral_token(r), std::nullopt, OpKind::Step5Reflector};
        return {detail::dihedral_pair_token(r, base.reflector->k), std::nullopt, OpKind::Step5ReflectorCorner};
    }
    if (base.base_genus == 0 && base.boundary_circles == 1 && base.cone_orders.empty())
        return {detail::lens_token(r), std::nullopt, OpKind::Step5Disc};
    if (base.base_genus == 0 && base.boundary_circles == 1 && base.cone_orders.size() == 1)
        return {detail::torus_pair_token(r, base.cone_orders[0]), std::nullopt, OpKind::Step5DiscCone};
    if (base.base_genus == 0 && base.boundary_circles == 2 && base.cone_orders.empty())
        return {std::nullopt, SolidToricToken{false, r}.name(), OpKind::Step5Annulus};
    throw InvariantError("step5_recognize: base " + print_sig(base) + " is not terminal");
}

// Mixed annulus: one orbifold-boundary circle, one circle made of R and a reflector arc.
inline Step5Result step5_recognize_mixed_annulus(int r) {
    return {detail::dihedral_token(r), SolidToricToken{false, r}.name(), OpKind::Step5MixedAnnulus};
}

inline NormalizationResult normalize(const GraphOrb& input, int max_ops = 100000) {
    validate(input);
    NormalizationResult res;
    GraphOrb g = input;
    for (int it = 0;; ++it) {
        if (it > max_ops) throw NumericError("normalize: operation budget exhausted");
        TraceEntry t;
        t.gluings_before = static_cast<int>(g.gluings.size());
        t.pieces_before = static_cast<int>(g.pieces.size());
        int e = -1;
        for (std::size_t i = 0; i < g.gluings.size() && e < 0; ++i)
            if (g.gluings[i].isotopic) e = static_cast<int>(i);
        if (e >= 0) {
            t.detail = g.gluings[e].end1 + "~" + g.gluings[e].end2;
            g = op1_merge(g, e);
            t.op = OpKind::Merge;
        } else {
            for (std::size_t i = 0; i < g.gluings.size() && e < 0; ++i)
                if (g.gluings[i].has_meridian_data()) e = static_cast<int>(i);
            if (e < 0) break;
            t.detail = g.gluings[e].end1 + "~" + g.gluings[e].end2;
            if (g.gluings[e].u) {
                t.detail += " u=" + std::to_string(*g.gluings[e].u);
                g = op2_dehn_merge(g, e);
                t.op = OpKind::DehnMerge;
            } else {
                auto so = second_op_fiber_meridian(g, e);
                g = std::move(so.graph);
                t.op = so.op;
                for (auto& s : so.surgeries) res.surgeries.push_back(s);
                for (auto& s : so.recognized) {
                    res.recognized.push_back(s);
                    t.detail += " -> " + s;
                }
            }
        }
        t.gluing = e;
        t.gluings_after = static_cast<int>(g.gluings.size());
        t.pieces_after = static_cast<int>(g.pieces.size());
        res.trace.push_back(t);
    }
    res.strong = g;
    return res;
}

struct CompressibleSplit {
    SeifertPiece o0;
    NormalizationResult rest;
};

// Compressible boundary c: the component containing c normalizes to a solid-toric O0 with
// boundary exactly c, plus strong graph orbifolds joined to it by 0-surgeries.
inline CompressibleSplit compressible_boundary_split(const GraphOrb& g, const std::string& c) {
    validate(g);
    int pi = g.piece_of(c);
    if (pi < 0) throw InvariantError("compressible_boundary_split: unknown boundary '" + c + "'");
    if (g.gluing_of(c) >= 0) throw InvariantError("compressible_boundary_split: '" + c + "' is not a free boundary");
    auto lab = component_labels(g);
    std::set<int> comp;
    for (std::size_t i = 0; i < g.pieces.size(); ++i)
        if (lab[i] == lab[pi]) comp.insert(static_cast<int>(i));
    GraphOrb sub = restrict_to(g, comp);
    auto nr = normalize(sub);
    int qi = nr.strong.piece_of(c);
    if (qi < 0) throw InvariantError("compressible_boundary_split: boundary '" + c + "' vanished during normalization");
    const SeifertPiece& q = nr.strong.pieces[qi];
    if (!q.solid_toric() || nr.strong.gluing_of(c) >= 0)
        throw InvariantError("compressible_boundary_split: no compressibility certificate for '" + c +
                             "' (its Seifert piece is not solid-toric)");
    CompressibleSplit out;
    out.o0 = q;
    out.rest = nr;
    detail::erase_piece(out.rest.strong, q.id);
    return out;
}

// ---- text format ----

inline std::string print_base(const SeifertPiece& p) {
    const int t2 = p.t2_count();
    const auto& c = p.cones;
    std::string cones = c.empty() ? "" : "(" + join_ints(c) + ")";
    if (p.mirrors() == 0) {
        if (p.genus == 0 && t2 == 0) return "S2" + cones;
        if (p.genus == 0 && t2 == 1) return "D2" + cones;
        if (p.genus == 0 && t2 == 2) return "S1xI" + cones;
        if (p.genus == 1 && t2 == 0) return "T2" + cones;
    }
    if (p.genus == 0 && t2 == 0 && c.empty() && p.mirrors() == 1 && p.arcs_on(0) == 1) {
        if (p.mirror_corners[0].empty()) return "D2//Z2";
        if (p.mirror_corners[0].size() == 1) return "D2//D" + std::to_string(p.mirror_corners[0][0]);
    }
    std::string s = "F" + std::to_string(p.genus) + "," + std::to_string(t2) + cones;
    if (p.mirrors()) {
        s += "[";
        for (int m = 0; m < p.mirrors(); ++m) {
            if (m) s += ";";
            s += std::to_string(p.arcs_on(m)) + ":" + join_ints(p.mirror_corners[m]);
        }
        s += "]";
    }
    return s;
}

struct BaseShape {
    int genus = 0, t2 = 0;
    std::vector<int> cones;
    std::vector<std::pair<int, std::vector<int>>> mirrors;  // (arcs, corners)
};

inline BaseShape parse_base(const std::string& t) {
    BaseShape b;
    if (t == "D2//Z2") {
        b.mirrors.push_back({1, {}});
        return b;
    }
    if (t.rfind("D2//D", 0) == 0) {
        int k = parse_int(t.substr(5), "corner order");
        if (k < 2) throw ParseError("corner order must be >= 2");
        b.mirrors.push_back({1, {k}});
        return b;
    }
    std::string rest = t, mir;
    auto lb = t.find('[');
    if (lb != std::string::npos) {
        if (t.back() != ']') throw ParseError("unbalanced '[' in base '" + t + "'");
        mir = t.substr(lb + 1, t.size() - lb - 2);
        rest = t.substr(0, lb);
    }
    std::string head = rest;
    auto lp = rest.find('(');
    if (lp != std::string::npos) {
        if (rest.back() != ')') throw ParseError("unbalanced '(' in base '" + t + "'");
        head = rest.substr(0, lp);
        b.cones = parse_int_list(rest.substr(lp + 1, rest.size() - lp - 2), "cone order");
        for (int k : b.cones)
            if (k < 2) throw ParseError("cone order must be >= 2");
    }
    if (head == "S2") {
    } else if (head == "D2") {
        b.t2 = 1;
    } else if (head == "S1xI") {
        b.t2 = 2;
    } else if (head == "T2") {
        b.genus = 1;
    } else if (head.size() > 1 && head[0] == 'F') {
        auto parts = split(head.substr(1), ',');
        if (parts.size() != 2) throw ParseError("general base must read F<genus>,<circles>");
        b.genus = parse_int(parts[0], "genus");
        b.t2 = parse_int(parts[1], "circle count");
        if (b.genus < 0 || b.t2 < 0) throw ParseError("negative genus or circle count");
    } else {
        throw ParseError("unknown base '" + t + "'");
    }
    if (!mir.empty()) {
        for (auto& comp : split(mir, ';')) {
            auto colon = comp.find(':');
            if (colon == std::string::npos) throw ParseError("reflector component must read <arcs>:<corners>");
            int arcs = parse_int(comp.substr(0, colon), "arc count");
            auto corners = parse_int_list(comp.substr(colon + 1), "corner order");
            for (int k : corners)
                if (k < 2) throw ParseError("corner order must be >= 2");
            if (arcs < 0) throw ParseError("negative arc count");
            b.mirrors.push_back({arcs, corners});
        }
    }
    return b;
}

inline std::string print_graph(const GraphOrb& g) {
    std::string out;
    std::map<std::string, std::string> label;
    for (const auto& p : g.pieces) {
        out += "piece " + p.id + " base " + print_base(p) + " fibers";
        for (int k : p.cones) out += " " + std::to_string(k);
        out += "\n";
        for (std::size_t i = 0; i < p.bdry.size(); ++i) {
            const auto& b = p.bdry[i];
            std::string ref = p.id + "." + std::to_string(i);
            label[b.name] = ref;
            out += "bdry " + ref + " " + to_string(b.kind) + " slope " + std::to_string(b.fiber.a) + "/" +
                   std::to_string(b.fiber.b) + "\n";
        }
    }
    for (const auto& gl : g.gluings) {
        out += "glue " + label[gl.end1] + " " + label[gl.end2] + " isotopic=" + (gl.isotopic ? "true" : "false");
        if (gl.u) out += " u=" + std::to_string(*gl.u);
        if (gl.meridian_fiber) out += " meridian_fiber=true";
        out += "\n";
    }
    return out;
}

inline bool parse_bool(const std::string& v, const char* what) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ParseError(std::string(what) + " must be true or false");
}

inline GraphOrb parse_graph(const std::string& text) {
    GraphOrb g;
    std::map<std::string, BaseShape> shapes;
    std::map<std::string, std::vector<std::pair<int, Bdry>>> bdrys;
    std::vector<std::string> order;
    struct PendingGlue {
        std::string e1, e2;
        bool iso;
        std::optional<int> u;
        bool mf;
        int line;
    };
    std::vector<PendingGlue> glues;
    std::istringstream is(text);
    std::string line;
    int ln = 0;
    auto split_ref = [&](const std::string& ref) {
        auto dot = ref.rfind('.');
        if (dot == std::string::npos) throw ParseError("boundary reference must read <piece>.<index>");
        return std::pair{ref.substr(0, dot), parse_int(ref.substr(dot + 1), "boundary index")};
    };
    while (std::getline(is, line)) {
        ++ln;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto tok = tokenize(line);
        if (tok.empty()) continue;
        try {
            if (tok[0] == "piece") {
                if (tok.size() < 5 || tok[2] != "base" || tok[4] != "fibers")
                    throw ParseError("expected 'piece <id> base <sig> fibers <k...>'");
                if (shapes.count(tok[1])) throw ParseError("duplicate piece '" + tok[1] + "'");
                BaseShape b = parse_base(tok[3]);
                std::vector<int> fib;
                for (std::size_t i = 5; i < tok.size(); ++i) fib.push_back(parse_int(tok[i], "fiber order"));
                std::sort(fib.begin(), fib.end());
                auto cones = b.cones;
                std::sort(cones.begin(), cones.end());
                if (fib != cones) throw ParseError("fibers list disagrees with the cone points of base " + tok[3]);
                shapes[tok[1]] = b;
                order.push_back(tok[1]);
            } else if (tok[0] == "bdry") {
                if (tok.size() != 5 || tok[3] != "slope") throw ParseError("expected 'bdry <piece>.<i> <T2|S2222> slope <a>/<b>'");
                auto [pid, idx] = split_ref(tok[1]);
                if (!shapes.count(pid)) throw ParseError("bdry for unknown piece '" + pid + "'");
                Bdry b;
                b.name = tok[1];
                if (tok[2] == "T2") b.kind = EucKind::T2;
                else if (tok[2] == "S2222") b.kind = EucKind::S2222;
                else throw ParseError("boundary tag must be T2 or S2222");
                auto ab = split(tok[4], '/');
                if (ab.size() != 2) throw ParseError("slope must read <a>/<b>");
                try {
                    b.fiber = make_slope(parse_int(ab[0], "slope"), parse_int(ab[1], "slope"));
                } catch (const InvariantError& e) {
                    throw ParseError(e.what());
                }
                bdrys[pid].push_back({idx, b});
            } else if (tok[0] == "glue") {
                if (tok.size() < 4) throw ParseError("expected 'glue <p1>.<i> <p2>.<j> isotopic=<bool> ...'");
                PendingGlue pg{tok[1], tok[2], false, std::nullopt, false, ln};
                bool seen_iso = false;
                for (std::size_t i = 3; i < tok.size(); ++i) {
                    auto eq = tok[i].find('=');
                    if (eq == std::string::npos) throw ParseError("expected key=value, got '" + tok[i] + "'");
                    std::string k = tok[i].substr(0, eq), v = tok[i].substr(eq + 1);
                    if (k == "isotopic") {
                        pg.iso = parse_bool(v, "isotopic");
                        seen_iso = true;
                    } else if (k == "u") {
                        pg.u = parse_int(v, "u");
                        if (*pg.u < 1) throw ParseError("u must be >= 1");
                    } else if (k == "meridian_fiber") {
                        pg.mf = parse_bool(v, "meridian_fiber");
                    } else {
                        throw ParseError("unknown gluing key '" + k + "'");
                    }
                }
                if (!seen_iso) throw ParseError("gluing requires isotopic=<bool>");
                if (pg.iso && pg.u) throw ParseError("u is forbidden when isotopic=true");
                if (pg.iso && pg.mf) throw ParseError("meridian_fiber is forbidden when isotopic=true");
                glues.push_back(pg);
            } else {
                throw ParseError("unrecognized line '" + trim(line) + "'");
            }
        } catch (const ParseError& e) {
            if (e.line) throw;
            throw ParseError(e.what(), ln, 1);
        }
    }
    for (const auto& pid : order) {
        const BaseShape& s = shapes[pid];
        SeifertPiece p;
        p.id = pid;
        p.genus = s.genus;
        p.cones = s.cones;
        std::vector<std::pair<EucKind, int>> expect;
        for (int i = 0; i < s.t2; ++i) expect.push_back({EucKind::T2, -1});
        for (std::size_t m = 0; m < s.mirrors.size(); ++m) {
            p.mirror_corners.push_back(s.mirrors[m].second);
            for (int a = 0; a < s.mirrors[m].first; ++a) expect.push_back({EucKind::S2222, static_cast<int>(m)});
        }
        auto bl = bdrys[pid];
        std::sort(bl.begin(), bl.end(), [](auto& x, auto& y) { return x.first < y.first; });
        if (bl.size() != expect.size())
            throw ParseError("piece '" + pid + "' base has " + std::to_string(expect.size()) + " boundary components, got " +
                             std::to_string(bl.size()) + " bdry lines");
        for (std::size_t i = 0; i < bl.size(); ++i) {
            if (bl[i].first != static_cast<int>(i)) throw ParseError("piece '" + pid + "' boundary indices must be 0..n-1");
            if (bl[i].second.kind != expect[i].first)
                throw ParseError("piece '" + pid + "' boundary " + std::to_string(i) + " must be " + to_string(expect[i].first));
            Bdry b = bl[i].second;
            b.mirror = expect[i].second;
            p.bdry.push_back(b);
        }
        tidy(p);
        g.pieces.push_back(p);
    }
    for (const auto& pg : glues) {
        try {
            split_ref(pg.e1);
            split_ref(pg.e2);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), pg.line, 1);
        }
        g.gluings.push_back({pg.e1, pg.e2, pg.iso, pg.u, pg.mf});
    }
    validate(g);
    return g;
}

inline std::string print_report(const NormalizationResult& r) {
    std::string out = "strong:\n";
    std::string body = print_graph(r.strong);
    out += body.empty() ? "  (empty)\n" : body;
    out += "surgeries:\n";
    for (const auto& s : r.surgeries)
        out += "  " + std::string(s.direction == SurgeryRecord::Split ? "split" : "join") + " along " +
               print_sig(s.gamma) + " sites " + s.site_ids.first + "," + s.site_ids.second + "\n";
    out += "recognized:\n";
    for (const auto& s : r.recognized) out += "  " + s + "\n";
    out += "trace:\n";
    for (const auto& t : r.trace)
        out += "  " + std::string(to_string(t.op)) + " gluing " + std::to_string(t.gluing) + " " + t.detail +
               " gluings " + std::to_string(t.gluings_before) + "->" + std::to_string(t.gluings_after) + "\n";
    return out;
}

}  // namespace orbiflow
