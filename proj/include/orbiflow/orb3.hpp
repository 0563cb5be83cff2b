#pragma once

#include "orbiflow/orb2.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace orbiflow {

inline bool validate_vertex(int p, int q, int r) {
    if (p < 2 || q < 2 || r < 2) throw InvariantError("vertex labels must be >= 2");
    return Rational(1, p) + Rational(1, q) + Rational(1, r) > 1;
}

inline TwoOrbSig vertex_link(int p, int q, int r) {
    if (!validate_vertex(p, q, r))
        throw InvariantError("vertex (" + std::to_string(p) + "," + std::to_string(q) + "," + std::to_string(r) +
                             ") violates 1/p+1/q+1/r > 1");
    return sphere({p, q, r});
}

// ---- discal and solid-toric pieces ----

struct DiscalToken {
    std::vector<int> labels;  // empty, {k,k}, {2,2,k}, {2,3,3}, {2,3,4}, {2,3,5}
    auto operator<=>(const DiscalToken&) const = default;
    std::string name() const { return labels.empty() ? "D3" : "D3(" + join_ints(labels) + ")"; }
    TwoOrbSig boundary() const { return sphere(labels); }
};

inline DiscalToken discal_fill(const TwoOrbSig& s) {
    if (!in_spherical_list(s)) throw InvariantError("discal_fill: " + print_sig(s) + " is not spherical");
    return DiscalToken{s.cone_orders};
}

struct SolidToricToken {
    bool z2 = false;  // S1 x_Z2 D2 family
    int k = 1;        // label of the core curve or of the joining arc; 1 = none
    auto operator<=>(const SolidToricToken&) const = default;
    std::string name() const {
        std::string s = z2 ? "S1xZ2D2" : "S1xD2";
        if (k > 1) s += "(" + std::to_string(k) + ")";
        return s;
    }
    TwoOrbSig boundary() const { return z2 ? sphere({2, 2, 2, 2}) : make_sig(1, {}); }
};

// ---- singular graph ----

struct Edge {
    int id = 0;
    int label = 2;
    int a = -1, b = -1;  // vertex ids; both -1 for a vertex-free circle
    int component = 0;   // meaningful for circles; otherwise follows the vertices
    bool circle() const { return a < 0; }
    auto operator<=>(const Edge&) const = default;
};

struct Vertex {
    int id = 0;
    std::array<int, 3> edges{};  // incident edge ids, a loop appears twice
    int component = 0;
    auto operator<=>(const Vertex&) const = default;
};

enum class SiteKind { Point, OnEdge, AtVertex };

struct DiscSite {
    std::string id;
    SiteKind kind = SiteKind::Point;
    int where = 0;  // component, edge id or vertex id
    int pos = 0;    // ordering along an edge
    auto operator<=>(const DiscSite&) const = default;
};

struct ThreeOrbDesc {
    std::vector<std::string> components{"S3"};
    std::vector<Edge> edges;
    std::vector<Vertex> vertices;
    std::vector<DiscSite> sites;
    std::vector<TwoOrbSig> boundary;
    auto operator<=>(const ThreeOrbDesc&) const = default;

    const Edge& edge(int id) const {
        for (const auto& e : edges)
            if (e.id == id) return e;
        throw InvariantError("no edge " + std::to_string(id));
    }
    const Vertex& vertex(int id) const {
        for (const auto& v : vertices)
            if (v.id == id) return v;
        throw InvariantError("no vertex " + std::to_string(id));
    }
    const DiscSite& site(const std::string& id) const {
        for (const auto& s : sites)
            if (s.id == id) return s;
        throw InvariantError("no disc site '" + id + "'");
    }
};

// Underlying-space tokens: connected sum with S3 is the identity.
inline std::string connected_sum_token(const std::string& a, const std::string& b) {
    if (a == "S3") return b;
    if (b == "S3") return a;
    return a + "#" + b;
}

inline void canonicalize(ThreeOrbDesc& d) {
    for (auto& e : d.edges)
        if (!e.circle() && e.a > e.b) std::swap(e.a, e.b);
    for (auto& v : d.vertices) std::sort(v.edges.begin(), v.edges.end());
    std::sort(d.edges.begin(), d.edges.end(), [](auto& x, auto& y) { return x.id < y.id; });
    std::sort(d.vertices.begin(), d.vertices.end(), [](auto& x, auto& y) { return x.id < y.id; });
    std::sort(d.sites.begin(), d.sites.end(), [](auto& x, auto& y) { return x.id < y.id; });
    std::map<int, int> vcomp;
    for (auto& v : d.vertices) vcomp[v.id] = v.component;
    for (auto& e : d.edges)
        if (!e.circle() && vcomp.count(e.a)) e.component = vcomp[e.a];
}

inline int component_of_site(const ThreeOrbDesc& d, const DiscSite& s) {
    switch (s.kind) {
        case SiteKind::Point: return s.where;
        case SiteKind::OnEdge: return d.edge(s.where).component;
        case SiteKind::AtVertex: return d.vertex(s.where).component;
    }
    return 0;
}

inline std::vector<int> vertex_labels(const ThreeOrbDesc& d, const Vertex& v) {
    std::vector<int> l;
    for (int e : v.edges) l.push_back(d.edge(e).label);
    std::sort(l.begin(), l.end());
    return l;
}

inline TwoOrbSig site_boundary(const ThreeOrbDesc& d, const DiscSite& s) {
    switch (s.kind) {
        case SiteKind::Point: return sphere();
        case SiteKind::OnEdge: {
            int k = d.edge(s.where).label;
            return sphere({k, k});
        }
        case SiteKind::AtVertex: return sphere(vertex_labels(d, d.vertex(s.where)));
    }
    return sphere();
}

// Checked constructor semantics: throws on any violated invariant.
inline void validate(const ThreeOrbDesc& d) {
    const int nc = static_cast<int>(d.components.size());
    if (nc == 0) throw InvariantError("description has no components");
    std::set<int> eids, vids;
    std::set<std::string> sids;
    for (const auto& e : d.edges) {
        if (!eids.insert(e.id).second) throw InvariantError("duplicate edge id " + std::to_string(e.id));
        if (e.label < 2) throw InvariantError("edge " + std::to_string(e.id) + " label < 2");
        if ((e.a < 0) != (e.b < 0)) throw InvariantError("edge " + std::to_string(e.id) + " has one endpoint");
        if (e.component < 0 || e.component >= nc) throw InvariantError("edge component out of range");
    }
    for (const auto& v : d.vertices)
        if (!vids.insert(v.id).second) throw InvariantError("duplicate vertex id " + std::to_string(v.id));
    std::map<int, int> degree;
    for (const auto& e : d.edges) {
        if (e.circle()) continue;
        for (int x : {e.a, e.b}) {
            if (!vids.count(x)) throw InvariantError("edge " + std::to_string(e.id) + " ends at unknown vertex");
            ++degree[x];
        }
    }
    for (const auto& v : d.vertices) {
        if (v.component < 0 || v.component >= nc) throw InvariantError("vertex component out of range");
        if (degree[v.id] != 3)
            throw InvariantError("vertex " + std::to_string(v.id) + " has degree " + std::to_string(degree[v.id]));
        std::map<int, int> listed, actual;
        for (int e : v.edges) ++listed[e];
        for (const auto& e : d.edges) {
            if (e.a == v.id) ++actual[e.id];
            if (e.b == v.id) ++actual[e.id];
        }
        if (listed != actual) throw InvariantError("vertex " + std::to_string(v.id) + " incidence list mismatch");
        for (const auto& e : d.edges)
            if ((e.a == v.id || e.b == v.id) && e.component != v.component)
                throw InvariantError("edge " + std::to_string(e.id) + " crosses components");
        auto l = vertex_labels(d, v);
        if (!validate_vertex(l[0], l[1], l[2]))
            throw InvariantError("vertex " + std::to_string(v.id) + " labels (" + join_ints(l) +
                                 ") violate the vertex condition 1/p+1/q+1/r > 1");
    }
    for (const auto& s : d.sites) {
        if (!sids.insert(s.id).second) throw InvariantError("duplicate site id '" + s.id + "'");
        if (s.kind == SiteKind::Point && (s.where < 0 || s.where >= nc))
            throw InvariantError("site '" + s.id + "' component out of range");
        if (s.kind == SiteKind::OnEdge && !eids.count(s.where))
            throw InvariantError("site '" + s.id + "' on unknown edge");
        if (s.kind == SiteKind::AtVertex && !vids.count(s.where))
            throw InvariantError("site '" + s.id + "' at unknown vertex");
    }
    for (const auto& b : d.boundary) {
        orbiflow::validate(b);
        if (b.reflector) throw InvariantError("boundary 2-orbifolds must be orientable");
    }
}

inline std::vector<int> edge_label_multiset(const ThreeOrbDesc& d) {
    std::vector<int> out;
    for (const auto& e : d.edges) out.push_back(e.label);
    std::sort(out.begin(), out.end());
    return out;
}

inline std::set<int> edge_label_set(const ThreeOrbDesc& d) {
    auto m = edge_label_multiset(d);
    return {m.begin(), m.end()};
}

// ---- 0-surgery ----

struct SurgeryRecord {
    enum Direction { Split, Join };
    TwoOrbSig gamma;
    std::pair<std::string, std::string> site_ids;
    Direction direction = Join;

    // Undo data for the inverse operation.
    std::vector<std::string> old_components;
    std::vector<int> component_map;  // old component index -> new index
    std::vector<Edge> removed_edges;
    std::vector<Vertex> removed_vertices;
    std::vector<DiscSite> removed_sites;
    std::vector<DiscSite> moved_sites;  // sites re-hosted onto new edges, pre-surgery state
    std::vector<int> added_edges;
    std::map<int, int> vertex_comp;  // surviving vertex -> old component
    std::map<int, int> edge_comp;    // surviving edge -> old component
    std::map<std::string, int> point_site_comp;
};

namespace detail {

// An edge fragment with each end either a vertex (>= 0) or a port (site slot).
struct Port {
    int site = -1, slot = -1;
    bool valid() const { return site >= 0; }
    bool operator==(const Port&) const = default;
};

struct Fragment {
    int origin = 0;  // original edge id
    int label = 2;
    int comp = 0;
    int end_v[2] = {-1, -1};
    Port end_p[2];
    int lo_pos = 0, hi_pos = 0;  // positions covered, for re-hosting sites
};

}  // namespace detail

inline std::pair<ThreeOrbDesc, SurgeryRecord> zero_surgery(const ThreeOrbDesc& orb, const std::string& d1,
                                                           const std::string& d2) {
    using detail::Fragment;
    using detail::Port;
    validate(orb);
    if (d1 == d2) throw InvariantError("zero_surgery: overlapping sites '" + d1 + "'");
    const DiscSite s[2] = {orb.site(d1), orb.site(d2)};
    TwoOrbSig g0 = site_boundary(orb, s[0]), g1 = site_boundary(orb, s[1]);
    if (g0 != g1)
        throw InvariantError("zero_surgery: site boundaries differ (" + print_sig(g0) + " vs " + print_sig(g1) + ")");
    if (s[0].kind == SiteKind::AtVertex && s[0].where == s[1].where)
        throw InvariantError("zero_surgery: overlapping sites at one vertex");
    if (s[0].kind == SiteKind::OnEdge && s[0].where == s[1].where && s[0].pos == s[1].pos)
        throw InvariantError("zero_surgery: overlapping sites on one edge");

    SurgeryRecord rec;
    rec.gamma = g0;
    rec.site_ids = {d1, d2};
    rec.direction = SurgeryRecord::Join;
    rec.old_components = orb.components;

    ThreeOrbDesc out = orb;
    int c0 = component_of_site(orb, s[0]), c1 = component_of_site(orb, s[1]);
    const int nc = static_cast<int>(orb.components.size());
    rec.component_map.resize(nc);
    for (int i = 0; i < nc; ++i) rec.component_map[i] = i;
    if (c0 != c1) {
        int keep = std::min(c0, c1), drop = std::max(c0, c1);
        out.components[keep] = connected_sum_token(orb.components[keep], orb.components[drop]);
        out.components.erase(out.components.begin() + drop);
        for (int i = 0; i < nc; ++i) rec.component_map[i] = i == drop ? keep : (i > drop ? i - 1 : i);
    } else {
        out.components[c0] = connected_sum_token(orb.components[c0], "S1xS2");
    }
    auto remap = [&](int c) { return rec.component_map[c]; };
    for (const auto& v : orb.vertices) rec.vertex_comp[v.id] = v.component;
    for (const auto& e : orb.edges) rec.edge_comp[e.id] = e.component;
    for (const auto& st : orb.sites)
        if (st.kind == SiteKind::Point) rec.point_site_comp[st.id] = st.where;

    // Collect fragments: untouched edges stay, cut edges become fragments ending at ports.
    std::vector<Fragment> frags;
    std::set<int> cut_edges, cut_vertices;
    for (int i = 0; i < 2; ++i) {
        if (s[i].kind == SiteKind::OnEdge) cut_edges.insert(s[i].where);
        if (s[i].kind == SiteKind::AtVertex) cut_vertices.insert(s[i].where);
    }
    for (int v : cut_vertices)
        for (int e : orb.vertex(v).edges) cut_edges.insert(e);

    // Slot assignment at vertex sites: incident edge ends sorted by (label, edge id, end).
    std::map<std::pair<int, int>, int> vertex_slot;  // (edge id, end index) -> slot, per site
    std::map<std::pair<int, int>, int> vertex_site;  // (edge id, end index) -> site index
    for (int i = 0; i < 2; ++i) {
        if (s[i].kind != SiteKind::AtVertex) continue;
        std::vector<std::tuple<int, int, int>> ends;
        for (const auto& e : orb.edges) {
            if (e.a == s[i].where) ends.emplace_back(e.label, e.id, 0);
            if (e.b == s[i].where) ends.emplace_back(e.label, e.id, 1);
        }
        std::sort(ends.begin(), ends.end());
        for (int k = 0; k < 3; ++k) {
            vertex_slot[{std::get<1>(ends[k]), std::get<2>(ends[k])}] = k;
            vertex_site[{std::get<1>(ends[k]), std::get<2>(ends[k])}] = i;
        }
    }

    for (const auto& e : orb.edges) {
        if (!cut_edges.count(e.id)) continue;
        rec.removed_edges.push_back(e);
        // cuts along this edge: (pos, site index)
        std::vector<std::pair<int, int>> cuts;
        for (int i = 0; i < 2; ++i)
            if (s[i].kind == SiteKind::OnEdge && s[i].where == e.id) cuts.emplace_back(s[i].pos, i);
        std::sort(cuts.begin(), cuts.end());
        auto end_port = [&](int endi) -> std::pair<int, Port> {
            int v = endi == 0 ? e.a : e.b;
            auto it = vertex_site.find({e.id, endi});
            if (it != vertex_site.end()) return {-1, Port{it->second, vertex_slot[{e.id, endi}]}};
            return {v, Port{}};
        };
        auto [va, pa] = end_port(0);
        auto [vb, pb] = end_port(1);
        // slot 0 faces the a-end (in), slot 1 faces the b-end (out)
        if (e.circle()) {
            if (cuts.empty()) continue;
            for (std::size_t k = 0; k < cuts.size(); ++k) {
                const auto& cur = cuts[k];
                const auto& nxt = cuts[(k + 1) % cuts.size()];
                Fragment f;
                f.origin = e.id;
                f.label = e.label;
                f.comp = e.component;
                f.end_p[0] = Port{cur.second, 1};
                f.end_p[1] = Port{nxt.second, 0};
                f.lo_pos = cur.first;
                f.hi_pos = nxt.first;
                frags.push_back(f);
            }
            continue;
        }
        std::vector<std::pair<int, Port>> stops;
        stops.emplace_back(va, pa);
        std::vector<int> poss{INT32_MIN};
        for (const auto& c : cuts) {
            stops.emplace_back(-1, Port{c.second, 0});
            stops.emplace_back(-1, Port{c.second, 1});
            poss.push_back(c.first);
            poss.push_back(c.first);
        }
        stops.emplace_back(vb, pb);
        poss.push_back(INT32_MAX);
        for (std::size_t k = 0; k + 1 < stops.size(); k += 2) {
            Fragment f;
            f.origin = e.id;
            f.label = e.label;
            f.comp = e.component;
            f.end_v[0] = stops[k].first;
            f.end_p[0] = stops[k].second;
            f.end_v[1] = stops[k + 1].first;
            f.end_p[1] = stops[k + 1].second;
            f.lo_pos = poss[k];
            f.hi_pos = poss[k + 1];
            frags.push_back(f);
        }
    }
    for (int v : cut_vertices) rec.removed_vertices.push_back(orb.vertex(v));

    // Tube pairs port (0, slot) with port (1, slot).
    auto partner = [](Port p) { return Port{1 - p.site, p.slot}; };
    std::vector<bool> used(frags.size(), false);
    int next_id = 0;
    for (const auto& e : orb.edges) next_id = std::max(next_id, e.id + 1);
    std::set<int> taken;
    for (const auto& e : orb.edges)
        if (!cut_edges.count(e.id)) taken.insert(e.id);

    struct Chain {
        std::vector<int> frags;
        int v0 = -1, v1 = -1;
        bool closed = false;
    };
    auto find_frag_with_port = [&](Port p, std::size_t skip, int& endi) -> int {
        for (std::size_t k = 0; k < frags.size(); ++k)
            for (int j = 0; j < 2; ++j)
                if (frags[k].end_p[j] == p && !(k == skip && false)) {
                    endi = j;
                    return static_cast<int>(k);
                }
        return -1;
    };
    std::vector<Chain> chains;
    auto walk = [&](std::size_t start, int from_end, Chain& ch) {
        std::size_t cur = start;
        int enter = from_end;
        while (true) {
            used[cur] = true;
            ch.frags.push_back(static_cast<int>(cur));
            int leave = 1 - enter;
            if (!frags[cur].end_p[leave].valid()) {
                ch.v1 = frags[cur].end_v[leave];
                return;
            }
            int endi = 0;
            int nxt = find_frag_with_port(partner(frags[cur].end_p[leave]), cur, endi);
            if (nxt < 0) throw InvariantError("zero_surgery: dangling tube end");
            if (used[nxt]) {
                ch.closed = true;
                return;
            }
            cur = static_cast<std::size_t>(nxt);
            enter = endi;
        }
    };
    // Chains starting at vertex ends first (deterministic order), then closed loops.
    for (std::size_t k = 0; k < frags.size(); ++k) {
        if (used[k]) continue;
        for (int j = 0; j < 2; ++j) {
            if (!used[k] && !frags[k].end_p[j].valid()) {
                Chain ch;
                ch.v0 = frags[k].end_v[j];
                walk(k, j, ch);
                chains.push_back(ch);
            }
        }
    }
    for (std::size_t k = 0; k < frags.size(); ++k) {
        if (used[k]) continue;
        Chain ch;
        walk(k, 0, ch);
        ch.closed = true;
        chains.push_back(ch);
    }

    std::map<int, std::vector<std::pair<int, int>>> frag_pos_to_edge;  // origin -> (frag idx, new edge)
    std::vector<int> frag_new_edge(frags.size(), -1);
    for (auto& ch : chains) {
        int id = INT32_MAX;
        for (int f : ch.frags) id = std::min(id, frags[f].origin);
        if (taken.count(id)) id = next_id++;
        taken.insert(id);
        Edge ne;
        ne.id = id;
        ne.label = frags[ch.frags.front()].label;
        for (int f : ch.frags)
            if (frags[f].label != ne.label) throw InvariantError("zero_surgery: label mismatch across tube");
        ne.component = remap(frags[ch.frags.front()].comp);
        if (!ch.closed) {
            ne.a = ch.v0;
            ne.b = ch.v1;
        }
        out.edges.erase(std::remove_if(out.edges.begin(), out.edges.end(), [&](const Edge& x) { return x.id == id; }),
                        out.edges.end());
        out.edges.push_back(ne);
        rec.added_edges.push_back(id);
        for (int f : ch.frags) frag_new_edge[f] = id;
    }
    out.edges.erase(std::remove_if(out.edges.begin(), out.edges.end(),
                                   [&](const Edge& x) {
                                       return cut_edges.count(x.id) &&
                                              std::find(rec.added_edges.begin(), rec.added_edges.end(), x.id) ==
                                                  rec.added_edges.end();
                                   }),
                    out.edges.end());
    out.vertices.erase(std::remove_if(out.vertices.begin(), out.vertices.end(),
                                      [&](const Vertex& v) { return cut_vertices.count(v.id); }),
                       out.vertices.end());
    // Vertex incidence lists: rebuild for vertices touching new edges.
    for (auto& v : out.vertices) {
        int n = 0;
        for (const auto& e : out.edges) {
            if (e.a == v.id) v.edges[n++ % 3] = e.id;
            if (e.b == v.id) v.edges[n++ % 3] = e.id;
        }
        v.component = remap(v.component);
    }
    for (auto& e : out.edges)
        if (std::find(rec.added_edges.begin(), rec.added_edges.end(), e.id) == rec.added_edges.end())
            e.component = remap(e.component);

    // Sites: drop the two used ones, re-host any other site on a cut edge.
    out.sites.clear();
    for (const auto& st : orb.sites) {
        if (st.id == d1 || st.id == d2) {
            rec.removed_sites.push_back(st);
            continue;
        }
        DiscSite ns = st;
        if (st.kind == SiteKind::Point) ns.where = remap(st.where);
        if (st.kind == SiteKind::OnEdge && cut_edges.count(st.where)) {
            rec.moved_sites.push_back(st);
            for (std::size_t k = 0; k < frags.size(); ++k) {
                if (frags[k].origin != st.where) continue;
                bool inside = frags[k].lo_pos <= frags[k].hi_pos
                                  ? (st.pos >= frags[k].lo_pos && st.pos <= frags[k].hi_pos)
                                  : (st.pos >= frags[k].lo_pos || st.pos <= frags[k].hi_pos);
                if (inside) {
                    ns.where = frag_new_edge[k];
                    break;
                }
            }
        }
        if (st.kind == SiteKind::AtVertex && cut_vertices.count(st.where))
            throw InvariantError("zero_surgery: site '" + st.id + "' sits on a removed vertex");
        out.sites.push_back(ns);
    }
    canonicalize(out);
    validate(out);
    return {out, rec};
}

// Inverse of zero_surgery: cut along the tube I x S2//Gamma and cap both ends with discal fills.
inline ThreeOrbDesc undo_surgery(const ThreeOrbDesc& post, const SurgeryRecord& rec) {
    ThreeOrbDesc out;
    out.components = rec.old_components;
    out.boundary = post.boundary;
    std::set<int> added(rec.added_edges.begin(), rec.added_edges.end());
    auto old_comp = [&](const std::map<int, int>& m, int id, int fallback) {
        auto it = m.find(id);
        return it == m.end() ? fallback : it->second;
    };
    for (const auto& v : post.vertices) {
        Vertex nv = v;
        nv.component = old_comp(rec.vertex_comp, v.id, v.component);
        out.vertices.push_back(nv);
    }
    for (const auto& v : rec.removed_vertices) out.vertices.push_back(v);
    for (const auto& e : post.edges) {
        if (added.count(e.id)) continue;
        Edge ne = e;
        ne.component = old_comp(rec.edge_comp, e.id, e.component);
        out.edges.push_back(ne);
    }
    for (const auto& e : rec.removed_edges) out.edges.push_back(e);
    std::set<int> removed_v;
    for (const auto& v : rec.removed_vertices) removed_v.insert(v.id);
    for (auto& v : out.vertices) {
        if (removed_v.count(v.id)) continue;
        int n = 0;
        for (const auto& e : out.edges) {
            if (e.a == v.id) v.edges[n++ % 3] = e.id;
            if (e.b == v.id) v.edges[n++ % 3] = e.id;
        }
    }
    std::map<std::string, DiscSite> moved;
    for (const auto& s : rec.moved_sites) moved[s.id] = s;
    for (const auto& s : post.sites) {
        if (moved.count(s.id)) {
            out.sites.push_back(moved[s.id]);
            continue;
        }
        DiscSite ns = s;
        if (s.kind == SiteKind::Point) {
            auto it = rec.point_site_comp.find(s.id);
            if (it != rec.point_site_comp.end()) ns.where = it->second;
        }
        out.sites.push_back(ns);
    }
    for (const auto& s : rec.removed_sites) out.sites.push_back(s);
    canonicalize(out);
    validate(out);
    return out;
}

// ---- text format ----

inline std::string print_orb3(const ThreeOrbDesc& d0) {
    ThreeOrbDesc d = d0;
    canonicalize(d);
    std::string out = "orb3";
    for (const auto& c : d.components) out += " " + c;
    out += "\n";
    for (const auto& b : d.boundary) out += "boundary " + print_sig(b) + "\n";
    for (const auto& e : d.edges) {
        out += "edge " + std::to_string(e.id) + " " + std::to_string(e.label) + " ";
        if (e.circle()) {
            out += "circle";
            if (e.component) out += " @" + std::to_string(e.component);
        } else {
            out += std::to_string(e.a) + "-" + std::to_string(e.b);
        }
        out += "\n";
    }
    for (const auto& v : d.vertices) {
        out += "vertex " + std::to_string(v.id);
        for (int e : v.edges) out += " " + std::to_string(e);
        if (v.component) out += " @" + std::to_string(v.component);
        out += "\n";
    }
    for (const auto& s : d.sites) {
        out += "site " + s.id + " ";
        switch (s.kind) {
            case SiteKind::Point: out += "point @" + std::to_string(s.where); break;
            case SiteKind::OnEdge:
                out += "edge " + std::to_string(s.where);
                if (s.pos) out += " " + std::to_string(s.pos);
                break;
            case SiteKind::AtVertex: out += "vertex " + std::to_string(s.where); break;
        }
        out += "\n";
    }
    return out;
}

inline std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

inline int parse_component_tag(const std::string& t, int ln) {
    if (t.size() < 2 || t[0] != '@') throw ParseError("expected @<component>", ln, 1);
    try {
        return parse_int(t.substr(1), "component");
    } catch (const ParseError& e) {
        throw ParseError(e.what(), ln, 1);
    }
}

inline ThreeOrbDesc parse_orb3(const std::string& text) {
    ThreeOrbDesc d;
    d.components.clear();
    std::istringstream is(text);
    std::string line;
    int ln = 0;
    bool header = false;
    while (std::getline(is, line)) {
        ++ln;
        auto hash = line.find('#');
        std::string body = line;
        // '#' also appears inside connected-sum tokens on the header line
        if (hash != std::string::npos && (hash == 0 || line[hash - 1] == ' ')) body = line.substr(0, hash);
        auto tok = tokenize(body);
        if (tok.empty()) continue;
        try {
            if (!header) {
                if (tok[0] != "orb3" || tok.size() < 2) throw ParseError("expected 'orb3 <underlying-token>'");
                d.components.assign(tok.begin() + 1, tok.end());
                header = true;
                continue;
            }
            if (tok[0] == "boundary" && tok.size() == 2) {
                d.boundary.push_back(parse_sig(tok[1]));
            } else if (tok[0] == "edge" && (tok.size() == 4 || tok.size() == 5)) {
                Edge e;
                e.id = parse_int(tok[1], "edge id");
                e.label = parse_int(tok[2], "edge label");
                if (e.label < 2) throw ParseError("edge label must be >= 2");
                if (tok[3] == "circle") {
                    if (tok.size() == 5) e.component = parse_component_tag(tok[4], ln);
                } else {
                    auto ends = split(tok[3], '-');
                    if (ends.size() != 2 || tok.size() != 4) throw ParseError("edge endpoints must be 'a-b' or 'circle'");
                    e.a = parse_int(ends[0], "vertex id");
                    e.b = parse_int(ends[1], "vertex id");
                    if (e.a < 0 || e.b < 0) throw ParseError("vertex ids must be nonnegative");
                }
                d.edges.push_back(e);
            } else if (tok[0] == "vertex" && (tok.size() == 5 || tok.size() == 6)) {
                Vertex v;
                v.id = parse_int(tok[1], "vertex id");
                for (int k = 0; k < 3; ++k) v.edges[k] = parse_int(tok[2 + k], "edge id");
                if (tok.size() == 6) v.component = parse_component_tag(tok[5], ln);
                d.vertices.push_back(v);
            } else if (tok[0] == "site" && tok.size() >= 3) {
                DiscSite s;
                s.id = tok[1];
                if (tok[2] == "point" && tok.size() == 4) {
                    s.kind = SiteKind::Point;
                    s.where = parse_component_tag(tok[3], ln);
                } else if (tok[2] == "edge" && (tok.size() == 4 || tok.size() == 5)) {
                    s.kind = SiteKind::OnEdge;
                    s.where = parse_int(tok[3], "edge id");
                    if (tok.size() == 5) s.pos = parse_int(tok[4], "position");
                } else if (tok[2] == "vertex" && tok.size() == 4) {
                    s.kind = SiteKind::AtVertex;
                    s.where = parse_int(tok[3], "vertex id");
                } else {
                    throw ParseError("bad site line");
                }
                d.sites.push_back(s);
            } else {
                throw ParseError("unrecognized line '" + trim(body) + "'");
            }
        } catch (const ParseError& e) {
            if (e.line) throw;
            throw ParseError(e.what(), ln, 1);
        }
    }
    if (!header) throw ParseError("missing 'orb3' header", ln, 1);
    canonicalize(d);
    validate(d);
    return d;
}

}  // namespace orbiflow
