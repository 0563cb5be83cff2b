#pragma once

#include "orbiflow/common.hpp"

#include <algorithm>
#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace orbiflow {

enum class GeometryClass { Bad, Spherical, Euclidean, Hyperbolic, Discal, Other };

inline const char* to_string(GeometryClass g) {
    switch (g) {
        case GeometryClass::Bad: return "Bad";
        case GeometryClass::Spherical: return "Spherical";
        case GeometryClass::Euclidean: return "Euclidean";
        case GeometryClass::Hyperbolic: return "Hyperbolic";
        case GeometryClass::Discal: return "Discal";
        case GeometryClass::Other: return "Other";
    }
    return "?";
}

// Reflector tag for the two bounded quotients D2//Z2 and D2//D_k.
struct Reflector {
    enum Kind { Z2, Dihedral } kind = Z2;
    int k = 0;  // only for Dihedral
    auto operator<=>(const Reflector&) const = default;
};

struct TwoOrbSig {
    int base_genus = 0;
    std::vector<int> cone_orders;  // kept sorted
    int boundary_circles = 0;
    std::optional<Reflector> reflector;

    auto operator<=>(const TwoOrbSig&) const = default;

    bool closed() const { return boundary_circles == 0; }
    int cone_count() const { return static_cast<int>(cone_orders.size()); }
};

inline void validate(const TwoOrbSig& s) {
    if (s.base_genus < 0) throw InvariantError("negative genus");
    if (s.boundary_circles < 0) throw InvariantError("negative boundary count");
    for (int k : s.cone_orders)
        if (k < 2) throw InvariantError("cone order " + std::to_string(k) + " < 2");
    if (s.reflector) {
        if (s.boundary_circles < 1) throw InvariantError("reflector data requires a boundary component");
        if (s.base_genus != 0 || s.boundary_circles != 1 || !s.cone_orders.empty())
            throw InvariantError("reflector data only describes D2//Z2 and D2//D_k");
        if (s.reflector->kind == Reflector::Dihedral && s.reflector->k < 2)
            throw InvariantError("dihedral corner order < 2");
    }
}

inline TwoOrbSig make_sig(int genus, std::vector<int> cones, int boundary = 0) {
    TwoOrbSig s;
    s.base_genus = genus;
    std::sort(cones.begin(), cones.end());
    s.cone_orders = std::move(cones);
    s.boundary_circles = boundary;
    validate(s);
    return s;
}

inline TwoOrbSig sphere(std::vector<int> cones = {}) { return make_sig(0, std::move(cones)); }
inline TwoOrbSig disc(std::vector<int> cones = {}) { return make_sig(0, std::move(cones), 1); }

inline TwoOrbSig disc_reflector(int k = 0) {
    TwoOrbSig s;
    s.boundary_circles = 1;
    s.reflector = k == 0 ? Reflector{Reflector::Z2, 0} : Reflector{Reflector::Dihedral, k};
    validate(s);
    return s;
}

inline Rational orb_euler_char(const TwoOrbSig& s) {
    validate(s);
    if (s.reflector) {
        if (s.reflector->kind == Reflector::Z2) return Rational(1, 2);
        return Rational(1, 2 * s.reflector->k);
    }
    Rational chi(2 - 2 * s.base_genus - s.boundary_circles);
    for (int k : s.cone_orders) chi -= Rational(1) - Rational(1, k);
    return chi;
}

inline bool is_bad(const TwoOrbSig& s) {
    if (!s.closed() || s.base_genus != 0) return false;
    if (s.cone_orders.size() == 1) return true;
    return s.cone_orders.size() == 2 && s.cone_orders[0] != s.cone_orders[1];
}

inline GeometryClass classify_bounded(const TwoOrbSig& s) {
    validate(s);
    if (s.closed()) throw InvariantError("classify_bounded expects a bounded signature");
    if (s.reflector) return GeometryClass::Discal;
    if (s.base_genus == 0 && s.boundary_circles == 1 && s.cone_orders.size() <= 1) return GeometryClass::Discal;
    return GeometryClass::Other;
}

inline GeometryClass classify_geometry(const TwoOrbSig& s) {
    validate(s);
    if (!s.closed()) throw InvariantError("classify_geometry accepts closed signatures only");
    if (is_bad(s)) return GeometryClass::Bad;
    Rational chi = orb_euler_char(s);
    if (chi > Rational(0)) return GeometryClass::Spherical;
    if (chi == Rational(0)) return GeometryClass::Euclidean;
    return GeometryClass::Hyperbolic;
}

// Order of the finite group Gamma with S2//Gamma = s; s must be closed spherical.
inline long long spherical_group_order(const TwoOrbSig& s) {
    if (classify_geometry(s) != GeometryClass::Spherical || s.base_genus != 0)
        throw InvariantError("not an orientable spherical 2-orbifold");
    Rational chi = orb_euler_char(s);
    Rational order = Rational(2) / chi;
    return order.numerator();
}

struct MCGDescription {
    std::string name;
    std::optional<long long> order;  // nullopt = infinite
    std::string generators_note;
};

inline MCGDescription mapping_class_group(const TwoOrbSig& s) {
    validate(s);
    if (s.closed() && s.base_genus == 1 && s.cone_orders.empty())
        return {"SL(2,Z)", std::nullopt, "Dehn twists along a basis of H1"};
    if (s.closed() && s.base_genus == 0) {
        const auto& c = s.cone_orders;
        if (c == std::vector<int>{2, 3, 6}) return {"trivial", 1, "no nontrivial classes"};
        if (c == std::vector<int>{2, 4, 4}) return {"Z2", 2, "swap of the two order-4 cone points"};
        if (c == std::vector<int>{3, 3, 3}) return {"S3", 6, "permutations of the three order-3 cone points"};
        if (c == std::vector<int>{2, 2, 2, 2})
            return {"PSL(2,Z) x| (Z/2 x Z/2)", std::nullopt, "half-twists; translations by 2-torsion"};
    }
    throw InvariantError("mapping_class_group: not a closed orientable Euclidean signature");
}

// Textual syntax: S2, S2(2,3,5), T2, T2(2), Sg3(2), D2, D2(3), D2(2,2), D2//Z2, D2//D4.
inline std::string print_sig(const TwoOrbSig& s) {
    if (s.reflector) return s.reflector->kind == Reflector::Z2 ? "D2//Z2" : "D2//D" + std::to_string(s.reflector->k);
    std::string head;
    if (s.boundary_circles == 0) {
        head = s.base_genus == 0 ? "S2" : s.base_genus == 1 ? "T2" : "Sg" + std::to_string(s.base_genus);
    } else if (s.base_genus == 0 && s.boundary_circles == 1) {
        head = "D2";
    } else {
        head = "Sg" + std::to_string(s.base_genus) + "b" + std::to_string(s.boundary_circles);
    }
    if (!s.cone_orders.empty()) head += "(" + join_ints(s.cone_orders) + ")";
    return head;
}

inline TwoOrbSig parse_sig(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) throw ParseError("empty signature");
    if (t == "D2//Z2") return disc_reflector(0);
    if (t.rfind("D2//D", 0) == 0) {
        int k = parse_int(t.substr(5), "dihedral order");
        if (k < 2) throw ParseError("dihedral order must be >= 2");
        return disc_reflector(k);
    }
    std::string head = t;
    std::vector<int> cones;
    auto lp = t.find('(');
    if (lp != std::string::npos) {
        if (t.back() != ')') throw ParseError("unbalanced parenthesis in '" + t + "'");
        head = t.substr(0, lp);
        cones = parse_int_list(t.substr(lp + 1, t.size() - lp - 2), "cone order");
        for (int k : cones)
            if (k < 2) throw ParseError("cone order must be >= 2 in '" + t + "'");
    }
    int genus = 0, bdry = 0;
    if (head == "S2") {
    } else if (head == "T2") {
        genus = 1;
    } else if (head == "D2") {
        bdry = 1;
    } else if (head.rfind("Sg", 0) == 0) {
        auto b = head.find('b');
        genus = parse_int(head.substr(2, b == std::string::npos ? std::string::npos : b - 2), "genus");
        if (b != std::string::npos) bdry = parse_int(head.substr(b + 1), "boundary count");
        if (genus < 0 || bdry < 0) throw ParseError("negative genus or boundary count");
    } else {
        throw ParseError("unknown signature head '" + head + "'");
    }
    auto s = make_sig(genus, cones, bdry);
    if (print_sig(s) != t) throw ParseError("non-canonical signature '" + t + "', expected '" + print_sig(s) + "'");
    return s;
}

// Closed orientable spherical 2-orbifolds with at most three cone points of order <= kmax.
inline bool in_spherical_list(const TwoOrbSig& s) {
    if (!s.closed() || s.base_genus != 0 || s.reflector) return false;
    const auto& c = s.cone_orders;
    switch (c.size()) {
        case 0: return true;
        case 2: return c[0] == c[1];
        case 3:
            if (c[0] == 2 && c[1] == 2) return true;
            return c[0] == 2 && c[1] == 3 && (c[2] == 3 || c[2] == 4 || c[2] == 5);
        default: return false;
    }
}

}  // namespace orbiflow
