#pragma once

#include "orbiflow/common.hpp"
#include "orbiflow/orb2.hpp"
#include "orbiflow/orb3.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace orbiflow {

enum class EndKind { Cap, Boundary };

// Metric ds^2 + psi(s)^2 g on [0, L] x S2//Gamma, g the unit round metric. Uniform grid.
struct WarpProfile {
    TwoOrbSig cross_section = sphere();
    double L = std::numbers::pi;
    std::vector<double> psi;
    EndKind end0 = EndKind::Cap;
    EndKind end1 = EndKind::Cap;

    int N() const { return static_cast<int>(psi.size()) - 1; }
    double h() const { return L / N(); }
    bool closed() const { return end0 == EndKind::Cap && end1 == EndKind::Cap; }
    long long group_order() const { return spherical_group_order(cross_section); }
    double s(int i) const { return L * i / N(); }
};

inline void check_profile(const WarpProfile& p) {
    if (p.N() < 8) throw InvariantError("warp profile needs at least 9 samples");
    if (!(p.L > 0)) throw InvariantError("warp profile length must be positive");
    for (int i = 1; i < p.N(); ++i)
        if (!(p.psi[i] > 0)) throw NumericError("psi <= 0 at interior node " + std::to_string(i));
    if (p.end0 == EndKind::Boundary && !(p.psi.front() > 0)) throw InvariantError("boundary end with psi <= 0");
    if (p.end1 == EndKind::Boundary && !(p.psi.back() > 0)) throw InvariantError("boundary end with psi <= 0");
}

struct Curvatures {
    std::vector<double> k_rad;  // planes containing d/ds
    std::vector<double> k_sph;  // planes tangent to the cross-section
    std::vector<double> R;

    double rm_abs(int i) const { return std::max(std::abs(k_rad[i]), std::abs(k_sph[i])); }
    double sec_min(int i) const { return std::min(k_rad[i], k_sph[i]); }
};

namespace detail {

// Ghost values: odd through a cap, even through a boundary (Neumann).
inline double psi_at(const WarpProfile& p, int i) {
    const int n = p.N();
    if (i < 0) return p.end0 == EndKind::Cap ? -p.psi[-i] : p.psi[-i];
    if (i > n) return p.end1 == EndKind::Cap ? -p.psi[2 * n - i] : p.psi[2 * n - i];
    return p.psi[i];
}

// Fourth-order psi'; 1 - psi'^2 is O(s^2) near a cap, so a second-order slope would dominate it.
inline double d1_at(const WarpProfile& p, int i, double h) {
    return (-psi_at(p, i + 2) + 8 * psi_at(p, i + 1) - 8 * psi_at(p, i - 1) + psi_at(p, i - 2)) / (12 * h);
}

}  // namespace detail

// K_rad = -psi''/psi, K_sph = (1 - psi'^2)/psi^2, R = 4 K_rad + 2 K_sph.
inline Curvatures curvatures(const WarpProfile& p) {
    check_profile(p);
    const int n = p.N();
    const double h = p.h();
    Curvatures c;
    c.k_rad.resize(n + 1);
    c.k_sph.resize(n + 1);
    c.R.resize(n + 1);
    auto at = [&](int i) {
        double d1 = detail::d1_at(p, i, h);
        double d2 = (detail::psi_at(p, i + 1) - 2 * p.psi[i] + detail::psi_at(p, i - 1)) / (h * h);
        c.k_rad[i] = -d2 / p.psi[i];
        c.k_sph[i] = (1 - d1 * d1) / (p.psi[i] * p.psi[i]);
    };
    for (int i = 1; i < n; ++i) at(i);
    auto extrapolate = [&](int tip, int d) {
        c.k_rad[tip] = (4 * c.k_rad[tip + d] - c.k_rad[tip + 2 * d]) / 3;
        c.k_sph[tip] = (4 * c.k_sph[tip + d] - c.k_sph[tip + 2 * d]) / 3;
    };
    if (p.end0 == EndKind::Cap) extrapolate(0, 1);
    else at(0);
    if (p.end1 == EndKind::Cap) extrapolate(n, -1);
    else at(n);
    for (int i = 0; i <= n; ++i) c.R[i] = 4 * c.k_rad[i] + 2 * c.k_sph[i];
    return c;
}

inline double volume(const WarpProfile& p) {
    const int n = p.N();
    double s = 0;
    if (n % 2 == 0) {
        s = p.psi.front() * p.psi.front() + p.psi.back() * p.psi.back();
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * p.psi[i] * p.psi[i];
        s /= 3;
    } else {
        s = 0.5 * (p.psi.front() * p.psi.front() + p.psi.back() * p.psi.back());
        for (int i = 1; i < n; ++i) s += p.psi[i] * p.psi[i];
    }
    return 4 * std::numbers::pi / static_cast<double>(p.group_order()) * p.h() * s;
}

inline double min_scalar(const WarpProfile& p) {
    auto c = curvatures(p);
    return *std::min_element(c.R.begin(), c.R.end());
}

// Cap slope |psi'| = 1 is imposed through psi = s + c s^3 + e s^5 at the node next to each cap.
inline void apply_cap_closure(WarpProfile& p) {
    const int n = p.N();
    const double h = p.h();
    auto closure = [h](double f2, double f3) { return 2.0 / 3.0 * h + (9 * f2 - f3) / 45; };
    if (p.end0 == EndKind::Cap) {
        p.psi[0] = 0;
        p.psi[1] = closure(p.psi[2], p.psi[3]);
    }
    if (p.end1 == EndKind::Cap) {
        p.psi[n] = 0;
        p.psi[n - 1] = closure(p.psi[n - 2], p.psi[n - 3]);
    }
}

// ---- seeds ----

inline WarpProfile round_s3(int N = 314, double radius = 1.0, TwoOrbSig cross = sphere()) {
    WarpProfile p;
    p.cross_section = cross;
    p.L = std::numbers::pi * radius;
    p.psi.resize(N + 1);
    for (int i = 0; i <= N; ++i) p.psi[i] = radius * std::sin(std::numbers::pi * i / N);
    p.psi[0] = p.psi[N] = 0;
    return p;
}

inline WarpProfile cylinder(double radius, double L, int N, TwoOrbSig cross = sphere()) {
    WarpProfile p;
    p.cross_section = cross;
    p.L = L;
    p.psi.assign(N + 1, radius);
    p.end0 = p.end1 = EndKind::Boundary;
    return p;
}

struct DumbbellShape {
    double L = 10.0;
    double neck_length = 3.0;
    double neck_radius = 0.5;
    double width = 0.3;
};

// Round profile of length L pinched by a smooth plateau of radius r_n around the middle.
inline WarpProfile dumbbell(int N = 500, DumbbellShape d = {}, TwoOrbSig cross = sphere()) {
    WarpProfile p;
    p.cross_section = cross;
    p.L = d.L;
    p.psi.resize(N + 1);
    const double s1 = 0.5 * (d.L - d.neck_length), s2 = 0.5 * (d.L + d.neck_length);
    for (int i = 0; i <= N; ++i) {
        double s = p.s(i);
        double P = 0.5 * (std::tanh((s - s1) / d.width) - std::tanh((s - s2) / d.width));
        p.psi[i] = d.L / std::numbers::pi * std::sin(std::numbers::pi * s / d.L) * (1 - P) + d.neck_radius * P;
    }
    p.psi[0] = p.psi[N] = 0;
    apply_cap_closure(p);
    return p;
}

// Standard cap psi = sqrt(2) tanh(s/sqrt(2)): R = 6 - 5 tanh^2 >= 1, both sectionals >= 0,
// asymptotic to the cylinder of scalar curvature 1.
inline WarpProfile standard_cap(TwoOrbSig cross = sphere(), double h = 0.01, double length = 12.0) {
    WarpProfile p;
    p.cross_section = cross;
    int N = static_cast<int>(std::ceil(length / h));
    if (N % 2) ++N;
    p.L = length;
    p.end0 = EndKind::Cap;
    p.end1 = EndKind::Boundary;
    p.psi.resize(N + 1);
    for (int i = 0; i <= N; ++i) p.psi[i] = std::numbers::sqrt2 * std::tanh(p.s(i) / std::numbers::sqrt2);
    return p;
}

// ---- flow ----

struct FlowEvent {
    double t = 0;
    int component = 0;
    double center = 0;
    double scale = 0;
    int kept = 0;
    int discarded = 0;
    std::string note;
};

struct SigmaSample {
    double t = 0, r_min = 0, volume = 0, sigma = 0;
};

struct FlowState {
    std::vector<WarpProfile> components;
    double t = 0;
    long long steps = 0;
    std::vector<FlowEvent> events;
    std::vector<SigmaSample> sigma_samples;
};

inline double stable_dt3(const WarpProfile& p) {
    auto c = curvatures(p);
    double m = 0;
    for (int i = 0; i <= p.N(); ++i) m = std::max(m, c.rm_abs(i));
    double h2 = p.h() * p.h();
    return 0.1 * h2 / (1 + m * h2);
}

namespace detail {

// Eulerian form on rho = s/L of psi_t = psi'' - (1 - psi'^2)/psi, with the reparametrization
// velocity W(s) = int_0^s -2 K_rad and dL/dt = W(L).
inline std::pair<std::vector<double>, double> warp_rhs(const WarpProfile& p) {
    const int n = p.N();
    const double h = p.h();
    auto c = curvatures(p);
    std::vector<double> W(n + 1, 0.0), out(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) W[i] = W[i - 1] - h * (c.k_rad[i] + c.k_rad[i - 1]);
    int lo = p.end0 == EndKind::Cap ? 1 : 0;
    int hi = p.end1 == EndKind::Cap ? n - 1 : n;
    for (int i = lo; i <= hi; ++i) {
        double rho = static_cast<double>(i) / n;
        double d1 = d1_at(p, i, h);
        double d2 = (psi_at(p, i + 1) - 2 * p.psi[i] + psi_at(p, i - 1)) / (h * h);
        out[i] = d2 - (1 - d1 * d1) / p.psi[i] - d1 * (W[i] - rho * W[n]);
    }
    return {out, W[n]};
}

inline WarpProfile warp_step(const WarpProfile& p, double dt) {
    auto [k1, dl1] = warp_rhs(p);
    WarpProfile mid = p;
    for (int i = 0; i <= p.N(); ++i) mid.psi[i] += 0.5 * dt * k1[i];
    mid.L += 0.5 * dt * dl1;
    apply_cap_closure(mid);
    check_profile(mid);
    auto [k2, dl2] = warp_rhs(mid);
    WarpProfile out = p;
    for (int i = 0; i <= p.N(); ++i) out.psi[i] += dt * k2[i];
    out.L += dt * dl2;
    apply_cap_closure(out);
    if (!(out.L > 0)) throw NumericError("component length collapsed");
    for (int i = 1; i < out.N(); ++i)
        if (!(out.psi[i] > 0)) throw NumericError("psi <= 0 at node " + std::to_string(i) + " (neck pinched)");
    return out;
}

}  // namespace detail

// One midpoint step of all components with a shared dt (0 selects the adaptive bound).
inline FlowState flow_step3(const FlowState& s, double dt = 0) {
    if (s.components.empty()) throw InvariantError("flow_step3: no components");
    double bound = std::numeric_limits<double>::infinity();
    for (const auto& p : s.components) bound = std::min(bound, stable_dt3(p));
    if (dt <= 0) dt = bound;
    else if (dt > 5 * bound) throw NumericError("flow_step3: dt above 5x the adaptive stability bound");
    FlowState out = s;
    for (auto& p : out.components) p = detail::warp_step(p, dt);
    out.t = s.t + dt;
    out.steps = s.steps + 1;
    return out;
}

// R_min is the minimum over components, V the summed volume.
inline SigmaSample sigma_sample(const FlowState& s) {
    SigmaSample out;
    out.t = s.t;
    out.r_min = std::numeric_limits<double>::infinity();
    for (const auto& p : s.components) {
        if (!p.closed()) throw InvariantError("sigma_track needs closed components");
        out.r_min = std::min(out.r_min, min_scalar(p));
        out.volume += volume(p);
    }
    out.sigma = out.r_min * std::cbrt(out.volume * out.volume);
    return out;
}

inline void sigma_track(FlowState& s) { s.sigma_samples.push_back(sigma_sample(s)); }

// Scale-invariant value R_min V^(2/3); for R = -3/2 this is -(3/2) V^(2/3).
inline double sigma_value(double r_min, double vol) { return r_min * std::cbrt(vol * vol); }

// ---- pinching ----

// Phi(s) = s / ln(max(s, e)) + C.
struct PinchFn {
    double C = 0;
    double operator()(double s) const { return s / std::log(std::max(s, std::numbers::e)) + C; }
};

// Smallest C >= 0 for which the profile satisfies Rm >= -Phi(R).
inline PinchFn fit_pinch(const WarpProfile& p) {
    auto c = curvatures(p);
    PinchFn base;
    double need = 0;
    for (int i = 0; i <= p.N(); ++i) need = std::max(need, -(c.sec_min(i) + base(c.R[i])));
    PinchFn out{need};
    // the check sums in a different order; step past any rounding shortfall
    auto short_of = [&] {
        for (int i = 0; i <= p.N(); ++i)
            if (c.sec_min(i) + out(c.R[i]) < 0) return true;
        return false;
    };
    while (short_of()) out.C = std::nextafter(out.C, std::numeric_limits<double>::infinity());
    return out;
}

struct PinchVerdict {
    bool pass = true;
    double margin = std::numeric_limits<double>::infinity();
    int worst_index = -1;
};

inline PinchVerdict pinching_check(const WarpProfile& p, const PinchFn& phi) {
    auto c = curvatures(p);
    PinchVerdict v;
    for (int i = 0; i <= p.N(); ++i) {
        double m = c.sec_min(i) + phi(c.R[i]);
        if (m < v.margin) {
            v.margin = m;
            v.worst_index = i;
        }
    }
    v.pass = v.margin >= 0;
    return v;
}

// ---- noncollapsing ----

struct KappaOptions {
    bool require_curvature_scale = true;  // only centers with sup_B |Rm| <= r^-2 are tested
    double curvature_slack = 1e-3;        // relative slack absorbing discretization error in |Rm|
};

struct KappaVerdict {
    bool pass = true;
    int admissible = 0;
    int failing = 0;
    double worst_ratio = std::numeric_limits<double>::infinity();  // min vol(B)/r^3 over admissible centers
    std::string note;
};

inline KappaVerdict kappa_check(const WarpProfile& p, double r, double kappa, KappaOptions opt = {}) {
    if (!(r > 0)) throw InvariantError("kappa_check: r must be positive");
    auto c = curvatures(p);
    const int n = p.N();
    const double h = p.h();
    const double area_factor = 4 * std::numbers::pi / static_cast<double>(p.group_order());
    std::vector<double> cum(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) cum[i] = cum[i - 1] + 0.5 * h * (p.psi[i] * p.psi[i] + p.psi[i - 1] * p.psi[i - 1]);
    auto cum_at = [&](double s) {
        s = std::clamp(s, 0.0, p.L);
        double x = s / h;
        int j = std::min(static_cast<int>(x), n - 1);
        double f = x - j;
        return cum[j] + f * (cum[j + 1] - cum[j]);
    };
    const int reach = static_cast<int>(std::ceil(r / h));
    KappaVerdict v;
    for (int i = 0; i <= n; ++i) {
        if (opt.require_curvature_scale) {
            double sup = 0;
            for (int j = std::max(0, i - reach); j <= std::min(n, i + reach); ++j) sup = std::max(sup, c.rm_abs(j));
            if (sup > (1 + opt.curvature_slack) / (r * r)) continue;
        }
        ++v.admissible;
        double s = p.s(i);
        double vol = area_factor * (cum_at(s + r) - cum_at(s - r));
        double ratio = vol / (r * r * r);
        v.worst_ratio = std::min(v.worst_ratio, ratio);
        if (ratio < kappa) ++v.failing;
    }
    v.pass = v.failing == 0;
    if (v.admissible == 0) v.note = "no admissible centers";
    return v;
}

// Bound on isotropy orders: floor(n int_0^1 sinh^(n-1)(s) ds / kappa).
inline long long isotropy_bound(double kappa, int n) {
    if (!(kappa > 0)) throw InvariantError("isotropy_bound: kappa must be positive");
    double integral;
    if (n == 2) integral = 2 * (std::cosh(1.0) - 1);
    else if (n == 3) integral = 3 * (std::sinh(2.0) - 2) / 4;
    else throw InvariantError("isotropy_bound: n must be 2 or 3");
    double q = std::floor(integral / kappa);
    if (q > 9e18) throw NumericError("isotropy_bound: bound exceeds 64-bit range");
    return static_cast<long long>(q);
}

// ---- necks and surgery ----

struct Neck {
    int center_index = 0;
    double center = 0;
    double scale = 0;  // R(center)^(-1/2)
    int begin_index = 0, end_index = 0;
    double begin = 0, end = 0;
    double scaled_length = 0;
};

// Maximal runs where, after rescaling by R, the profile is eps-close in C^2 to the cylinder of
// scalar curvature 1 and longer than 2/eps; sorted by scale, smallest first.
inline std::vector<Neck> detect_necks(const WarpProfile& p, double eps) {
    auto c = curvatures(p);
    const int n = p.N();
    const double h = p.h();
    std::vector<char> good(n + 1, 0);
    for (int i = 0; i <= n; ++i) {
        if (!(p.psi[i] > 0) || !(c.R[i] > 0)) continue;
        double d1 = detail::d1_at(p, i, h);
        double d2 = (detail::psi_at(p, i + 1) - 2 * p.psi[i] + detail::psi_at(p, i - 1)) / (h * h);
        good[i] = std::abs(d1) < eps && std::abs(d2 * p.psi[i]) < eps && std::abs(c.R[i] * p.psi[i] * p.psi[i] / 2 - 1) < eps;
    }
    std::vector<Neck> out;
    for (int i = 0; i <= n;) {
        if (!good[i]) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 <= n && good[j + 1]) ++j;
        double len = 0;
        for (int k = i; k < j; ++k) len += 0.5 * h * (std::sqrt(c.R[k]) + std::sqrt(c.R[k + 1]));
        if (len > 2 / eps) {
            Neck nk;
            nk.begin_index = i;
            nk.end_index = j;
            nk.begin = p.s(i);
            nk.end = p.s(j);
            nk.scaled_length = len;
            nk.center_index = i;
            for (int k = i; k <= j; ++k)
                if (p.psi[k] < p.psi[nk.center_index]) nk.center_index = k;
            nk.center = p.s(nk.center_index);
            nk.scale = 1 / std::sqrt(c.R[nk.center_index]);
            out.push_back(nk);
        }
        i = j + 1;
    }
    std::stable_sort(out.begin(), out.end(), [](const Neck& a, const Neck& b) { return a.scale < b.scale; });
    return out;
}

inline std::optional<Neck> detect_neck(const WarpProfile& p, double eps) {
    auto all = detect_necks(p, eps);
    if (all.empty()) return std::nullopt;
    return all.front();
}

struct SurgeryParams {
    double delta = 0.25;
    double h = 0.1;        // surgery scale
    double theta = 0.5;    // cap evolution fraction; recorded only
    double A_ext = 8.0;    // cap length in units of the cap scale
    int blend_cells = 10;
    double cut_factor = 2.0;  // neck_surgery cuts where the scale first exceeds cut_factor * h
};

inline void validate(const SurgeryParams& sp) {
    if (!(sp.delta > 0 && sp.delta < 0.5)) throw InvariantError("surgery delta must lie in (0, 1/2)");
    if (!(sp.h > 0)) throw InvariantError("surgery scale h must be positive");
    if (!(sp.A_ext > 2)) throw InvariantError("cap extension must exceed 2 cap scales");
    if (sp.blend_cells < 2) throw InvariantError("blend window needs at least 2 cells");
}

namespace detail {

// Keeps [0, c] of p (c = center), blends into the standard cap scaled by mu over the last window,
// and ends in a cap tip at most A_ext*mu past c. Resampled with spacing <= min(h, mu/10).
inline WarpProfile cap_off(const WarpProfile& p, double c, double mu, const SurgeryParams& sp) {
    const double h = p.h();
    const double W = sp.blend_cells * h;
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline(p.psi.begin(), p.psi.end(), 0.0, h);
    // where psi still falls at the cut (slope -m), attach the cap at the point of its profile with
    // the same slope, sech^2 = m, so the junction is C^1
    const double m = std::clamp(-spline.prime(c), 0.0, 0.9);
    double A = sp.A_ext * mu;
    if (m > 0) {
        mu = spline(c) / (std::numbers::sqrt2 * std::sqrt(1 - m));
        A = std::min(sp.A_ext * mu, mu * std::numbers::sqrt2 * std::atanh(std::sqrt(1 - m)));
    }
    auto cap = [&](double sigma) { return mu * std::numbers::sqrt2 * std::tanh(sigma / (mu * std::numbers::sqrt2)); };
    WarpProfile out;
    out.cross_section = p.cross_section;
    out.end0 = p.end0;
    out.end1 = EndKind::Cap;
    out.L = c + A;
    int N = static_cast<int>(std::ceil(out.L / std::min(h, mu / 10)));
    if (N % 2) ++N;
    out.psi.resize(N + 1);
    for (int i = 0; i <= N; ++i) {
        double s = out.L * i / N;
        double sigma = out.L - s;
        double v;
        if (s <= c - W) {
            v = spline(s);
        } else if (s < c) {
            double x = (s - (c - W)) / W;
            double chi = x * x * (3 - 2 * x);
            v = (1 - chi) * spline(s) + chi * cap(sigma);
        } else {
            v = cap(sigma);
        }
        out.psi[i] = v;
    }
    if (out.end0 == EndKind::Cap) out.psi[0] = 0;
    apply_cap_closure(out);
    return out;
}

inline WarpProfile reversed(const WarpProfile& p) {
    WarpProfile q = p;
    std::reverse(q.psi.begin(), q.psi.end());
    std::swap(q.end0, q.end1);
    return q;
}

}  // namespace detail

// Cuts component `comp` at the neck's central cross-section and caps both sides; a side whose
// scalar curvature everywhere exceeds h^-2 is discarded.
inline FlowState do_surgery(const FlowState& state, int comp, const Neck& neck, const SurgeryParams& sp) {
    validate(sp);
    if (comp < 0 || comp >= static_cast<int>(state.components.size()))
        throw InvariantError("do_surgery: no component " + std::to_string(comp));
    const WarpProfile& p = state.components[comp];
    if (neck.scale > sp.h) throw InvariantError("do_surgery: neck scale above surgery scale h");
    if (neck.center_index - neck.begin_index < sp.blend_cells || neck.end_index - neck.center_index < sp.blend_cells)
        throw InvariantError("do_surgery: neck too short for the blending region");
    const double mu = p.psi[neck.center_index] / std::numbers::sqrt2;
    WarpProfile left = detail::cap_off(p, neck.center, mu, sp);
    WarpProfile right = detail::reversed(detail::cap_off(detail::reversed(p), p.L - neck.center, mu, sp));
    // reversed() of the capped right piece puts the new cap at s = 0
    FlowState out = state;
    out.components.erase(out.components.begin() + comp);
    FlowEvent ev;
    ev.t = state.t;
    ev.component = comp;
    ev.center = neck.center;
    ev.scale = neck.scale;
    const double limit = 1 / (sp.h * sp.h);
    int at = comp;
    for (auto* piece : {&left, &right}) {
        if (min_scalar(*piece) > limit) {
            ++ev.discarded;
            continue;
        }
        out.components.insert(out.components.begin() + at, *piece);
        ++at;
        ++ev.kept;
    }
    ev.note = "cap scale " + std::to_string(mu);
    out.events.push_back(ev);
    return out;
}

struct NeckCuts {
    std::optional<Neck> left, right;
};

// Walking outward from the neck's thinnest point, the last cross-section on each side whose scale
// is <= cut_factor * h. A side whose walk comes within blend_cells of an end of the profile has no
// cut.
inline NeckCuts neck_cuts(const WarpProfile& p, const Neck& neck, const SurgeryParams& sp) {
    auto c = curvatures(p);
    const int n = p.N();
    const double bound = sp.cut_factor * sp.h;
    auto scale = [&](int i) { return c.R[i] > 0 ? 1 / std::sqrt(c.R[i]) : std::numeric_limits<double>::infinity(); };
    auto walk = [&](int d) -> std::optional<Neck> {
        int i = neck.center_index;
        while (i + d >= 0 && i + d <= n && scale(i + d) <= bound) i += d;
        if (i - sp.blend_cells < 0 || i + sp.blend_cells > n) return std::nullopt;
        Neck out = neck;
        out.center_index = i;
        out.center = p.s(i);
        out.scale = scale(i);
        out.begin_index = i - sp.blend_cells;
        out.end_index = i + sp.blend_cells;
        out.begin = p.s(out.begin_index);
        out.end = p.s(out.end_index);
        return out;
    };
    NeckCuts out;
    if (scale(neck.center_index) > bound) return out;
    out.left = walk(-1);
    out.right = walk(+1);
    if (out.left && out.right && out.left->center_index == out.right->center_index) out.left.reset();
    return out;
}

// Surgery on a whole neck: cut at both positions from neck_cuts with surgery scale cut_factor * h
// and discard the thin middle piece. Returns the input unchanged when neither side has a cut.
inline FlowState neck_surgery(const FlowState& state, int comp, const Neck& neck, const SurgeryParams& sp) {
    auto cuts = neck_cuts(state.components.at(comp), neck, sp);
    SurgeryParams wide = sp;
    wide.h = sp.cut_factor * sp.h;
    if (!cuts.left && !cuts.right) return state;
    if (!cuts.right) return do_surgery(state, comp, *cuts.left, wide);
    FlowState out = do_surgery(state, comp, *cuts.right, wide);
    if (!cuts.left || out.events.back().kept == 0) return out;
    // the piece left of the right cut sits at index comp unless it was discarded
    const WarpProfile& a = out.components[comp];
    if (a.end0 != state.components[comp].end0 || cuts.left->center >= a.L) return out;
    Neck l = *cuts.left;
    l.center_index = static_cast<int>(std::lround(l.center / a.h()));
    l.center = a.s(l.center_index);
    l.begin_index = l.center_index - sp.blend_cells;
    l.end_index = l.center_index + sp.blend_cells;
    if (l.begin_index < 0 || l.end_index > a.N()) return out;
    auto R = curvatures(a).R[l.center_index];
    if (!(R > 0) || 1 / std::sqrt(R) > wide.h) return out;
    l.scale = 1 / std::sqrt(R);
    out = do_surgery(out, comp, l, wide);
    // the thin middle piece lies entirely at scale <= cut_factor * h; the blends can hide that from
    // the min-R test in do_surgery, so drop it here
    auto& ev = out.events.back();
    if (ev.kept == 2) {
        out.components.erase(out.components.begin() + comp + 1);
        ev.kept = 1;
        ev.discarded = 1;
        ev.note += ", middle piece dropped";
    }
    return out;
}

// ---- singular-locus bookkeeping ----

// Singular locus of a closed component with cross-section S2//Gamma capped at both ends: nothing
// for S2, a circle for S2(k,k), a theta graph for S2(p,q,r).
struct SurgeryDescriptions {
    ThreeOrbDesc pre;
    ThreeOrbDesc post;
    std::string site_a, site_b;
};

inline SurgeryDescriptions surgery_descriptions(const TwoOrbSig& cross) {
    if (cross.reflector || !cross.closed() || cross.base_genus != 0)
        throw InvariantError("surgery bookkeeping needs an orientable spherical cross-section");
    SurgeryDescriptions d;
    d.site_a = "neck_a";
    d.site_b = "neck_b";
    d.pre.components = {"S3"};
    d.post.components = {"S3", "S3"};
    const auto& c = cross.cone_orders;
    if (c.empty()) {
        d.post.sites = {{d.site_a, SiteKind::Point, 0, 0}, {d.site_b, SiteKind::Point, 1, 0}};
    } else if (c.size() == 2 && c[0] == c[1]) {
        d.pre.edges = {{0, c[0], -1, -1, 0}};
        d.post.edges = {{0, c[0], -1, -1, 0}, {1, c[0], -1, -1, 1}};
        d.post.sites = {{d.site_a, SiteKind::OnEdge, 0, 0}, {d.site_b, SiteKind::OnEdge, 1, 0}};
    } else if (c.size() == 3) {
        // far caps keep vertex ids 0 and 1; the new caps are 2 and 3
        for (int i = 0; i < 3; ++i) d.pre.edges.push_back({i, c[i], 0, 1, 0});
        d.pre.vertices = {{0, {0, 1, 2}, 0}, {1, {0, 1, 2}, 0}};
        for (int i = 0; i < 3; ++i) d.post.edges.push_back({i, c[i], 0, 2, 0});
        for (int i = 0; i < 3; ++i) d.post.edges.push_back({3 + i, c[i], 3, 1, 1});
        d.post.vertices = {{0, {0, 1, 2}, 0}, {1, {3, 4, 5}, 1}, {2, {0, 1, 2}, 0}, {3, {3, 4, 5}, 1}};
        d.post.sites = {{d.site_a, SiteKind::AtVertex, 2, 0}, {d.site_b, SiteKind::AtVertex, 3, 0}};
    } else {
        throw InvariantError("cross-section " + print_sig(cross) + " is bad; no cap exists");
    }
    validate(d.pre);
    validate(d.post);
    return d;
}

}  // namespace orbiflow
