#pragma once

#include "orbiflow/common.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace orbiflow {

// Rotationally symmetric metric d(xi)^2 + phi(xi)^2 d(theta)^2 on a uniform arc-length grid.
// phi[i] lives at xi = i*L/N. An end with k >= 1 is a cone tip of angle 2*pi/k (k = 1 smooth);
// k = 0 marks an open boundary end.
struct RotProfile {
    double L = std::numbers::pi;
    std::vector<double> phi;
    int k0 = 1;
    int k1 = 1;

    int N() const { return static_cast<int>(phi.size()) - 1; }
    double h() const { return L / N(); }
    bool closed() const { return k0 > 0 && k1 > 0; }
    std::vector<double> xi() const {
        std::vector<double> x(phi.size());
        for (int i = 0; i <= N(); ++i) x[i] = L * i / N();
        return x;
    }
};

inline void check_profile(const RotProfile& p) {
    if (p.N() < 8) throw InvariantError("profile needs at least 9 samples");
    if (!(p.L > 0)) throw InvariantError("profile length must be positive");
    if (p.k0 < 1) throw InvariantError("the first end must be a tip");
    for (int i = 1; i < p.N(); ++i)
        if (!(p.phi[i] > 0)) throw NumericError("phi <= 0 at interior node " + std::to_string(i));
}

// Simpson when N is even, trapezoid otherwise.
inline double area(const RotProfile& p) {
    const int n = p.N();
    double s = 0;
    if (n % 2 == 0) {
        s = p.phi.front() + p.phi.back();
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * p.phi[i];
        s /= 3;
    } else {
        s = 0.5 * (p.phi.front() + p.phi.back());
        for (int i = 1; i < n; ++i) s += p.phi[i];
    }
    return 2 * std::numbers::pi * p.h() * s;
}

// Closed cone surfaces S2(k0,k1) have orbifold Euler characteristic 1/k0 + 1/k1.
inline double chi_orb(const RotProfile& p) { return 1.0 / p.k0 + (p.k1 > 0 ? 1.0 / p.k1 : 0.0); }

namespace detail {

// phi extended oddly through a tip; open ends are not extended.
inline double phi_at(const RotProfile& p, int i) {
    const int n = p.N();
    if (i < 0) return -p.phi[-i];
    if (i > n) return p.k1 > 0 ? -p.phi[2 * n - i] : std::numeric_limits<double>::quiet_NaN();
    return p.phi[i];
}

// Second-order curvature, used by the flow kernel.
inline std::vector<double> curvature2(const RotProfile& p) {
    const int n = p.N();
    const double h2 = p.h() * p.h();
    std::vector<double> K(n + 1);
    for (int i = 1; i < n; ++i) K[i] = -(p.phi[i + 1] - 2 * p.phi[i] + p.phi[i - 1]) / (h2 * p.phi[i]);
    K[0] = (4 * K[1] - K[2]) / 3;
    K[n] = p.k1 > 0 ? (4 * K[n - 1] - K[n - 2]) / 3 : 2 * K[n - 1] - K[n - 2];
    return K;
}

}  // namespace detail

// Gauss curvature K = -phi''/phi, fourth-order in the interior, tips by even extrapolation.
inline std::vector<double> gauss_curvature(const RotProfile& p) {
    check_profile(p);
    const int n = p.N();
    const double h2 = p.h() * p.h();
    std::vector<double> K(n + 1);
    for (int i = 1; i < n; ++i) {
        bool near_open = p.k1 == 0 && i >= n - 1;
        double d2;
        if (near_open) {
            d2 = (p.phi[i + 1] - 2 * p.phi[i] + p.phi[i - 1]) / h2;
        } else {
            d2 = (-detail::phi_at(p, i + 2) + 16 * detail::phi_at(p, i + 1) - 30 * p.phi[i] +
                  16 * detail::phi_at(p, i - 1) - detail::phi_at(p, i - 2)) /
                 (12 * h2);
        }
        K[i] = -d2 / p.phi[i];
    }
    K[0] = (15 * K[1] - 6 * K[2] + K[3]) / 10;
    K[n] = p.k1 > 0 ? (15 * K[n - 1] - 6 * K[n - 2] + K[n - 3]) / 10 : 2 * K[n - 1] - K[n - 2];
    return K;
}

// Total curvature by Simpson quadrature of K*phi (trapezoid when N is odd).
inline double gauss_bonnet(const RotProfile& p) {
    if (!p.closed()) throw InvariantError("gauss_bonnet needs a closed profile (two tips)");
    auto K = gauss_curvature(p);
    const int n = p.N();
    double s = 0;
    if (n % 2 == 0) {
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * K[i] * p.phi[i];
        s *= p.h() / 3;
    } else {
        for (int i = 1; i < n; ++i) s += K[i] * p.phi[i];
        s *= p.h();
    }
    return 2 * std::numbers::pi * s;
}

// sup |K - Kbar| with Kbar = (integral of K dA) / A.
inline double curvature_spread(const RotProfile& p) {
    auto K = gauss_curvature(p);
    double kbar = gauss_bonnet(p) / area(p);
    double m = 0;
    for (double k : K) m = std::max(m, std::abs(k - kbar));
    return m;
}

enum class Normalization { None, AreaPreserving };

struct Flow2Params {
    double dt = 0;  // 0 selects 0.2*h^2
    Normalization normalization = Normalization::AreaPreserving;
    double tol = 1e-4;
    double cfl = 0.2;
};

struct Flow2State {
    RotProfile profile;
    double t = 0;
    long long steps = 0;
    double area0 = 0;  // target area under the area-preserving flow
};

namespace detail {

struct Rhs {
    std::vector<double> dphi;
    double dL = 0;
    double r = 0;
};

// Eulerian form on rho = xi/L: phi_t = phi_xixi + (r/2) phi - phi_xi (W - rho W(L)),
// W(xi) = int_0^xi (r/2 - K), dL/dt = W(L). The area-preserving rate r solves dA_h/dt = 0.
inline Rhs flow_rhs(const RotProfile& p, Normalization norm) {
    const int n = p.N();
    const double h = p.h();
    auto K = curvature2(p);
    std::vector<double> W0(n + 1, 0.0), F(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) W0[i] = W0[i - 1] - 0.5 * h * (K[i] + K[i - 1]);
    double sumF = 0, S = 0;
    for (int i = 1; i < n; ++i) {
        double rho = static_cast<double>(i) / n;
        double dxi = (p.phi[i + 1] - p.phi[i - 1]) / (2 * h);
        F[i] = -K[i] * p.phi[i] - dxi * (W0[i] - rho * W0[n]);
        sumF += F[i];
        S += p.phi[i];
    }
    Rhs out;
    if (norm == Normalization::AreaPreserving) out.r = -2 * (W0[n] * S + p.L * sumF) / (2 * p.L * S);
    out.dphi.assign(n + 1, 0.0);
    for (int i = 1; i < n; ++i) out.dphi[i] = F[i] + 0.5 * out.r * p.phi[i];
    out.dL = W0[n] + 0.5 * out.r * p.L;
    return out;
}

}  // namespace detail

// Near a tip phi = s*xi + c*xi^3 + e*xi^5 with s = 1/k fixed by the cone angle. The node next to
// the tip is slaved to nodes 2 and 3 through that expansion so the angle cannot drift.
inline void apply_tip_closure(RotProfile& p) {
    const int n = p.N();
    const double h = p.h();
    auto closure = [h](double s, double f2, double f3) { return 2.0 / 3.0 * s * h + (9 * f2 - f3) / 45; };
    p.phi[0] = 0;
    p.phi[1] = closure(1.0 / p.k0, p.phi[2], p.phi[3]);
    if (p.k1 > 0) {
        p.phi[n] = 0;
        p.phi[n - 1] = closure(1.0 / p.k1, p.phi[n - 2], p.phi[n - 3]);
    }
}

inline double stable_dt(const RotProfile& p, const Flow2Params& params) { return params.cfl * p.h() * p.h(); }

// One explicit midpoint step of the unnormalized or area-preserving Ricci flow.
inline Flow2State flow_step(const Flow2State& s, const Flow2Params& params) {
    const RotProfile& p = s.profile;
    check_profile(p);
    if (!p.closed()) throw InvariantError("flow_step needs a closed profile");
    double bound = stable_dt(p, params);
    double dt = params.dt > 0 ? params.dt : bound;
    if (dt > 0.5 * p.h() * p.h() + 1e-300) throw NumericError("dt exceeds the explicit stability bound 0.5*h^2");
    auto k1 = detail::flow_rhs(p, params.normalization);
    RotProfile mid = p;
    for (int i = 1; i < p.N(); ++i) mid.phi[i] += 0.5 * dt * k1.dphi[i];
    mid.L += 0.5 * dt * k1.dL;
    apply_tip_closure(mid);
    check_profile(mid);
    auto k2 = detail::flow_rhs(mid, params.normalization);
    Flow2State out = s;
    for (int i = 1; i < p.N(); ++i) out.profile.phi[i] += dt * k2.dphi[i];
    out.profile.L += dt * k2.dL;
    apply_tip_closure(out.profile);
    for (int i = 1; i < p.N(); ++i)
        if (!(out.profile.phi[i] > 0))
            throw NumericError("extinction: phi <= 0 at node " + std::to_string(i) + ", t = " + std::to_string(s.t + dt));
    if (!(out.profile.L > 0)) throw NumericError("extinction: length collapsed");
    if (params.normalization == Normalization::AreaPreserving) {
        // homothety back to the target area removes the O(dt^2) drift of the bilinear area functional
        double target = s.area0 > 0 ? s.area0 : area(p);
        double lam = std::sqrt(target / area(out.profile));
        for (double& v : out.profile.phi) v *= lam;
        out.profile.L *= lam;
        out.area0 = target;
    }
    out.t = s.t + dt;
    out.steps = s.steps + 1;
    return out;
}

// Shrinking-soliton residual sup |(r/2 - K) - W phi'/phi| over the freely evolving nodes; vanishes
// on a fixed point of the area-preserving flow in this gauge (potential f' = W, f(pole) = 0).
inline double soliton_residual(const RotProfile& p) {
    auto rhs = detail::flow_rhs(p, Normalization::AreaPreserving);
    const int n = p.N();
    double m = 0;
    for (int i = 2; i < n - 1; ++i) m = std::max(m, std::abs(rhs.dphi[i] / p.phi[i]));
    return std::max(m, std::abs(rhs.dL) / p.L);
}

// ---- seeds ----

inline RotProfile round_sphere(int N = 200, double radius = 1.0) {
    RotProfile p;
    p.L = std::numbers::pi * radius;
    p.phi.resize(N + 1);
    for (int i = 0; i <= N; ++i) p.phi[i] = radius * std::sin(std::numbers::pi * i / N);
    p.phi[0] = p.phi[N] = 0;
    return p;
}

// phi = sin(xi)/k on [0, pi], optionally multiplied by 1 + eps sin^2(pi rho)(1 + cos(pi rho)).
inline RotProfile football(int k, int N = 200, double eps = 0.0) {
    if (k < 1) throw InvariantError("cone order must be >= 1");
    RotProfile p;
    p.k0 = p.k1 = k;
    p.L = std::numbers::pi;
    p.phi.resize(N + 1);
    for (int i = 0; i <= N; ++i) {
        double rho = static_cast<double>(i) / N;
        double s = std::sin(std::numbers::pi * rho);
        p.phi[i] = std::sin(p.L * rho) / k * (1 + eps * s * s * (1 + std::cos(std::numbers::pi * rho)));
    }
    p.phi[0] = p.phi[N] = 0;
    return p;
}

// Teardrop S2(k): smooth pole at xi = 0, cone tip of order k at xi = L, area 2*pi*chi.
inline RotProfile teardrop(int k, int N = 200) {
    if (k < 1) throw InvariantError("cone order must be >= 1");
    const double a = 0.5 * (1 + 1.0 / k), b = 0.5 * (1 - 1.0 / k);
    const double chi = 1 + 1.0 / k;
    RotProfile p;
    p.k0 = 1;
    p.k1 = k;
    p.L = std::sqrt(std::numbers::pi * std::numbers::pi * chi / (2 * a));
    p.phi.resize(N + 1);
    for (int i = 0; i <= N; ++i) {
        double rho = static_cast<double>(i) / N;
        p.phi[i] = p.L / std::numbers::pi * std::sin(std::numbers::pi * rho) * (a + b * std::cos(std::numbers::pi * rho));
    }
    p.phi[0] = p.phi[N] = 0;
    return p;
}

// Open flat cone phi = xi/k on [0, L]; second end is a boundary.
inline RotProfile flat_cone(int k, int N = 100, double L = 1.0) {
    RotProfile p;
    p.k0 = k;
    p.k1 = 0;
    p.L = L;
    p.phi.resize(N + 1);
    for (int i = 0; i <= N; ++i) p.phi[i] = L * i / N / k;
    return p;
}

// ---- soliton shooting oracle ----

// Rotational shrinking solitons satisfy W = c*phi, hence phi'' = -lambda*phi + c*phi*phi' with
// phi(0) = 0, phi'(0) = 1. With lambda = 1 the area is 2*pi*chi. The tip slope at the first zero
// of phi is matched to -1/k by bisection on c.
struct SolitonShot {
    double c = 0;
    double L = 0;
    double tip_slope = 0;  // phi'(L)
    std::vector<double> xi, phi, dphi;  // dense RK4 samples, last one at the zero

    double phi_at(double x) const {
        if (x <= 0) return 0;
        if (x >= L) return 0;
        auto it = std::upper_bound(xi.begin(), xi.end(), x);
        std::size_t j = static_cast<std::size_t>(it - xi.begin());
        if (j == 0) j = 1;
        if (j >= xi.size()) j = xi.size() - 1;
        // cubic Hermite on [xi[j-1], xi[j]]
        double x0 = xi[j - 1], x1 = xi[j], hh = x1 - x0, t = (x - x0) / hh;
        double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t), h01 = t * t * (3 - 2 * t),
               h11 = t * t * (t - 1);
        return h00 * phi[j - 1] + h10 * hh * dphi[j - 1] + h01 * phi[j] + h11 * hh * dphi[j];
    }
};

inline SolitonShot soliton_integrate(double c, double step = 1e-4, double lambda = 1.0) {
    SolitonShot s;
    s.c = c;
    double x = 0, y = 0, v = 1;
    auto f = [&](double yy, double vv) { return -lambda * yy + c * yy * vv; };
    s.xi.push_back(0);
    s.phi.push_back(0);
    s.dphi.push_back(1);
    const double xmax = 50.0;
    while (x < xmax) {
        double k1y = v, k1v = f(y, v);
        double k2y = v + 0.5 * step * k1v, k2v = f(y + 0.5 * step * k1y, v + 0.5 * step * k1v);
        double k3y = v + 0.5 * step * k2v, k3v = f(y + 0.5 * step * k2y, v + 0.5 * step * k2v);
        double k4y = v + step * k3v, k4v = f(y + step * k3y, v + step * k3v);
        double ny = y + step / 6 * (k1y + 2 * k2y + 2 * k3y + k4y);
        double nv = v + step / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
        if (ny <= 0 && x > step) {
            // event: locate the zero with Newton on the cubic Hermite interpolant
            double t = y / (y - ny);
            for (int it = 0; it < 30; ++it) {
                double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t), h01 = t * t * (3 - 2 * t),
                       h11 = t * t * (t - 1);
                double val = h00 * y + h10 * step * v + h01 * ny + h11 * step * nv;
                double d00 = 6 * t * t - 6 * t, d10 = 3 * t * t - 4 * t + 1, d01 = -6 * t * t + 6 * t, d11 = 3 * t * t - 2 * t;
                double der = d00 * y + d10 * step * v + d01 * ny + d11 * step * nv;
                double dt = val / der;
                t -= dt;
                if (std::abs(dt) < 1e-15) break;
            }
            double d00 = 6 * t * t - 6 * t, d10 = 3 * t * t - 4 * t + 1, d01 = -6 * t * t + 6 * t, d11 = 3 * t * t - 2 * t;
            double slope = (d00 * y + d10 * step * v + d01 * ny + d11 * step * nv) / step;
            s.L = x + t * step;
            s.tip_slope = slope;
            s.xi.push_back(s.L);
            s.phi.push_back(0);
            s.dphi.push_back(slope);
            return s;
        }
        x += step;
        y = ny;
        v = nv;
        s.xi.push_back(x);
        s.phi.push_back(y);
        s.dphi.push_back(v);
    }
    throw NumericError("soliton_integrate: no zero of phi before xi = 50");
}

// Bisection on c in [c_lo, c_hi]; the bracket must straddle the target tip slope -1/k.
inline SolitonShot soliton_shoot(int k, double c_lo, double c_hi, double tol = 1e-12) {
    if (k < 1) throw InvariantError("soliton_shoot: k must be >= 1");
    const double target = 1.0 / k;
    auto g = [&](double c) { return -soliton_integrate(c, 1e-3).tip_slope - target; };
    if (k == 1) return soliton_integrate(0.0);
    double glo = g(c_lo), ghi = g(c_hi);
    if (glo * ghi > 0) throw NumericError("soliton_shoot: bracket does not straddle the tip condition");
    // coarse bisection with a cheap step, then refine with the production step
    for (int it = 0; it < 200 && c_hi - c_lo > 1e-9; ++it) {
        double m = 0.5 * (c_lo + c_hi);
        double gm = g(m);
        if ((gm < 0) == (glo < 0)) {
            c_lo = m;
            glo = gm;
        } else {
            c_hi = m;
        }
    }
    auto gf = [&](double c) { return -soliton_integrate(c).tip_slope - target; };
    double a = c_lo - 1e-6, b = c_hi + 1e-6;
    double ga = gf(a), gb = gf(b);
    if (ga * gb > 0) {
        a = c_lo - 1e-3;
        b = c_hi + 1e-3;
        ga = gf(a);
        gb = gf(b);
        if (ga * gb > 0) throw NumericError("soliton_shoot: refinement bracket lost");
    }
    for (int it = 0; it < 200 && b - a > tol; ++it) {
        double m = 0.5 * (a + b);
        double gm = gf(m);
        if ((gm < 0) == (ga < 0)) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    return soliton_integrate(0.5 * (a + b));
}

// Default bracket [c_lo, 0] with c_lo doubled until it straddles the tip condition.
inline SolitonShot soliton_shoot(int k) {
    if (k == 1) return soliton_integrate(0.0);
    double lo = -2.0;
    for (int i = 0; i < 12; ++i, lo *= 2) {
        double g = -soliton_integrate(lo, 1e-3).tip_slope - 1.0 / k;
        if (g < 0) return soliton_shoot(k, lo, 0.0);
    }
    throw NumericError("soliton_shoot: no bracket found for k = " + std::to_string(k));
}

inline RotProfile to_profile(const SolitonShot& s, int k, int N) {
    RotProfile p;
    p.k0 = 1;
    p.k1 = k;
    p.L = s.L;
    p.phi.resize(N + 1);
    for (int i = 0; i <= N; ++i) p.phi[i] = s.phi_at(s.L * i / N);
    p.phi[0] = p.phi[N] = 0;
    return p;
}

// sup over xi in [0, min(L_p, L_s)] of |phi_p(xi) - phi_s(xi)|, phi_p sampled at its nodes.
inline double sup_distance(const RotProfile& p, const SolitonShot& s) {
    double m = 0;
    auto x = p.xi();
    for (int i = 0; i <= p.N(); ++i) {
        double xx = std::min(x[i], s.L);
        double v = (x[i] > s.L) ? 0.0 : s.phi_at(xx);
        m = std::max(m, std::abs(p.phi[i] - v));
    }
    return m;
}

struct SolitonRun {
    Flow2State state;
    double residual = 0;
    bool converged = false;
};

// Area-preserving flow from a teardrop seed (round sphere when k = 1) until the soliton residual
// drops below tol.
inline SolitonRun run_to_soliton(int k, int N = 200, double tol = 1e-5, double t_max = 100.0,
                                 const std::function<void(const Flow2State&)>& observe = {}) {
    Flow2Params params;
    params.normalization = Normalization::AreaPreserving;
    SolitonRun run;
    run.state.profile = teardrop(k, N);
    run.state.area0 = area(run.state.profile);
    const int check_every = 200;
    while (run.state.t < t_max) {
        for (int i = 0; i < check_every; ++i) run.state = flow_step(run.state, params);
        if (observe) observe(run.state);
        run.residual = soliton_residual(run.state.profile);
        if (run.residual < tol) {
            run.converged = true;
            return run;
        }
    }
    throw NumericError("run_to_soliton: residual " + std::to_string(run.residual) + " above tol at t = " +
                       std::to_string(run.state.t));
}

}  // namespace orbiflow
