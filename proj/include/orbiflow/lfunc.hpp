#pragma once

#include "orbiflow/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace orbiflow {

// Model flows in backward time tau = t0 - tau, basepoint p at the chart origin (a fixed point of
// the group). Chart coordinates: flat uses the distance to p, the round model the angle from p
// along a great circle, the cylinder (angle, axial z). All metrics are diagonal and spatially
// homogeneous in these charts, so L-geodesics from p stay in them.
enum class ModelKind { Flat, Sphere, Cylinder, ConstantR };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Flat: return "flat";
        case ModelKind::Sphere: return "sphere";
        case ModelKind::Cylinder: return "cylinder";
        case ModelKind::ConstantR: return "constant-R";
    }
    return "?";
}

struct ModelFlowSpec {
    ModelKind kind = ModelKind::Flat;
    int n = 2;
    long long group_order = 1;
    double T0 = 1.0;  // squared radius of the round factor at tau = 0
    double R0 = 0.0;  // ConstantR only: a flat metric carrying a constant R term (test toy, not a flow)

    int chart_dim() const { return kind == ModelKind::Cylinder ? 2 : 1; }

    double radius2(double tau) const {
        if (kind == ModelKind::Sphere) return T0 + 2.0 * (n - 1) * tau;
        if (kind == ModelKind::Cylinder) return T0 + 2.0 * tau;
        return 1.0;
    }
    double R(double tau) const {
        switch (kind) {
            case ModelKind::Flat: return 0;
            case ModelKind::Sphere: return n * (n - 1) / radius2(tau);
            case ModelKind::Cylinder: return 2 / radius2(tau);
            case ModelKind::ConstantR: return R0;
        }
        return 0;
    }
    double g(int coord, double tau) const {
        if (kind == ModelKind::Sphere || (kind == ModelKind::Cylinder && coord == 0)) return radius2(tau);
        return 1.0;
    }
    // d/dtau log g = 2 Ric/g along the coordinate direction
    double dlog_g(int coord, double tau) const {
        if (kind == ModelKind::Sphere) return 2.0 * (n - 1) / radius2(tau);
        if (kind == ModelKind::Cylinder && coord == 0) return 2.0 / radius2(tau);
        return 0;
    }
    // Upper end of each chart coordinate (infinite for Euclidean directions)
    double chart_limit(int coord) const {
        if (kind == ModelKind::Sphere || (kind == ModelKind::Cylinder && coord == 0)) return std::numbers::pi;
        return std::numeric_limits<double>::infinity();
    }
};

inline void validate(const ModelFlowSpec& m) {
    if (m.group_order < 1) throw InvariantError("group order must be >= 1");
    if (m.kind == ModelKind::Cylinder && m.n != 3) throw InvariantError("cylinder model is 3-dimensional");
    if (m.n < 2 || m.n > 3) throw InvariantError("model dimension must be 2 or 3");
    if (!(m.T0 > 0)) throw InvariantError("T0 must be positive");
}

inline ModelFlowSpec flat_model(int n, long long m = 1) { return {ModelKind::Flat, n, m, 1.0, 0.0}; }
inline ModelFlowSpec round_model(int n, long long order = 1, double T0 = 1.0) { return {ModelKind::Sphere, n, order, T0, 0.0}; }
inline ModelFlowSpec cylinder_model(long long order = 1, double T0 = 1.0) { return {ModelKind::Cylinder, 3, order, T0, 0.0}; }
inline ModelFlowSpec constant_r_toy(int n, double R0) { return {ModelKind::ConstantR, n, 1, 1.0, R0}; }

using ChartPoint = std::array<double, 2>;

// Samples in sigma = sqrt(tau); y[i] is the chart position at tau = sigma[i]^2.
struct LPath {
    std::vector<double> sigma;
    std::vector<ChartPoint> y;
    double tau_bar = 0;
};

// L(gamma) = int 2 sigma^2 R dsigma + int (1/2) g |dY/dsigma|^2 dsigma.
inline double l_functional(const ModelFlowSpec& m, const LPath& path) {
    const std::size_t k = path.sigma.size();
    if (k < 2 || path.y.size() != k) throw InvariantError("l_functional: path needs matching samples");
    if (path.sigma.front() != 0) throw InvariantError("l_functional: path must start at tau = 0");
    for (std::size_t i = 0; i < k; ++i)
        for (int c = 0; c < m.chart_dim(); ++c)
            if (std::abs(path.y[i][c]) > m.chart_limit(c) + 1e-12) throw NumericError("l_functional: path exits chart");
    bool uniform = true;
    const double ds = path.sigma[1] - path.sigma[0];
    for (std::size_t i = 1; i < k; ++i)
        if (std::abs(path.sigma[i] - path.sigma[i - 1] - ds) > 1e-12 * path.sigma.back()) uniform = false;
    auto fR = [&](std::size_t i) { return 2 * path.sigma[i] * path.sigma[i] * m.R(path.sigma[i] * path.sigma[i]); };
    double rpart = 0;
    if (uniform && (k - 1) % 2 == 0) {
        for (std::size_t i = 0; i < k; ++i) rpart += (i == 0 || i == k - 1 ? 1 : (i % 2 ? 4 : 2)) * fR(i);
        rpart *= ds / 3;
    } else {
        for (std::size_t i = 1; i < k; ++i) rpart += 0.5 * (fR(i) + fR(i - 1)) * (path.sigma[i] - path.sigma[i - 1]);
    }
    double kin = 0;
    for (std::size_t i = 1; i < k; ++i) {
        double dsig = path.sigma[i] - path.sigma[i - 1];
        double smid = 0.5 * (path.sigma[i] + path.sigma[i - 1]);
        for (int c = 0; c < m.chart_dim(); ++c) {
            double d = (path.y[i][c] - path.y[i - 1][c]) / dsig;
            kin += 0.5 * m.g(c, smid * smid) * d * d * dsig;
        }
    }
    return rpart + kin;
}

// L-geodesic from p with v = lim sqrt(tau) dgamma/dtau. In sigma the equation reads
// Y'' = -2 sigma (d log g/dtau) Y', Y(0) = 0, Y'(0) = 2v; explicit midpoint steps.
inline LPath l_geodesic_shoot(const ModelFlowSpec& m, ChartPoint v, double tau_bar, int steps = 400) {
    if (!(tau_bar > 0)) throw InvariantError("l_geodesic_shoot: tau_bar must be positive");
    if (steps < 2) throw InvariantError("l_geodesic_shoot: need at least 2 steps");
    LPath path;
    path.tau_bar = tau_bar;
    const double sb = std::sqrt(tau_bar), ds = sb / steps;
    ChartPoint y{0, 0}, pv{2 * v[0], 2 * v[1]};
    path.sigma.push_back(0);
    path.y.push_back(y);
    for (int i = 0; i < steps; ++i) {
        double s0 = i * ds, sm = s0 + 0.5 * ds;
        ChartPoint pm;
        for (int c = 0; c < 2; ++c) pm[c] = pv[c] - ds * s0 * m.dlog_g(c, s0 * s0) * pv[c];
        for (int c = 0; c < 2; ++c) {
            double acc = -2 * sm * m.dlog_g(c, sm * sm) * pm[c];
            y[c] += ds * pm[c];
            pv[c] += ds * acc;
        }
        if (!std::isfinite(y[0]) || !std::isfinite(y[1])) throw NumericError("l_geodesic_shoot: blowup");
        path.sigma.push_back((i + 1) * ds);
        path.y.push_back(y);
    }
    if (m.chart_dim() == 1) {
        for (auto& p : path.y) p[1] = 0;
    }
    return path;
}

struct ReducedLength {
    double l = 0;
    double L = 0;
    ChartPoint v{0, 0};
};

// Minimizing L-geodesic to q found by shooting; the endpoint map is solved coordinate-wise with
// secant iterations (it is linear in v for these models, so one iteration suffices).
inline ReducedLength reduced_length(const ModelFlowSpec& m, ChartPoint q, double tau_bar, int steps = 400) {
    validate(m);
    for (int c = 0; c < m.chart_dim(); ++c)
        if (std::abs(q[c]) > m.chart_limit(c)) throw InvariantError("reduced_length: q outside the chart");
    if (m.chart_dim() == 1) q[1] = 0;
    ReducedLength out;
    ChartPoint unit{1, 1};
    auto probe = l_geodesic_shoot(m, unit, tau_bar, steps).y.back();
    for (int c = 0; c < m.chart_dim(); ++c) {
        if (!(std::abs(probe[c]) > 0)) throw NumericError("reduced_length: degenerate endpoint map");
        out.v[c] = q[c] / probe[c];
    }
    for (int it = 0; it < 8; ++it) {
        auto end = l_geodesic_shoot(m, out.v, tau_bar, steps).y.back();
        double err = 0;
        for (int c = 0; c < m.chart_dim(); ++c) {
            double r = end[c] - q[c];
            err = std::max(err, std::abs(r));
            out.v[c] -= r / probe[c];
        }
        if (err < 1e-13 * (1 + std::abs(q[0]) + std::abs(q[1]))) break;
        if (it == 7) throw NumericError("reduced_length: shooting did not converge");
    }
    auto path = l_geodesic_shoot(m, out.v, tau_bar, steps);
    out.L = l_functional(m, path);
    out.l = out.L / (2 * std::sqrt(tau_bar));
    return out;
}

struct QuadratureSpec {
    int nodes = 800;       // Simpson intervals per integrated coordinate
    int path_steps = 400;  // steps per L-geodesic
    double cutoff = 7.0;   // truncate where the Gaussian lower bound reaches e^(-cutoff^2)
};

struct ReducedVolume {
    double value = 0;
    double tail_bound = 0;  // bound on the truncated tail relative to the Gaussian value
};

namespace detail {

template <class F>
double simpson(F&& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(a + i * h);
    return s * h / 3;
}

inline double sphere_area(int dim) {
    // area of the unit (dim-1)-sphere
    return dim == 2 ? 2 * std::numbers::pi : 4 * std::numbers::pi;
}

}  // namespace detail

// V(tau) = tau^(-n/2) int exp(-l) dvol over the quotient, as the smooth integral divided by the
// group order. Radial (and axial) quadrature by symmetry.
inline ReducedVolume reduced_volume(const ModelFlowSpec& m, double tau_bar, QuadratureSpec qs = {}) {
    validate(m);
    if (!(tau_bar > 0)) throw InvariantError("reduced_volume: tau_bar must be positive");
    ReducedVolume out;
    const double st = std::sqrt(tau_bar);
    auto l_at = [&](ChartPoint q) { return reduced_length(m, q, tau_bar, qs.path_steps).l; };
    out.tail_bound = std::exp(-qs.cutoff * qs.cutoff);
    double integral = 0;
    switch (m.kind) {
        case ModelKind::Flat:
        case ModelKind::ConstantR: {
            double rmax = 2 * st * qs.cutoff;
            integral = detail::simpson(
                [&](double r) { return detail::sphere_area(m.n) * std::pow(r, m.n - 1) * std::exp(-l_at({r, 0})); }, 0.0,
                rmax, qs.nodes);
            break;
        }
        case ModelKind::Sphere: {
            // l >= T0 theta^2/(4 tau), so the integrand is below the cutoff past theta_max
            double tmax = std::min(std::numbers::pi, 2 * st / std::sqrt(m.T0) * qs.cutoff);
            double a = m.radius2(tau_bar);
            integral = detail::simpson(
                [&](double th) {
                    return detail::sphere_area(m.n) * std::pow(a, 0.5 * m.n) * std::pow(std::sin(th), m.n - 1) *
                           std::exp(-l_at({th, 0}));
                },
                0.0, tmax, qs.nodes);
            if (tmax >= std::numbers::pi) out.tail_bound = 0;
            break;
        }
        case ModelKind::Cylinder: {
            // the kinetic terms decouple: l(theta, z) = l(theta, 0) + l(0, z) - l(0, 0)
            double l0 = l_at({0, 0});
            double tmax = std::min(std::numbers::pi, 2 * st / std::sqrt(m.T0) * qs.cutoff);
            double zmax = 2 * st * qs.cutoff;
            double a = m.radius2(tau_bar);
            double ith = detail::simpson(
                [&](double th) { return 2 * std::numbers::pi * a * std::sin(th) * std::exp(-(l_at({th, 0}) - l0)); }, 0.0,
                tmax, qs.nodes);
            double iz = 2 * detail::simpson([&](double z) { return std::exp(-(l_at({0, z}) - l0)); }, 0.0, zmax, qs.nodes);
            integral = std::exp(-l0) * ith * iz;
            break;
        }
    }
    out.value = std::pow(tau_bar, -0.5 * m.n) * integral / static_cast<double>(m.group_order);
    return out;
}

struct ReducedVolumeCurve {
    std::vector<std::pair<double, double>> samples;  // (tau_bar, V)
    bool monotone = true;
    int violation = -1;
};

struct MonotoneVerdict {
    bool pass = true;
    int violating_index = -1;  // first i with V[i] > V[i-1] + tol
};

inline MonotoneVerdict check_monotone(const ReducedVolumeCurve& c, double tol = 1e-5) {
    if (c.samples.size() < 2) throw InvariantError("check_monotone: need at least 2 samples");
    for (std::size_t i = 1; i < c.samples.size(); ++i)
        if (c.samples[i].second > c.samples[i - 1].second + tol) return {false, static_cast<int>(i)};
    return {};
}

inline ReducedVolumeCurve reduced_volume_curve(const ModelFlowSpec& m, const std::vector<double>& taus,
                                               QuadratureSpec qs = {}, double tol = 1e-5) {
    ReducedVolumeCurve c;
    for (double t : taus) c.samples.emplace_back(t, reduced_volume(m, t, qs).value);
    if (c.samples.size() >= 2) {
        auto v = check_monotone(c, tol);
        c.monotone = v.pass;
        c.violation = v.violating_index;
    }
    return c;
}

// Geometric grid a, ..., b with `count` points.
inline std::vector<double> geometric_grid(double a, double b, int count) {
    if (!(a > 0 && b > a) || count < 2) throw InvariantError("tau grid needs 0 < a < b and at least 2 points");
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i) out[i] = a * std::pow(b / a, static_cast<double>(i) / (count - 1));
    out.back() = b;
    return out;
}

struct MinLength {
    ChartPoint q{0, 0};
    double l = 0;
};

// Coarse grid per chart coordinate, then golden-section refinement; ties go to the point closer to p.
inline MinLength min_reduced_length(const ModelFlowSpec& m, double tau_bar, int coarse = 41, int steps = 400) {
    validate(m);
    const double st = std::sqrt(tau_bar);
    MinLength best;
    best.l = reduced_length(m, {0, 0}, tau_bar, steps).l;
    for (int c = 0; c < m.chart_dim(); ++c) {
        double hi = std::min(m.chart_limit(c), 20 * st);
        auto f = [&](double x) {
            ChartPoint q = best.q;
            q[c] = x;
            return reduced_length(m, q, tau_bar, steps).l;
        };
        int bi = 0;
        double bl = f(0);
        for (int i = 1; i <= coarse; ++i) {
            double x = hi * i / coarse;
            double v = f(x);
            if (v < bl - 1e-14) {
                bl = v;
                bi = i;
            }
        }
        double a = hi * std::max(0, bi - 1) / coarse, b = hi * std::min(coarse, bi + 1) / coarse;
        const double gr = (std::sqrt(5.0) - 1) / 2;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = f(x1), f2 = f(x2);
        for (int it = 0; it < 60 && b - a > 1e-10; ++it) {
            if (f1 <= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = f(x2);
            }
        }
        double xm = 0.5 * (a + b), fm = f(xm);
        if (fm < bl - 1e-14) {
            best.q[c] = xm;
            best.l = fm;
        } else {
            best.q[c] = hi * bi / coarse;
            best.l = bl;
        }
    }
    return best;
}

}  // namespace orbiflow
