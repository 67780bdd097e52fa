#ifndef OVALS_EVOLVE_HPP
#define OVALS_EVOLVE_HPP

// Front-tracking solver for mean curvature flow of closed convex bodies of
// revolution. The generator curve, not the graph U(x, t), is evolved: the
// graph form degenerates at the axis points while the curve form handles
// them through the umbilic tip limit. Includes the run driver with CFL
// control and step-halving retry, extinction-time estimation, parabolic
// rescaling around the extinction time, the pointwise rescaled evolution
// operator, and the tip flip / tip zoom changes of variables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ovals/geometry.hpp"
#include "ovals/grid.hpp"

namespace ovals {

// Generator curve of the spheroid x^2/a^2 + r^2/b^2 = 1, sampled at N
// points equi-spaced in the ellipse parameter, left tip first.
inline ParametricCurve init_ellipsoid(int n, double a, double b,
                                      std::size_t N) {
    if (n < 2) throw std::invalid_argument("init_ellipsoid: n must be >= 2");
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("init_ellipsoid: semi-axes must be positive");
    if (N < 64) throw std::invalid_argument("init_ellipsoid: need N >= 64");
    ParametricCurve c;
    c.n = n;
    c.t = 0.0;
    c.x.resize(N);
    c.r.resize(N);
    double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < N; i++) {
        double s = pi * double(i) / double(N - 1);
        c.x[i] = -a * std::cos(s);
        c.r[i] = b * std::sin(s);
    }
    c.x.front() = -a;
    c.x.back() = a;
    c.r.front() = 0.0;
    c.r.back() = 0.0;
    c.validate();
    return c;
}

// Area between the generator arc and the axis. Extinction of the closed
// body and of this area happen together, so it serves as the stop signal.
inline double enclosed_area(const ParametricCurve& c) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < c.x.size(); i++)
        s += 0.5 * (c.r[i] + c.r[i + 1]) * (c.x[i + 1] - c.x[i]);
    return s;
}

// Axial coordinate of the enclosed-volume centroid: the solid of revolution
// has volume element proportional to r^n dx.
inline double volume_centroid(const ParametricCurve& c) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < c.x.size(); i++) {
        double dx = c.x[i + 1] - c.x[i];
        double f0 = std::pow(c.r[i], c.n), f1 = std::pow(c.r[i + 1], c.n);
        num += 0.5 * (c.x[i] * f0 + c.x[i + 1] * f1) * dx;
        den += 0.5 * (f0 + f1) * dx;
    }
    if (!(den > 0.0))
        throw std::invalid_argument("volume_centroid: degenerate curve");
    return num / den;
}

inline double max_mean_curvature(const ParametricCurve& c) {
    CurveCurvatures k = curve_curvatures(c);
    double m = 0.0;
    for (double v : k.H) m = std::max(m, v);
    return m;
}

// Containment test for convex bodies of revolution sharing the axis: inner
// lies inside outer iff its tip span is contained and its radius is
// dominated at every abscissa.
inline bool curve_contains(const ParametricCurve& outer,
                           const ParametricCurve& inner) {
    outer.validate();
    inner.validate();
    if (inner.x.front() < outer.x.front() - 1e-12 ||
        inner.x.back() > outer.x.back() + 1e-12)
        return false;
    MonotoneCubic router(outer.x, outer.r);
    for (std::size_t i = 0; i < inner.x.size(); i++) {
        double xi = std::clamp(inner.x[i], outer.x.front(), outer.x.back());
        if (inner.r[i] > router(xi) + 1e-12) return false;
    }
    return true;
}

namespace detail {

// Redistribute nodes to uniform arclength. Pure tangential motion: the
// polygonal support changes only by the interpolation error, and monotone
// cubics keep r positive between the exact r = 0 endpoints.
inline ParametricCurve resample_uniform_arclength(const ParametricCurve& c) {
    std::vector<double> s = c.arc_param();
    MonotoneCubic fx(s, c.x), fr(s, c.r);
    std::size_t N = c.x.size();
    ParametricCurve out;
    out.n = c.n;
    out.t = c.t;
    out.x.resize(N);
    out.r.resize(N);
    double S = s.back();
    for (std::size_t i = 0; i < N; i++) {
        double si = S * double(i) / double(N - 1);
        out.x[i] = fx(si);
        out.r[i] = fr(si);
    }
    out.x.front() = c.x.front();
    out.x.back() = c.x.back();
    out.r.front() = 0.0;
    out.r.back() = 0.0;
    return out;
}

}  // namespace detail

inline double min_node_spacing(const ParametricCurve& c) {
    std::vector<double> s = c.arc_param();
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < s.size(); i++)
        h = std::min(h, s[i + 1] - s[i]);
    return h;
}

// One explicit Euler step of the flow: every node moves by -H nu dt with nu
// the outward normal; axis endpoints move along the axis with the umbilic
// limit H = n * (meridian curvature). Nodes are then redistributed to
// uniform arclength. Throws std::invalid_argument when dt violates the CFL
// restriction and std::runtime_error when the moved curve is invalid (a
// rejected step, which the driver retries with a smaller dt).
inline ParametricCurve mcf_step(const ParametricCurve& c, double dt,
                                double cfl = 0.2) {
    c.validate();
    double h_min = min_node_spacing(c);
    if (!(dt > 0.0))
        throw std::invalid_argument("mcf_step: dt must be positive");
    if (dt > cfl * h_min * h_min * (1.0 + 1e-12))
        throw std::invalid_argument("mcf_step: dt exceeds CFL limit");

    CurveCurvatures k = curve_curvatures(c);
    std::vector<double> s = c.arc_param();
    DerivativeTable dx = derivative_table(s, c.x);
    DerivativeTable dr = derivative_table(s, c.r);

    std::size_t m = c.x.size();
    ParametricCurve moved;
    moved.n = c.n;
    moved.t = c.t + dt;
    moved.x = c.x;
    moved.r = c.r;
    for (std::size_t i = 1; i + 1 < m; i++) {
        double g = std::sqrt(dx.d1[i] * dx.d1[i] + dr.d1[i] * dr.d1[i]);
        // Left-to-right over the top makes (-r', x') the outward normal.
        double nx = -dr.d1[i] / g, nr = dx.d1[i] / g;
        moved.x[i] -= dt * k.H[i] * nx;
        moved.r[i] -= dt * k.H[i] * nr;
    }
    moved.x.front() += dt * k.H.front();   // outward normal (-1, 0)
    moved.x.back() -= dt * k.H.back();     // outward normal (+1, 0)

    for (std::size_t i = 1; i + 1 < m; i++)
        if (!(moved.r[i] > 0.0))
            throw std::runtime_error("mcf_step: radius hit the axis, step rejected");
    for (std::size_t i = 0; i + 1 < m; i++)
        if (!(moved.x[i + 1] > moved.x[i]))
            throw std::runtime_error("mcf_step: lost axial monotonicity, step rejected");
    return detail::resample_uniform_arclength(moved);
}

struct FlowOptions {
    double dt = 1e-5;    // requested step, additionally capped by the CFL limit
    double cfl = 0.2;
    double t_end = std::numeric_limits<double>::infinity();
    double area_stop_fraction = 1e-4;  // extinction-imminent threshold
    std::size_t max_steps = 20000000;
    std::size_t target_snapshots = 400;
    std::vector<double> snapshot_times;  // extra mandatory snapshot times
};

struct FlowRun {
    std::vector<double> t;                // snapshot times
    std::vector<ParametricCurve> curves;  // snapshots, last state included
    std::vector<double> step_t;           // dense per-step series
    std::vector<double> step_rmax2;
    std::vector<double> step_area;
    bool extinction_imminent = false;
};

inline double max_radius(const ParametricCurve& c) {
    double m = 0.0;
    for (double v : c.r) m = std::max(m, v);
    return m;
}

// Time-step from the initial curve until the enclosed area falls under the
// stop fraction (extinction imminent), t_end arrives, or the step budget is
// exhausted. Stored snapshots are thinned on the fly to stay near the
// target count; requested snapshot_times are always stored (at the first
// accepted state past each time, exact when t_end-aligned).
inline FlowRun run_flow(ParametricCurve c, const FlowOptions& opts = {}) {
    c.validate();
    if (!(opts.dt > 0.0) || !(opts.cfl > 0.0))
        throw std::invalid_argument("run_flow: dt and cfl must be positive");
    std::vector<double> marks = opts.snapshot_times;
    std::sort(marks.begin(), marks.end());
    std::size_t next_mark = 0;
    while (next_mark < marks.size() && marks[next_mark] <= c.t) next_mark++;

    FlowRun run;
    double area0 = enclosed_area(c);
    std::size_t stride = 1, since_store = 0;
    auto record_scalars = [&](const ParametricCurve& cur) {
        double rm = max_radius(cur);
        run.step_t.push_back(cur.t);
        run.step_rmax2.push_back(rm * rm);
        run.step_area.push_back(enclosed_area(cur));
    };
    auto store = [&](const ParametricCurve& cur) {
        run.t.push_back(cur.t);
        run.curves.push_back(cur);
        if (run.curves.size() > 2 * opts.target_snapshots) {
            // Thin uniformly and double the stride, keeping first and last.
            std::vector<double> tt;
            std::vector<ParametricCurve> cc;
            for (std::size_t i = 0; i < run.curves.size(); i += 2) {
                tt.push_back(run.t[i]);
                cc.push_back(std::move(run.curves[i]));
            }
            run.t = std::move(tt);
            run.curves = std::move(cc);
            stride *= 2;
        }
    };

    record_scalars(c);
    store(c);
    for (std::size_t step = 0; step < opts.max_steps; step++) {
        double h_min = min_node_spacing(c);
        double dt = std::min(opts.dt, opts.cfl * h_min * h_min);
        if (c.t + dt > opts.t_end) dt = opts.t_end - c.t;
        if (!(dt > 0.0)) break;

        bool accepted = false;
        for (int tries = 0; tries < 60 && !accepted; tries++) {
            try {
                c = mcf_step(c, dt, opts.cfl);
                accepted = true;
            } catch (const std::runtime_error&) {
                dt *= 0.5;
                if (!(dt > 0.0))
                    throw std::runtime_error("run_flow: step size underflow");
            }
        }
        if (!accepted)
            throw std::runtime_error("run_flow: step rejected 60 times");

        record_scalars(c);
        bool must_store = false;
        while (next_mark < marks.size() && marks[next_mark] <= c.t) {
            next_mark++;
            must_store = true;
        }
        if (++since_store >= stride || must_store) {
            since_store = 0;
            store(c);
        }

        if (run.step_area.back() < opts.area_stop_fraction * area0) {
            run.extinction_imminent = true;
            break;
        }
        if (c.t >= opts.t_end) break;
    }
    if (run.t.back() < c.t) store(c);
    return run;
}

// Extinction time from the final stretch of a run: for a type-I singularity
// the squared max radius closes out linearly, r_max^2 ~ c (T - t), so a
// linear fit over the last fifth of the snapshots extrapolates T. Throws
// when the fit residual says the window is not yet in the linear regime.
inline double estimate_extinction(const FlowRun& run,
                                  double residual_tol = 0.05) {
    std::size_t m = run.curves.size();
    if (m < 5)
        throw std::invalid_argument("estimate_extinction: need >= 5 snapshots");
    std::size_t first = m - std::max<std::size_t>(3, m / 5);
    double st = 0, sr = 0, stt = 0, str = 0;
    std::size_t cnt = m - first;
    std::vector<double> ts(cnt), rs(cnt);
    for (std::size_t i = first; i < m; i++) {
        double rm = max_radius(run.curves[i]);
        ts[i - first] = run.t[i];
        rs[i - first] = rm * rm;
        st += run.t[i];
        sr += rm * rm;
        stt += run.t[i] * run.t[i];
        str += run.t[i] * rm * rm;
    }
    double denom = double(cnt) * stt - st * st;
    if (!(std::fabs(denom) > 0.0))
        throw std::runtime_error("estimate_extinction: degenerate time window");
    double beta = (double(cnt) * str - st * sr) / denom;
    double alpha = (sr - beta * st) / double(cnt);
    if (!(beta < 0.0))
        throw std::runtime_error("estimate_extinction: r^2 not decreasing");
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < cnt; i++) {
        worst = std::max(worst, std::fabs(alpha + beta * ts[i] - rs[i]));
        scale = std::max(scale, rs[i]);
    }
    if (worst > residual_tol * scale)
        throw std::runtime_error(
            "estimate_extinction: fit residual " + std::to_string(worst) +
            " exceeds " + std::to_string(residual_tol) + " * " +
            std::to_string(scale));
    return -alpha / beta;
}

// Parabolic rescaling around the extinction time: y = (x - xbar)/sqrt(T-t),
// u = r/sqrt(T-t), tau = -log(T-t), recentered at the enclosed-volume
// centroid. With grid_n = 0 the profile keeps the curve's own nodes (they
// cluster at the tips, which the flip window needs); a positive grid_n
// resamples onto that many uniform y nodes, tips included.
inline GridProfile rescale_profile(const ParametricCurve& c, double T,
                                   std::size_t grid_n = 0) {
    c.validate();
    if (!(T > c.t))
        throw std::invalid_argument("rescale_profile: need t < T");
    double lam = 1.0 / std::sqrt(T - c.t);
    double xbar = volume_centroid(c);
    GridProfile p;
    p.n = c.n;
    p.kind = ProfileKind::rescaled;
    p.tau = -std::log(T - c.t);
    std::size_t m = c.x.size();
    std::vector<double> y(m), u(m);
    for (std::size_t i = 0; i < m; i++) {
        y[i] = (c.x[i] - xbar) * lam;
        u[i] = c.r[i] * lam;
    }
    for (std::size_t i = 0; i + 1 < m; i++)
        if (!(y[i + 1] > y[i]))
            throw std::runtime_error("rescale_profile: non-monotone axial data");
    if (grid_n == 0) {
        p.y = std::move(y);
        p.u = std::move(u);
    } else {
        if (grid_n < 5)
            throw std::invalid_argument("rescale_profile: grid_n too small");
        MonotoneCubic fu(y, u);
        p.y = linspace(y.front(), y.back(), grid_n);
        p.u.resize(grid_n);
        for (std::size_t i = 0; i < grid_n; i++) p.u[i] = fu(p.y[i]);
        p.u.front() = 0.0;
        p.u.back() = 0.0;
    }
    p.validate();
    return p;
}

// Pointwise right-hand side of the rescaled evolution equation
//   u_tau = u_yy/(1+u_y^2) - (y/2) u_y - (n-1)/u + u/2.
// Zero identifies stationary rescaled solutions (cylinder, sphere).
inline double rescaled_rhs_point(double u, double u_y, double u_yy, double y,
                                 int n) {
    if (!(u > 0.0))
        throw std::invalid_argument("rescaled_rhs_point: u must be positive");
    return u_yy / (1.0 + u_y * u_y) - 0.5 * y * u_y - double(n - 1) / u +
           0.5 * u;
}

// Drop k nodes from each end; tips carry u = 0 which the evolution operator
// cannot evaluate.
inline GridProfile interior_slice(const GridProfile& p, std::size_t k) {
    if (p.y.size() < 2 * k + 5)
        throw std::invalid_argument("interior_slice: too few nodes");
    GridProfile q;
    q.n = p.n;
    q.tau = p.tau;
    q.kind = p.kind;
    q.y.assign(p.y.begin() + k, p.y.end() - k);
    q.u.assign(p.u.begin() + k, p.u.end() - k);
    q.validate();
    return q;
}

inline std::vector<double> rescaled_rhs(const GridProfile& p) {
    p.validate();
    if (p.kind != ProfileKind::rescaled)
        throw std::invalid_argument("rescaled_rhs: profile must be rescaled");
    for (double v : p.u)
        if (!(v > 0.0))
            throw std::invalid_argument("rescaled_rhs: u must be positive");
    DerivativeTable d = derivatives(p);
    std::vector<double> out(p.y.size());
    for (std::size_t i = 0; i < p.y.size(); i++)
        out[i] = rescaled_rhs_point(p.u[i], d.d1[i], d.d2[i], p.y[i], p.n);
    return out;
}

enum class TipSide { right, left };

// The profile near a tip, written as the inverse function Y(u, tau) on a
// uniform u grid in (0, 2 theta]. Y decreases in u at the right tip and
// increases at the left one; y_tip stores Y(0, tau) from the exact tip node.
struct TipProfile {
    int n = 2;
    double tau = 0.0;
    TipSide side = TipSide::right;
    double y_tip = 0.0;
    std::vector<double> u;
    std::vector<double> Y;

    void validate() const {
        if (u.size() < 3 || u.size() != Y.size())
            throw std::invalid_argument("TipProfile: need >= 3 matching nodes");
        for (std::size_t i = 0; i + 1 < u.size(); i++)
            if (!(u[i + 1] > u[i]))
                throw std::invalid_argument("TipProfile: u must increase");
        if (!(u.front() > 0.0))
            throw std::invalid_argument("TipProfile: u must start above 0");
        double sgn = (side == TipSide::right) ? -1.0 : 1.0;
        if (!(sgn * (Y.front() - y_tip) >= 0.0))
            throw std::invalid_argument("TipProfile: Y must move away from the tip");
        for (std::size_t i = 0; i + 1 < Y.size(); i++)
            if (!(sgn * (Y[i + 1] - Y[i]) > 0.0))
                throw std::invalid_argument("TipProfile: Y must be monotone");
    }
};

// The tip region zoomed to unit scale: rho = u sqrt|tau|,
// Z = sqrt|tau| (Y - Y(0)), mirrored at a left tip so that Z <= 0 always
// points along the body. The leading node stores the anchor (0, 0).
struct ZoomProfile {
    int n = 2;
    double tau = 0.0;
    double anchor = 0.0;  // Y(0, tau)
    std::vector<double> rho;
    std::vector<double> Z;

    void validate() const {
        if (rho.size() < 3 || rho.size() != Z.size())
            throw std::invalid_argument("ZoomProfile: need >= 3 matching nodes");
        if (rho.front() != 0.0 || Z.front() != 0.0)
            throw std::invalid_argument("ZoomProfile: must anchor at (0, 0)");
        double span = 0.0;
        for (double z : Z) span = std::max(span, std::fabs(z));
        double tol = 1e-10 * (1.0 + span);
        for (std::size_t i = 0; i + 1 < rho.size(); i++) {
            if (!(rho[i + 1] > rho[i]))
                throw std::invalid_argument("ZoomProfile: rho must increase");
            if (Z[i + 1] > Z[i] + tol)
                throw std::invalid_argument("ZoomProfile: Z must not increase");
        }
        if (Z.back() > tol)
            throw std::invalid_argument("ZoomProfile: Z must stay <= 0");
    }
};

// Inverse-function resample near a tip: Y(u) on a uniform u grid in
// (0, 2 theta]. The interpolation runs in v = u^2, in which a smooth convex
// tip is analytic (Y = y_tip - v/(2 c) + ...), so the square-root grading
// of u near the tip costs no accuracy. The profile must include the exact
// tip node on the chosen side.
inline TipProfile tip_flip(const GridProfile& p, double theta, TipSide side,
                           std::size_t flip_n = 256) {
    p.validate();
    if (!(theta > 0.0) || !(theta < 0.5))
        throw std::invalid_argument("tip_flip: need 0 < theta < 1/2");
    if (flip_n < 8) throw std::invalid_argument("tip_flip: flip_n too small");
    std::size_t m = p.y.size();
    bool right = (side == TipSide::right);
    if (right ? !(p.u.back() == 0.0) : !(p.u.front() == 0.0))
        throw std::invalid_argument("tip_flip: profile lacks the tip node");

    // Walk inward from the tip while u increases strictly, collecting the
    // inverse-function samples (v, y) with v = u^2.
    std::vector<double> v, yy;
    v.push_back(0.0);
    yy.push_back(right ? p.y.back() : p.y.front());
    double target = 2.0 * theta;
    std::size_t steps_avail = m - 1;
    double prev_u = 0.0;
    for (std::size_t k = 1; k <= steps_avail; k++) {
        std::size_t i = right ? m - 1 - k : k;
        double ui = p.u[i];
        if (!(ui > prev_u)) {
            if (prev_u >= target) break;
            throw std::invalid_argument(
                "tip_flip: u not monotone before reaching 2 theta");
        }
        v.push_back(ui * ui);
        yy.push_back(p.y[i]);
        prev_u = ui;
        if (ui >= target) break;
    }
    if (prev_u < target)
        throw std::invalid_argument("tip_flip: profile never reaches u = 2 theta");

    MonotoneCubic fy(v, yy);
    TipProfile tp;
    tp.n = p.n;
    tp.tau = p.tau;
    tp.side = side;
    tp.y_tip = yy.front();
    tp.u.resize(flip_n);
    tp.Y.resize(flip_n);
    for (std::size_t j = 0; j < flip_n; j++) {
        double uj = target * double(j + 1) / double(flip_n);
        tp.u[j] = uj;
        tp.Y[j] = fy(uj * uj);
    }
    tp.validate();
    return tp;
}

inline ZoomProfile tip_zoom(const TipProfile& tp) {
    tp.validate();
    if (!(tp.tau < 0.0))
        throw std::invalid_argument("tip_zoom: need tau < 0");
    double root = std::sqrt(-tp.tau);
    double sgn = (tp.side == TipSide::right) ? 1.0 : -1.0;
    ZoomProfile z;
    z.n = tp.n;
    z.tau = tp.tau;
    z.anchor = tp.y_tip;
    z.rho.resize(tp.u.size() + 1);
    z.Z.resize(tp.u.size() + 1);
    z.rho[0] = 0.0;
    z.Z[0] = 0.0;
    for (std::size_t j = 0; j < tp.u.size(); j++) {
        z.rho[j + 1] = tp.u[j] * root;
        z.Z[j + 1] = sgn * root * (tp.Y[j] - tp.y_tip);
    }
    z.validate();
    return z;
}

}  // namespace ovals

#endif
