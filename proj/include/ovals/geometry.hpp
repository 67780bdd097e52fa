#ifndef OVALS_GEOMETRY_HPP
#define OVALS_GEOMETRY_HPP

// Profile and generator-curve geometry for rotationally symmetric
// hypersurfaces in R^{n+1}. A surface of revolution with radius profile
// u(y) has principal curvatures
//   lambda1 = -u_yy / (1+u_y^2)^{3/2}   (meridian direction, 1 copy)
//   lambda2 =  1 / (u sqrt(1+u_y^2))    (rotation directions, n-1 copies)
// with the sign convention that makes both positive on a convex body with
// outward normal, so H = lambda1 + (n-1) lambda2 > 0 and the body shrinks.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ovals/grid.hpp"

namespace ovals {

enum class ProfileKind { rescaled, unrescaled };

// Radius profile over an axial window. Holds either the rescaled profile
// u(y, tau) or the unrescaled one U(x, t) (kind tells which; tau then holds
// t). Endpoints may carry u = 0 when the window includes a tip.
struct GridProfile {
    int n = 2;                // ambient dimension, surface lives in R^{n+1}
    double tau = 0.0;
    std::vector<double> y;
    std::vector<double> u;
    ProfileKind kind = ProfileKind::rescaled;

    void validate() const {
        if (n < 2) throw std::invalid_argument("GridProfile: n must be >= 2");
        if (y.size() < 5 || y.size() != u.size())
            throw std::invalid_argument("GridProfile: need >= 5 matching nodes");
        for (std::size_t i = 0; i + 1 < y.size(); i++)
            if (!(y[i + 1] > y[i]))
                throw std::invalid_argument("GridProfile: y must increase");
        for (std::size_t i = 1; i + 1 < u.size(); i++)
            if (!(u[i] > 0.0))
                throw std::invalid_argument("GridProfile: u must be positive inside");
    }
};

struct CurvaturePoint {
    double lambda1 = 0.0;  // meridional principal curvature
    double lambda2 = 0.0;  // rotational principal curvature
    double H = 0.0;        // lambda1 + (n-1) lambda2
    double ratio = 0.0;    // |lambda1/lambda2| = |u u_yy|/(1+u_y^2)
};

// First and second profile derivatives, three-point Lagrange stencils
// (centered inside, one-sided at the ends). Works on non-uniform grids,
// exact for quadratics.
inline DerivativeTable derivatives(const GridProfile& p) {
    p.validate();
    return derivative_table(p.y, p.u);
}

// Pointwise curvature from profile jet. The ratio is stored as a magnitude:
// for convex profiles u_yy <= 0, so lambda1/lambda2 = -u u_yy/(1+u_y^2) >= 0
// and the magnitude is the quantity all smallness checks use.
inline CurvaturePoint principal_curvatures(double u, double u_y, double u_yy,
                                           int n) {
    if (!(u > 0.0))
        throw std::invalid_argument("principal_curvatures: u must be positive");
    double s2 = 1.0 + u_y * u_y;
    CurvaturePoint c;
    c.lambda1 = -u_yy / (s2 * std::sqrt(s2));
    c.lambda2 = 1.0 / (u * std::sqrt(s2));
    c.H = c.lambda1 + double(n - 1) * c.lambda2;
    c.ratio = std::fabs(u * u_yy) / s2;
    return c;
}

// Curvature along a profile. The graph parametrization degenerates at tips
// (|u_y| -> infinity), so nodes whose slope exceeds slope_cap are skipped;
// tip curvature belongs to the parametric-curve path below.
struct ProfileCurvatures {
    std::vector<std::size_t> index;   // node indices that passed the cap
    std::vector<CurvaturePoint> pts;  // one entry per surviving index
};

inline ProfileCurvatures profile_curvatures(const GridProfile& p,
                                            double slope_cap = 1e3) {
    DerivativeTable d = derivatives(p);
    ProfileCurvatures out;
    for (std::size_t i = 0; i < p.y.size(); i++) {
        if (!(p.u[i] > 0.0)) continue;
        if (std::fabs(d.d1[i]) > slope_cap) continue;
        out.index.push_back(i);
        out.pts.push_back(principal_curvatures(p.u[i], d.d1[i], d.d2[i], p.n));
    }
    return out;
}

// Max over the grid of the discrete (u^2)_yy. Convex bodies keep this <= 0
// up to stencil error; the quantity is computed on q = u^2 directly (not via
// the product rule) so it stays finite across tips where u -> 0.
inline double convexity_diagnostic(const GridProfile& p) {
    p.validate();
    std::vector<double> q(p.u.size());
    for (std::size_t i = 0; i < q.size(); i++) q[i] = p.u[i] * p.u[i];
    DerivativeTable d = derivative_table(p.y, q);
    double m = d.d2[0];
    for (double v : d.d2) m = std::max(m, v);
    return m;
}

// Limit of (u^2)_yy at a tip that looks like the translating soliton after
// the tip zoom. With Z(rho) = a rho^2 + b rho^4 + ... one gets
//   (u^2)_yy = 2 (Z_rho - rho Z_rhorho) / Z_rho^3 -> -2b/a^3,
// and the soliton ODE forces b = 2 a^3/(2+n) at order rho^2 (substitute the
// series into Z''/(1+Z'^2) + (n-1)Z'/rho + c = 0; the speed c cancels from
// the ratio). Hence the limit is -4/(2+n), independent of the speed.
inline double tip_qyy_limit(int n) { return -4.0 / double(2 + n); }

// Scaling-invariant curvature ratio |u u_yy|/(1+u_y^2) at every node.
// Finite across tips: u -> 0 but u_yy grows like 1/u there, and the discrete
// product stays O(1).
inline std::vector<double> curvature_ratio_profile(const GridProfile& p) {
    DerivativeTable d = derivatives(p);
    std::vector<double> r(p.y.size());
    for (std::size_t i = 0; i < r.size(); i++)
        r[i] = std::fabs(p.u[i] * d.d2[i]) / (1.0 + d.d1[i] * d.d1[i]);
    return r;
}

// Upper generator arc of a closed convex body of revolution: nodes run from
// the left tip (r = 0) over the top to the right tip (r = 0), r > 0 between.
struct ParametricCurve {
    int n = 2;       // ambient dimension of the body of revolution
    double t = 0.0;  // unrescaled time stamp
    std::vector<double> x;
    std::vector<double> r;

    void validate() const {
        std::size_t m = x.size();
        if (n < 2) throw std::invalid_argument("ParametricCurve: n must be >= 2");
        if (m < 5 || r.size() != m)
            throw std::invalid_argument("ParametricCurve: need >= 5 matching nodes");
        if (r.front() != 0.0 || r.back() != 0.0)
            throw std::invalid_argument("ParametricCurve: tips must have r = 0");
        for (std::size_t i = 1; i + 1 < m; i++)
            if (!(r[i] > 0.0))
                throw std::invalid_argument("ParametricCurve: r must be positive inside");
    }

    // Cumulative chord length, the parameter for all curve derivatives.
    std::vector<double> arc_param() const {
        std::vector<double> s(x.size(), 0.0);
        for (std::size_t i = 1; i < x.size(); i++)
            s[i] = s[i - 1] + std::hypot(x[i] - x[i - 1], r[i] - r[i - 1]);
        return s;
    }
};

// Curvature data along a generator curve. Interior nodes use the chord-length
// parametrization; tips use the osculating circle through the tip and its
// mirrored neighbor, where both principal curvatures coincide (umbilic).
struct CurveCurvatures {
    std::vector<double> lambda_m;    // meridional
    std::vector<double> lambda_rot;  // rotational (equals lambda_m at tips)
    std::vector<double> H;
};

inline CurveCurvatures curve_curvatures(const ParametricCurve& c) {
    c.validate();
    int n = c.n;
    std::vector<double> s = c.arc_param();
    DerivativeTable dx = derivative_table(s, c.x);
    DerivativeTable dr = derivative_table(s, c.r);
    std::size_t m = s.size();
    CurveCurvatures out;
    out.lambda_m.resize(m);
    out.lambda_rot.resize(m);
    out.H.resize(m);
    for (std::size_t i = 1; i + 1 < m; i++) {
        double xp = dx.d1[i], rp = dr.d1[i];
        double xpp = dx.d2[i], rpp = dr.d2[i];
        double g = xp * xp + rp * rp;
        // Left-to-right over the top makes (-r', x') the outward normal;
        // with it the convex-body curvatures come out positive.
        out.lambda_m[i] = (rp * xpp - xp * rpp) / (g * std::sqrt(g));
        out.lambda_rot[i] = xp / (c.r[i] * std::sqrt(g));
        out.H[i] = out.lambda_m[i] + double(n - 1) * out.lambda_rot[i];
    }
    // Tip curvature: circle through (x_tip, 0) and (x_adj, r_adj) centered on
    // the axis has radius (d^2 + r_adj^2)/(2d) with d = |x_adj - x_tip|.
    auto tip = [&](std::size_t it, std::size_t ia) {
        double d = std::fabs(c.x[ia] - c.x[it]);
        if (d == 0.0) throw std::invalid_argument("curve_curvatures: flat tip");
        double k = 2.0 * d / (d * d + c.r[ia] * c.r[ia]);
        out.lambda_m[it] = k;
        out.lambda_rot[it] = k;
        out.H[it] = double(n) * k;
    };
    tip(0, 1);
    tip(m - 1, m - 2);
    return out;
}

enum class MaxLocation { tip1, tip2, interior };

struct CurvatureMax {
    MaxLocation where = MaxLocation::interior;
    double value = 0.0;
    std::size_t index = 0;
};

// Argmax of H over the curve. Ties within a relative whisker go to the
// nearest tip: round bodies have constant H and should report a tip, and the
// three-point stencils carry O(spacing^2) jitter, so the whisker must sit
// well above that. "At a tip" means within one grid cell of an axis point.
inline CurvatureMax mean_curvature_max_location(const ParametricCurve& c) {
    CurveCurvatures k = curve_curvatures(c);
    std::size_t m = k.H.size();
    CurvatureMax best;
    best.index = 0;
    best.value = k.H[0];
    for (std::size_t i = 1; i < m; i++)
        if (k.H[i] > best.value) {
            best.value = k.H[i];
            best.index = i;
        }
    double tip_best = std::max(k.H[0], k.H[m - 1]);
    if (tip_best >= best.value * (1.0 - 1e-4)) {
        best.value = tip_best;
        best.index = (k.H[0] >= k.H[m - 1]) ? 0 : m - 1;
    }
    if (best.index <= 1)
        best.where = MaxLocation::tip1;
    else if (best.index + 2 >= m)
        best.where = MaxLocation::tip2;
    else
        best.where = MaxLocation::interior;
    return best;
}

}  // namespace ovals

#endif
