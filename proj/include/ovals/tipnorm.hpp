#ifndef OVALS_TIPNORM_HPP
#define OVALS_TIPNORM_HPP

// Weighted L2 machinery for the tip region of a rescaled profile.
//
// The weight exponent mu(u, tau) is glued from two branches at the junction
// u* = L / sqrt|tau|:
//
//   collar   (u >= u*):  (Y(u*)^2 - Y(u)^2) / 4, the Gaussian exponent
//                        -Y^2/4 shifted so mu(u*) = 0;
//   cap      (u <  u*):  m(rho) + a rho + b with rho = u sqrt|tau|, where
//                        m is the translator weight from the bowl table and
//                        the linear correction a rho + b restores value and
//                        slope continuity at the junction.
//
// Anchoring mu(u*) = 0 keeps e^mu representable at large |tau| (the raw
// Gaussian convention -Y^2/4 ~ -|tau|/2 underflows past |tau| ~ 1400) and
// drops out of every ratio of weighted integrals; collar_offset stores the
// shift Y(u*)^2/4 so callers can recover the raw convention when they need
// to compare against an absolutely normalized cylindrical weight.
//
// On top of the weight: the tip norm (weighted L2 over the window (0, 2 theta]),
// the time-windowed sup norm, an empirical Poincare-ratio probe, and collar
// shape diagnostics measuring how far a profile sits from the exact
// cylinder balance 2(n-1) Y_u + u Y = 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <ovals/evolve.hpp>
#include <ovals/grid.hpp>
#include <ovals/io.hpp>
#include <ovals/soliton.hpp>

namespace ovals {

struct TipWeight {
    int n = 2;
    double theta = 0.0;
    double L = 0.0;
    double tau = 0.0;
    double junction = 0.0;       // u* = L / sqrt|tau|
    double aL = 0.0;             // gluing slope (in rho) of the cap branch
    double bL = 0.0;             // gluing offset, always -m(L) - L aL
    double y_star = 0.0;         // Y at the junction
    double collar_offset = 0.0;  // Y(u*)^2 / 4, the dropped Gaussian constant
    TipProfile Y1_ref;           // reference profile backing the collar branch
    SolitonTable soliton;        // translator table backing the cap branch
    MonotoneCubic Y_of_u;        // interpolant of Y1_ref

    double rho_of(double u) const { return u * std::sqrt(-tau); }

    // Weight exponent. Evaluable on [0, max grid node]; mu(0) = -infinity
    // because the cap weight vanishes like u^{n-1} on the axis.
    double mu(double u) const {
        check_domain(u, "TipWeight::mu");
        if (u >= junction) {
            double Yv = Y_of_u(u);
            return 0.25 * (y_star * y_star - Yv * Yv);
        }
        return soliton.weight_m(rho_of(u)) + aL * rho_of(u) + bL;
    }

    // d mu / du. Blows up like (n-1)/u toward the axis.
    double mu_u(double u) const {
        check_domain(u, "TipWeight::mu_u");
        if (u >= junction) return -0.5 * Y_of_u(u) * Y_of_u.deriv(u);
        return std::sqrt(-tau) * (soliton.weight_m_prime(rho_of(u)) + aL);
    }

  private:
    void check_domain(double u, const char* who) const {
        if (!(u >= 0.0))
            throw std::domain_error(std::string(who) + ": u must be >= 0");
        if (!(u <= Y1_ref.u.back() * (1.0 + 1e-12)))
            throw std::domain_error(std::string(who) + ": u beyond the profile");
    }
};

// Build the C1 weight for the profile Y1 over the window (0, 2 theta] with
// junction u* = L / sqrt|tau|. The slope-continuity equation fixes
//
//   a = -m'(L) - Y(u*) Y_u(u*) / (2 sqrt|tau|),
//
// and because the collar branch vanishes at the junction the value equation
// then lands exactly on b = -m(L) - L a. Both continuity residuals are
// asserted on every build.
inline TipWeight build_weight(const TipProfile& Y1, const SolitonTable& tab,
                              double theta, double L) {
    Y1.validate();
    if (tab.n != Y1.n)
        throw std::invalid_argument("build_weight: dimension mismatch");
    if (!(theta > 0.0))
        throw std::invalid_argument("build_weight: theta must be positive");
    if (!(L > 0.0))
        throw std::invalid_argument("build_weight: L must be positive");
    if (!(Y1.tau <= -1.0))
        throw std::invalid_argument("build_weight: needs tau <= -1");
    if (!(Y1.u.back() >= 2.0 * theta * (1.0 - 1e-9)))
        throw std::invalid_argument("build_weight: profile does not reach 2 theta");
    double root = std::sqrt(-Y1.tau);
    double ustar = L / root;
    if (!(ustar < 2.0 * theta))
        throw std::invalid_argument("build_weight: junction at or past the window edge");
    if (!(ustar > Y1.u.front()))
        throw std::invalid_argument("build_weight: junction below the first profile node");
    double need = std::max(2.0 * L, 2.0 * theta * root);
    if (tab.rho_max() < need * (1.0 - 1e-12))
        throw std::invalid_argument("build_weight: soliton table too short");

    TipWeight w;
    w.n = Y1.n;
    w.theta = theta;
    w.L = L;
    w.tau = Y1.tau;
    w.junction = ustar;
    w.Y1_ref = Y1;
    w.soliton = tab;
    w.Y_of_u = MonotoneCubic(Y1.u, Y1.Y);
    w.y_star = w.Y_of_u(ustar);
    double slope = w.Y_of_u.deriv(ustar);
    w.aL = -tab.weight_m_prime(L) - w.y_star * slope / (2.0 * root);
    w.bL = -tab.weight_m(L) - L * w.aL;
    w.collar_offset = 0.25 * w.y_star * w.y_star;
    if (!std::isfinite(w.aL) || !std::isfinite(w.bL))
        throw std::runtime_error("build_weight: continuity system is singular");

    // C1 contract at the junction, checked on every build. The collar value
    // at u* is exactly 0, so the value gap is just the cap branch there.
    double v_gap = std::fabs(tab.weight_m(L) + w.aL * L + w.bL);
    double s_col = -0.5 * w.y_star * slope;
    double s_cap = root * (tab.weight_m_prime(L) + w.aL);
    if (v_gap > 1e-8 ||
        std::fabs(s_col - s_cap) > 1e-6 * (1.0 + std::fabs(s_col)))
        throw std::runtime_error("build_weight: junction continuity check failed");
    return w;
}

// Reference integral of e^mu over (0, 2 theta], split at the junction and
// computed adaptively at the requested Gauss-Kronrod order (15, 31, or 61).
// Used to cross-check the grid quadratures; expects windows moderate enough
// that e^mu stays in range.
inline double weight_mass(const TipWeight& w, int order = 15) {
    auto f = [&w](double u) { return std::exp(w.mu(u)); };
    double a = 0.0, b = w.junction, c = 2.0 * w.theta;
    using boost::math::quadrature::gauss_kronrod;
    switch (order) {
        case 15:
            return gauss_kronrod<double, 15>::integrate(f, a, b, 10, 1e-13) +
                   gauss_kronrod<double, 15>::integrate(f, b, c, 10, 1e-13);
        case 31:
            return gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-13) +
                   gauss_kronrod<double, 31>::integrate(f, b, c, 10, 1e-13);
        case 61:
            return gauss_kronrod<double, 61>::integrate(f, a, b, 10, 1e-13) +
                   gauss_kronrod<double, 61>::integrate(f, b, c, 10, 1e-13);
        default:
            throw std::invalid_argument("weight_mass: order must be 15, 31, or 61");
    }
}

// Weighted L2 norm of grid data W over the tip window: trapezoid over the
// profile grid plus the closing panel below the first node, where the
// integrand behaves like W^2 e^mu ~ const u^{n-1} so its integral over
// [0, u_1] is W_1^2 e^{mu_1} u_1 / n to leading order.
inline double tip_norm(const std::vector<double>& W, const TipWeight& w) {
    const std::vector<double>& u = w.Y1_ref.u;
    if (W.size() != u.size())
        throw std::invalid_argument("tip_norm: data not on the weight grid");
    std::vector<double> g(u.size());
    for (std::size_t i = 0; i < u.size(); i++)
        g[i] = W[i] * W[i] * std::exp(w.mu(u[i]));
    double acc = g[0] * u[0] / double(w.n);
    for (std::size_t i = 0; i + 1 < u.size(); i++)
        acc += 0.5 * (g[i] + g[i + 1]) * (u[i + 1] - u[i]);
    return std::sqrt(acc);
}

// Time-windowed sup norm of a sampled norm history: for each sample time
// tau' the squared values are integrated over [tau' - 1, tau'] (clipped to
// the series, left edge interpolated) and the sup of |tau'|^{-1/4} times the
// square root is returned. Samples must be sorted, at negative tau, with
// steps <= 0.1 so the unit window is well resolved.
inline double tip_sup_norm(const std::vector<std::pair<double, double>>& series) {
    if (series.empty())
        throw std::invalid_argument("tip_sup_norm: empty series");
    for (std::size_t i = 0; i < series.size(); i++) {
        if (!(series[i].first < 0.0))
            throw std::invalid_argument("tip_sup_norm: tau must be negative");
        if (i + 1 < series.size()) {
            double gap = series[i + 1].first - series[i].first;
            if (!(gap > 0.0))
                throw std::invalid_argument("tip_sup_norm: series must be sorted");
            if (gap > 0.1 + 1e-9)
                throw std::invalid_argument("tip_sup_norm: series step must be <= 0.1");
        }
    }
    if (series.size() < 2)
        throw std::invalid_argument("tip_sup_norm: need >= 2 samples for a window");
    auto sq = [&series](std::size_t i) {
        return series[i].second * series[i].second;
    };
    double sup = 0.0;
    for (std::size_t i = 1; i < series.size(); i++) {
        double t1 = series[i].first;
        double t0 = std::max(series.front().first, t1 - 1.0);
        // trapezoid over samples in [t0, t1], walking left from i
        double integral = 0.0;
        std::size_t j = i;
        while (j > 0 && series[j - 1].first >= t0) {
            integral += 0.5 * (sq(j - 1) + sq(j)) *
                        (series[j].first - series[j - 1].first);
            j--;
        }
        if (j > 0 && series[j].first > t0) {
            // partial panel: interpolate the squared value at t0
            double ta = series[j - 1].first, tb = series[j].first;
            double s = (t0 - ta) / (tb - ta);
            double q0 = (1.0 - s) * sq(j - 1) + s * sq(j);
            integral += 0.5 * (q0 + sq(j)) * (tb - t0);
        }
        sup = std::max(sup, std::pow(-t1, -0.25) * std::sqrt(integral));
    }
    return sup;
}

// Empirical Poincare ratio for one test function f on the profile grid:
//
//   |tau| int_0^theta f^2 e^mu du
//   -----------------------------------------------------------------
//   int_0^{2 theta} f_u^2 e^mu / (1 + Y_u^2) du + int_theta^{2 theta} f^2 e^mu du
//
// i.e. the constant this particular f requires in the tip-weighted Poincare
// inequality. f must vanish at the outer edge and be flat at the tip
// (discrete f'(0) small relative to the largest slope); theta must be a
// grid node. Derivatives are centered differences, and the inner integral
// closes with the same axis panel as tip_norm.
inline double poincare_ratio(const std::vector<double>& f, const TipWeight& w,
                             const TipProfile& Y1) {
    Y1.validate();
    const std::vector<double>& u = Y1.u;
    std::size_t m = u.size();
    if (f.size() != m)
        throw std::invalid_argument("poincare_ratio: test function not on the profile grid");
    double fmax = 0.0;
    for (double v : f) fmax = std::max(fmax, std::fabs(v));
    if (fmax == 0.0)
        throw std::invalid_argument("poincare_ratio: zero test function");
    if (std::fabs(f.back()) > 1e-12 * fmax)
        throw std::invalid_argument("poincare_ratio: f must vanish at the outer edge");

    std::vector<double> fu(m), Yu(m);
    fu[0] = (f[1] - f[0]) / (u[1] - u[0]);
    fu[m - 1] = (f[m - 1] - f[m - 2]) / (u[m - 1] - u[m - 2]);
    Yu[0] = (Y1.Y[1] - Y1.Y[0]) / (u[1] - u[0]);
    Yu[m - 1] = (Y1.Y[m - 1] - Y1.Y[m - 2]) / (u[m - 1] - u[m - 2]);
    for (std::size_t i = 1; i + 1 < m; i++) {
        fu[i] = (f[i + 1] - f[i - 1]) / (u[i + 1] - u[i - 1]);
        Yu[i] = (Y1.Y[i + 1] - Y1.Y[i - 1]) / (u[i + 1] - u[i - 1]);
    }
    double dmax = 0.0;
    for (double v : fu) dmax = std::max(dmax, std::fabs(v));
    // Flat-at-the-tip precondition. For an even extension with f'(0) = 0 the
    // slope vanishes linearly at the axis, so the first one-sided difference
    // (~ f'' at 1.5 h) stays well below the next centered one (~ f'' at 2 h,
    // ratio 0.75 for a pure quadratic); a genuine boundary slope keeps the
    // two nearly equal. The additive floor tolerates functions supported
    // away from the axis, where both slopes vanish.
    if (std::fabs(fu[0]) > 0.85 * std::fabs(fu[1]) + 1e-3 * dmax)
        throw std::invalid_argument("poincare_ratio: f must be flat at the tip");

    std::size_t jt = m;
    for (std::size_t i = 0; i < m; i++)
        if (std::fabs(u[i] - w.theta) <= 1e-9 * w.theta) { jt = i; break; }
    if (jt == m)
        throw std::invalid_argument("poincare_ratio: theta must be a grid node");

    std::vector<double> e(m);
    for (std::size_t i = 0; i < m; i++) e[i] = std::exp(w.mu(u[i]));

    double lhs = f[0] * f[0] * e[0] * u[0] / double(w.n);
    for (std::size_t i = 0; i < jt; i++)
        lhs += 0.5 * (f[i] * f[i] * e[i] + f[i + 1] * f[i + 1] * e[i + 1]) *
               (u[i + 1] - u[i]);
    lhs *= -w.tau;

    auto grad = [&](std::size_t i) {
        return fu[i] * fu[i] * e[i] / (1.0 + Yu[i] * Yu[i]);
    };
    double rhs = 0.0;
    for (std::size_t i = 0; i + 1 < m; i++)
        rhs += 0.5 * (grad(i) + grad(i + 1)) * (u[i + 1] - u[i]);
    for (std::size_t i = jt; i + 1 < m; i++)
        rhs += 0.5 * (f[i] * f[i] * e[i] + f[i + 1] * f[i + 1] * e[i + 1]) *
               (u[i + 1] - u[i]);
    return lhs / rhs;
}

// Collar shape diagnostics: how far the profile sits from the exact
// cylinder balance 2(n-1) Y_u + u Y = 0 over the collar [u*, 2 theta].
//
//   eps1 = sup |1 + u Y / (2(n-1) Y_u)|   (deviation over the diffusion term)
//   eps2 = sup |2(n-1)|Y_u| / (u Y) - 1|  (deviation over the transport term)
inline std::pair<double, double> collar_diagnostic(const TipProfile& Y1,
                                                   double theta, double L) {
    Y1.validate();
    if (!(theta > 0.0))
        throw std::invalid_argument("collar_diagnostic: theta must be positive");
    if (!(L > 0.0))
        throw std::invalid_argument("collar_diagnostic: L must be positive");
    if (!(Y1.tau <= -1.0))
        throw std::invalid_argument("collar_diagnostic: needs tau <= -1");
    double ustar = L / std::sqrt(-Y1.tau);
    if (!(ustar < 2.0 * theta))
        throw std::invalid_argument("collar_diagnostic: empty collar");
    if (!(ustar > Y1.u.front()))
        throw std::invalid_argument("collar_diagnostic: junction below the first profile node");
    if (!(Y1.u.back() >= 2.0 * theta * (1.0 - 1e-9)))
        throw std::invalid_argument("collar_diagnostic: profile does not reach 2 theta");

    MonotoneCubic Y(Y1.u, Y1.Y);
    std::vector<double> pts;
    pts.push_back(ustar);
    for (double v : Y1.u)
        if (v > ustar && v < 2.0 * theta) pts.push_back(v);
    pts.push_back(std::min(2.0 * theta, Y1.u.back()));
    double eps1 = 0.0, eps2 = 0.0;
    for (double s : pts) {
        double Yv = Y(s), Yu = Y.deriv(s);
        double d = 2.0 * double(Y1.n - 1);
        eps1 = std::max(eps1, std::fabs(1.0 + s * Yv / (d * Yu)));
        eps2 = std::max(eps2, std::fabs(d * std::fabs(Yu) / (s * Yv) - 1.0));
    }
    return {eps1, eps2};
}

// Model profile with a translator cap: Y = sqrt(2|tau|) + Z0(u sqrt|tau|)/sqrt|tau|
// on the uniform grid u_j = 2 theta (j+1)/m. This is the late-time shape of
// the tip region (cap glued to the Gaussian collar) and serves as the test
// surrogate where a full flow run would be too slow.
inline TipProfile soliton_model_profile(int n, double tau, double theta,
                                        const SolitonTable& tab, std::size_t m) {
    if (tab.n != n)
        throw std::invalid_argument("soliton_model_profile: dimension mismatch");
    if (!(tau <= -1.0))
        throw std::invalid_argument("soliton_model_profile: needs tau <= -1");
    if (!(theta > 0.0) || m < 8)
        throw std::invalid_argument("soliton_model_profile: bad window or grid");
    double root = std::sqrt(-tau);
    if (tab.rho_max() < 2.0 * theta * root * (1.0 - 1e-12))
        throw std::invalid_argument("soliton_model_profile: soliton table too short");
    TipProfile p;
    p.n = n;
    p.tau = tau;
    p.side = TipSide::right;
    p.y_tip = std::sqrt(2.0) * root;
    p.u.resize(m);
    p.Y.resize(m);
    for (std::size_t j = 0; j < m; j++) {
        p.u[j] = 2.0 * theta * double(j + 1) / double(m);
        p.Y[j] = p.y_tip + tab.z0(p.u[j] * root) / root;
    }
    p.validate();
    return p;
}

// Model profile with the exact cylinder-asymptotic collar
// Y = sqrt(2|tau| - |tau| u^2/(n-1)), same grid convention.
inline TipProfile cylinder_model_profile(int n, double tau, double theta,
                                         std::size_t m) {
    if (n < 2)
        throw std::invalid_argument("cylinder_model_profile: n must be >= 2");
    if (!(tau <= -1.0))
        throw std::invalid_argument("cylinder_model_profile: needs tau <= -1");
    if (!(theta > 0.0) || m < 8)
        throw std::invalid_argument("cylinder_model_profile: bad window or grid");
    if (!(4.0 * theta * theta < 2.0 * double(n - 1)))
        throw std::invalid_argument("cylinder_model_profile: window leaves the cylinder");
    TipProfile p;
    p.n = n;
    p.tau = tau;
    p.side = TipSide::right;
    p.y_tip = std::sqrt(-2.0 * tau);
    p.u.resize(m);
    p.Y.resize(m);
    for (std::size_t j = 0; j < m; j++) {
        p.u[j] = 2.0 * theta * double(j + 1) / double(m);
        p.Y[j] = std::sqrt(-tau * (2.0 - p.u[j] * p.u[j] / double(n - 1)));
    }
    p.validate();
    return p;
}

// Weight table (u, mu, mu_u) on a uniform grid over (0, 2 theta], for plots.
inline void write_weight_csv(const TipWeight& w, const std::string& path,
                             std::size_t count) {
    if (count < 2)
        throw std::invalid_argument("write_weight_csv: need >= 2 rows");
    CsvTable t;
    t.header = {"u", "mu", "mu_u"};
    t.columns.resize(3);
    for (std::size_t j = 0; j < count; j++) {
        double u = 2.0 * w.theta * double(j + 1) / double(count);
        t.columns[0].push_back(u);
        t.columns[1].push_back(w.mu(u));
        t.columns[2].push_back(w.mu_u(u));
    }
    write_csv(path, t);
}

}  // namespace ovals

#endif
