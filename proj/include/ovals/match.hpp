#ifndef OVALS_MATCH_HPP
#define OVALS_MATCH_HPP

// Matching two rotationally symmetric flows: the three-parameter family of
// space-time dilations, its better-conditioned reparameterization at a
// reference rescaled time, projection residuals of the gauged difference on
// the lowest three eigenmodes, a damped Newton solve that zeroes them, and
// the neutral-mode coefficient tracker a(tau) with its forcing term.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "json.hpp"
#include "ovals/evolve.hpp"
#include "ovals/geometry.hpp"
#include "ovals/grid.hpp"
#include "ovals/io.hpp"
#include "ovals/spectral.hpp"

namespace ovals {

// ---------------------------------------------------------------------------
// Gauge parameters.
//
// The unrescaled action on a flow U(x, t) is
//   U^g(x, t) = e^{gamma/2} U(e^{-gamma/2} (x - alpha), e^{-gamma} (t - beta)),
// and with both flows rescaled around a common extinction origin it becomes
//   u^g(y, tau) = s u((y - alpha e^{tau/2}) / s, tau + gamma - log s^2),
//   s = sqrt(1 + beta e^tau).
// Near a reference time tau0 the action is far better conditioned in
//   b     = sqrt(1 + beta e^{tau0}) - 1   (relative radius change),
//   Gamma = (gamma - log(1 + beta e^{tau0})) / tau0  (residual log-time rate),
//   A     = alpha e^{tau0/2}              (axial shift at the rescaled scale),
// so both parameterizations are carried together and kept consistent.

struct GaugeParams {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double tau0 = -1.0;
    double b = 0.0;
    double Gamma = 0.0;
    double A = 0.0;
};

// Consistency of the derived triple with (alpha, beta, gamma) at tau0.
inline void check_gauge(const GaugeParams& g) {
    if (!(g.tau0 < 0.0))
        throw std::invalid_argument("check_gauge: need tau0 < 0");
    double q = 1.0 + g.beta * std::exp(g.tau0);
    if (!(q > 0.0))
        throw std::invalid_argument(
            "check_gauge: 1 + beta e^{tau0} must be positive");
    double b = std::sqrt(q) - 1.0;
    double Gamma = (g.gamma - std::log(q)) / g.tau0;
    double A = g.alpha * std::exp(0.5 * g.tau0);
    double tol = 1e-12;
    if (std::fabs(b - g.b) > tol * std::max(1.0, std::fabs(b)) ||
        std::fabs(Gamma - g.Gamma) > tol * std::max(1.0, std::fabs(Gamma)) ||
        std::fabs(A - g.A) > tol * std::max(1.0, std::fabs(A)))
        throw std::logic_error("check_gauge: derived (b, Gamma, A) stale");
}

inline GaugeParams make_gauge(double alpha, double beta, double gamma,
                              double tau0) {
    if (!(tau0 < 0.0))
        throw std::invalid_argument("make_gauge: need tau0 < 0");
    double q = 1.0 + beta * std::exp(tau0);
    if (!(q > 0.0))
        throw std::invalid_argument(
            "make_gauge: 1 + beta e^{tau0} must be positive");
    GaugeParams g;
    g.alpha = alpha;
    g.beta = beta;
    g.gamma = gamma;
    g.tau0 = tau0;
    g.b = std::sqrt(q) - 1.0;
    g.Gamma = (gamma - std::log(q)) / tau0;
    g.A = alpha * std::exp(0.5 * tau0);
    return g;
}

inline GaugeParams gauge_from_bGA(double b, double Gamma, double A,
                                  double tau0) {
    if (!(tau0 < 0.0))
        throw std::invalid_argument("gauge_from_bGA: need tau0 < 0");
    if (!(1.0 + b > 0.0))
        throw std::invalid_argument("gauge_from_bGA: need 1 + b > 0");
    double q = (1.0 + b) * (1.0 + b);  // = 1 + beta e^{tau0}
    double alpha = A * std::exp(-0.5 * tau0);
    double beta = (q - 1.0) * std::exp(-tau0);
    double gamma = Gamma * tau0 + std::log(q);
    GaugeParams g;
    g.alpha = alpha;
    g.beta = beta;
    g.gamma = gamma;
    g.tau0 = tau0;
    g.b = b;
    g.Gamma = Gamma;
    g.A = A;
    return g;
}

// Applying first and then second equals applying the composite directly:
// gamma'' = gamma + gamma', beta'' = beta' + e^{gamma'} beta,
// alpha'' = alpha' + e^{gamma'/2} alpha.
inline GaugeParams compose_gauge(const GaugeParams& first,
                                 const GaugeParams& second, double tau0) {
    double alpha = second.alpha + std::exp(0.5 * second.gamma) * first.alpha;
    double beta = second.beta + std::exp(second.gamma) * first.beta;
    double gamma = first.gamma + second.gamma;
    return make_gauge(alpha, beta, gamma, tau0);
}

inline GaugeParams inverse_gauge(const GaugeParams& g, double tau0) {
    double gamma = -g.gamma;
    double beta = -std::exp(-g.gamma) * g.beta;
    double alpha = -std::exp(-0.5 * g.gamma) * g.alpha;
    return make_gauge(alpha, beta, gamma, tau0);
}

// Size thresholds relative to the reference time, with user margin eps:
// |alpha| <= eps e^{-tau0/2}/|tau0|, |beta| <= eps e^{-tau0}/|tau0|,
// |gamma| <= eps |tau0|.
struct AdmissibilityFlags {
    bool alpha_ok = false;
    bool beta_ok = false;
    bool gamma_ok = false;
    bool all() const { return alpha_ok && beta_ok && gamma_ok; }
};

inline AdmissibilityFlags admissible(const GaugeParams& g, double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("admissible: need eps > 0");
    check_gauge(g);
    double at = -g.tau0;
    AdmissibilityFlags f;
    f.alpha_ok = std::fabs(g.alpha) <= eps * std::exp(-0.5 * g.tau0) / at;
    f.beta_ok = std::fabs(g.beta) <= eps * std::exp(-g.tau0) / at;
    f.gamma_ok = std::fabs(g.gamma) <= eps * at;
    return f;
}

// ---------------------------------------------------------------------------
// Run archives: time-indexed snapshot stacks with linear interpolation
// between snapshot times and monotone-cubic interpolation along each
// snapshot. Evaluation outside the stored time window, or outside either
// bracketing snapshot's spatial grid, throws; gauge pull-backs interpolate,
// never extrapolate.

class RunArchive {
  public:
    explicit RunArchive(std::vector<GridProfile> snaps)
        : snaps_(std::move(snaps)) {
        if (snaps_.size() < 2)
            throw std::invalid_argument("RunArchive: need >= 2 snapshots");
        for (const auto& p : snaps_) p.validate();
        n_ = snaps_.front().n;
        kind_ = snaps_.front().kind;
        times_.reserve(snaps_.size());
        fits_.reserve(snaps_.size());
        for (const auto& p : snaps_) {
            if (p.n != n_ || p.kind != kind_)
                throw std::invalid_argument(
                    "RunArchive: snapshots disagree on n or kind");
            if (!times_.empty() && !(p.tau > times_.back()))
                throw std::invalid_argument(
                    "RunArchive: snapshot times must increase strictly");
            times_.push_back(p.tau);
            fits_.emplace_back(p.y, p.u);
        }
    }

    int dim() const { return n_; }
    ProfileKind kind() const { return kind_; }
    double time_front() const { return times_.front(); }
    double time_back() const { return times_.back(); }
    std::size_t size() const { return snaps_.size(); }
    const GridProfile& snapshot(std::size_t i) const { return snaps_.at(i); }

    double value(double x, double t) const {
        double slack = 1e-9 * (1.0 + std::fabs(t));
        if (t < times_.front() - slack || t > times_.back() + slack)
            throw std::out_of_range(
                "RunArchive: time " + std::to_string(t) +
                " outside stored window [" + std::to_string(times_.front()) +
                ", " + std::to_string(times_.back()) + "]");
        t = std::clamp(t, times_.front(), times_.back());
        std::size_t i = bracket(times_, t);
        double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
        if (w < 1e-14) return eval_snapshot(i, x);
        if (w > 1.0 - 1e-14) return eval_snapshot(i + 1, x);
        return (1.0 - w) * eval_snapshot(i, x) + w * eval_snapshot(i + 1, x);
    }

  private:
    double eval_snapshot(std::size_t i, double x) const {
        const auto& y = snaps_[i].y;
        double slack = 1e-9 * (1.0 + std::fabs(x));
        if (x < y.front() - slack || x > y.back() + slack)
            throw std::out_of_range(
                "RunArchive: position " + std::to_string(x) +
                " outside snapshot grid [" + std::to_string(y.front()) + ", " +
                std::to_string(y.back()) + "] at time " +
                std::to_string(snaps_[i].tau));
        return fits_[i](std::clamp(x, y.front(), y.back()));
    }

    int n_ = 2;
    ProfileKind kind_ = ProfileKind::rescaled;
    std::vector<double> times_;
    std::vector<GridProfile> snaps_;
    std::vector<MonotoneCubic> fits_;
};

// Archive sampled from a closed-form profile on a shared spatial grid.
inline RunArchive sampled_archive(int n, ProfileKind kind,
                                  const std::vector<double>& times,
                                  const std::vector<double>& x,
                                  const std::function<double(double, double)>& f) {
    std::vector<GridProfile> snaps;
    snaps.reserve(times.size());
    for (double t : times) {
        GridProfile p;
        p.n = n;
        p.kind = kind;
        p.tau = t;
        p.y = x;
        p.u.resize(x.size());
        for (std::size_t i = 0; i < x.size(); i++) p.u[i] = f(x[i], t);
        snaps.push_back(std::move(p));
    }
    return RunArchive(std::move(snaps));
}

// Rescaled archive of a stored flow around extinction time T: every snapshot
// whose rescaled time lands inside [tau_a, tau_b], each kept on its own
// curve nodes.
inline RunArchive rescaled_archive(const FlowRun& run, double T, double tau_a,
                                   double tau_b) {
    if (!(tau_a < tau_b))
        throw std::invalid_argument("rescaled_archive: need tau_a < tau_b");
    std::vector<GridProfile> snaps;
    for (std::size_t i = 0; i < run.curves.size(); i++) {
        if (!(run.t[i] < T)) continue;
        double tau = -std::log(T - run.t[i]);
        if (tau < tau_a || tau > tau_b) continue;
        snaps.push_back(rescale_profile(run.curves[i], T));
    }
    if (snaps.size() < 2)
        throw std::invalid_argument(
            "rescaled_archive: fewer than 2 snapshots in the window");
    return RunArchive(std::move(snaps));
}

// Unrescaled archive of a stored flow on the curves' own axial nodes. The
// optional shift moves the time stamps; placing the extinction time at the
// origin (shift = -T) matches the convention under which the rescaled and
// unrescaled gauge actions intertwine.
inline RunArchive unrescaled_archive(const FlowRun& run,
                                     double time_shift = 0.0) {
    std::vector<GridProfile> snaps;
    snaps.reserve(run.curves.size());
    for (const auto& c : run.curves) {
        GridProfile p;
        p.n = c.n;
        p.kind = ProfileKind::unrescaled;
        p.tau = c.t + time_shift;
        p.y = c.x;
        p.u = c.r;
        snaps.push_back(std::move(p));
    }
    return RunArchive(std::move(snaps));
}

// ---------------------------------------------------------------------------
// Gauge application.

// r^g(x, t) = e^{gamma/2} r(e^{-gamma/2}(x - alpha), e^{-gamma}(t - beta)),
// sampled on the given axial nodes. Pulled-back arguments must stay inside
// the stored run.
inline GridProfile apply_gauge_unrescaled(const RunArchive& run,
                                          const GaugeParams& g, double t,
                                          const std::vector<double>& x) {
    if (run.kind() != ProfileKind::unrescaled)
        throw std::invalid_argument(
            "apply_gauge_unrescaled: run must hold unrescaled profiles");
    check_gauge(g);
    double half = std::exp(0.5 * g.gamma);
    double tp = std::exp(-g.gamma) * (t - g.beta);
    GridProfile p;
    p.n = run.dim();
    p.kind = ProfileKind::unrescaled;
    p.tau = t;
    p.y = x;
    p.u.resize(x.size());
    for (std::size_t i = 0; i < x.size(); i++)
        p.u[i] = half * run.value((x[i] - g.alpha) / half, tp);
    return p;
}

// u^g(y, tau) = s u((y - alpha e^{tau/2})/s, tau + gamma - log(1 + beta e^tau)),
// s = sqrt(1 + beta e^tau), both flows rescaled around a common extinction
// origin. Pulled-back arguments must stay inside the stored run.
inline GridProfile apply_gauge_rescaled(const RunArchive& run,
                                        const GaugeParams& g, double tau,
                                        const std::vector<double>& y) {
    if (run.kind() != ProfileKind::rescaled)
        throw std::invalid_argument(
            "apply_gauge_rescaled: run must hold rescaled profiles");
    check_gauge(g);
    double q = 1.0 + g.beta * std::exp(tau);
    if (!(q > 0.0))
        throw std::domain_error(
            "apply_gauge_rescaled: 1 + beta e^tau not positive at tau = " +
            std::to_string(tau));
    double s = std::sqrt(q);
    double shift = g.alpha * std::exp(0.5 * tau);
    double taup = tau + g.gamma - std::log(q);
    GridProfile p;
    p.n = run.dim();
    p.kind = ProfileKind::rescaled;
    p.tau = tau;
    p.y = y;
    p.u.resize(y.size());
    for (std::size_t i = 0; i < y.size(); i++)
        p.u[i] = s * run.value((y[i] - shift) / s, taup);
    return p;
}

// ---------------------------------------------------------------------------
// Projection residuals.

struct ResidualTriple {
    double r0 = 0.0, r1 = 0.0, r2 = 0.0;
    double norm() const { return std::sqrt(r0 * r0 + r1 * r1 + r2 * r2); }
};

namespace detail {

// Integral of f(y) e^{-y^2/4} over [-ymax, ymax] by adaptive Gauss-Kronrod.
// The integrands here are compactly supported and only piecewise smooth
// (interpolated profiles), which suits a subdividing rule far better than a
// global Hermite one.
inline double gaussian_pairing(const std::function<double(double)>& f,
                               double ymax) {
    using rule = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto g = [&f](double y) { return f(y) * std::exp(-0.25 * y * y); };
    return rule::integrate(g, -ymax, ymax, 14, 1e-13);
}

// Support radius of the cylindrical cutoff at time tau.
inline double cutoff_support(double theta, double tau, int n) {
    return std::sqrt(-tau) *
           std::sqrt(2.0 - theta * theta / (4.0 * double(n - 1)));
}

}  // namespace detail

// Components of the truncated gauged difference w = u1 - u2^g against the
// normalized low modes: r_j = <psi_j, phi_C w> / (<psi_j, psi_j> R_cyl),
// R_cyl = sqrt(2(n-1)). The division by the cylinder radius measures the
// difference in the same relative units as the deviation v = u/R_cyl - 1,
// which makes the leading-order laws for the triple dimensionless.
inline ResidualTriple projection_residual(const RunArchive& run1,
                                          const RunArchive& run2,
                                          const GaugeParams& g, double theta,
                                          double tau) {
    if (run1.kind() != ProfileKind::rescaled ||
        run2.kind() != ProfileKind::rescaled)
        throw std::invalid_argument(
            "projection_residual: both runs must hold rescaled profiles");
    if (run1.dim() != run2.dim())
        throw std::invalid_argument(
            "projection_residual: runs disagree on dimension");
    check_gauge(g);
    int n = run1.dim();
    double q = 1.0 + g.beta * std::exp(tau);
    if (!(q > 0.0))
        throw std::domain_error(
            "projection_residual: 1 + beta e^tau not positive at tau");
    double s = std::sqrt(q);
    double shift = g.alpha * std::exp(0.5 * tau);
    double taup = tau + g.gamma - std::log(q);
    Fn cut = make_cutoff(CutoffKind::cylindrical, theta, tau, n);
    double ymax = detail::cutoff_support(theta, tau, n);
    double radius = std::sqrt(2.0 * double(n - 1));

    auto diff = [&](double y) {
        double c = cut(y);
        if (c == 0.0) return 0.0;
        double w = run1.value(y, tau) - s * run2.value((y - shift) / s, taup);
        return c * w / radius;
    };
    static const EigenBasis basis = build_basis(2);
    ResidualTriple r;
    r.r0 = detail::gaussian_pairing(diff, ymax) / basis.sq_norms[0];
    r.r1 = detail::gaussian_pairing([&](double y) { return diff(y) * y; },
                                    ymax) /
           basis.sq_norms[1];
    r.r2 = detail::gaussian_pairing(
               [&](double y) { return diff(y) * (y * y - 2.0); }, ymax) /
           basis.sq_norms[2];
    return r;
}

// ---------------------------------------------------------------------------
// Zeroing the three components.

struct NewtonOptions {
    double tol = 1e-8;
    int max_iter = 50;
    bool has_seed = false;
    double seed_b = 0.0;
    double seed_Gamma = 0.0;
    double seed_A = 0.0;
};

struct MatchResult {
    GaugeParams gauge;
    ResidualTriple residual;
    int iterations = 0;
    bool converged = false;
    bool box_ok = false;  // |b| <= 1/|tau0|, |Gamma| <= 1/2, |A| <= 1
    std::vector<double> residual_history;
    std::string warning;
};

namespace detail {

// Solve a 3x3 linear system by Gaussian elimination with partial pivoting.
inline void solve3(double a[3][3], double rhs[3]) {
    int idx[3] = {0, 1, 2};
    for (int c = 0; c < 3; c++) {
        int p = c;
        for (int r = c + 1; r < 3; r++)
            if (std::fabs(a[idx[r]][c]) > std::fabs(a[idx[p]][c])) p = r;
        std::swap(idx[c], idx[p]);
        double piv = a[idx[c]][c];
        if (!(std::fabs(piv) > 1e-300))
            throw std::runtime_error("zero_projections: singular Jacobian");
        for (int r = c + 1; r < 3; r++) {
            double m = a[idx[r]][c] / piv;
            for (int k = c; k < 3; k++) a[idx[r]][k] -= m * a[idx[c]][k];
            rhs[idx[r]] -= m * rhs[idx[c]];
        }
    }
    double out[3];
    for (int c = 2; c >= 0; c--) {
        double s = rhs[idx[c]];
        for (int k = c + 1; k < 3; k++) s -= a[idx[c]][k] * out[k];
        out[c] = s / a[idx[c]][c];
    }
    for (int c = 0; c < 3; c++) rhs[c] = out[c];
}

}  // namespace detail

// Damped Newton over (b, Gamma, A) with a finite-difference Jacobian and a
// backtracking line search; the initial guess inverts the leading-order laws
// for the components. Trial steps whose pull-backs leave either stored run
// count as failed and shorten the step. Non-convergence throws with the
// last residual; a converged gauge outside the reference search box
// |b| <= 1/|tau0|, |Gamma| <= 1/2, |A| <= 1 only sets a warning.
inline MatchResult zero_projections(const RunArchive& run1,
                                    const RunArchive& run2, double tau0,
                                    double theta,
                                    const NewtonOptions& opts = {}) {
    if (!(tau0 < 0.0))
        throw std::invalid_argument("zero_projections: need tau0 < 0");
    double at = -tau0;
    auto eval = [&](const double x[3]) {
        GaugeParams g = gauge_from_bGA(x[0], x[1], x[2], tau0);
        return projection_residual(run1, run2, g, theta, tau0);
    };

    double x[3];
    ResidualTriple r;
    if (opts.has_seed) {
        x[0] = opts.seed_b;
        x[1] = opts.seed_Gamma;
        x[2] = opts.seed_A;
        r = eval(x);
    } else {
        // First-order inversion of the component laws at the identity gauge:
        // r1 ~ A/(2|tau0|), r2 ~ Gamma/(4(Gamma+1)|tau0|), r0 ~ b - A^2/(4|tau0|).
        double xid[3] = {0.0, 0.0, 0.0};
        ResidualTriple rid = eval(xid);
        double A0 = 2.0 * at * rid.r1;
        double den = 1.0 - 4.0 * at * rid.r2;
        double G0 = (den > 0.1) ? 4.0 * at * rid.r2 / den : 0.0;
        double b0 = rid.r0 + A0 * A0 / (4.0 * at);
        x[0] = std::clamp(b0, -0.5, 0.5);
        x[1] = std::clamp(G0, -0.45, 0.45);
        x[2] = std::clamp(A0, -1.5, 1.5);
        if (rid.norm() <= opts.tol) {
            x[0] = x[1] = x[2] = 0.0;
            r = rid;
        } else {
            try {
                r = eval(x);
            } catch (const std::out_of_range&) {
                // Guess pulled outside a run; fall back to the identity.
                x[0] = x[1] = x[2] = 0.0;
                r = rid;
            }
        }
    }

    MatchResult res;
    res.residual_history.push_back(r.norm());
    int it = 0;
    for (; it < opts.max_iter && r.norm() > opts.tol; it++) {
        // Forward-difference Jacobian, steps scaled to each variable.
        double h[3] = {1e-8 * (1.0 + std::fabs(x[0])),
                       1e-6 * (1.0 + std::fabs(x[1])),
                       1e-6 * (1.0 + std::fabs(x[2]))};
        double J[3][3];
        for (int c = 0; c < 3; c++) {
            double xp[3] = {x[0], x[1], x[2]};
            xp[c] += h[c];
            ResidualTriple rp = eval(xp);
            J[0][c] = (rp.r0 - r.r0) / h[c];
            J[1][c] = (rp.r1 - r.r1) / h[c];
            J[2][c] = (rp.r2 - r.r2) / h[c];
        }
        double step[3] = {-r.r0, -r.r1, -r.r2};
        detail::solve3(J, step);

        double lambda = 1.0;
        bool accepted = false;
        for (; lambda >= 1.0 / 16384.0; lambda *= 0.5) {
            double xt[3] = {x[0] + lambda * step[0], x[1] + lambda * step[1],
                            x[2] + lambda * step[2]};
            if (!(1.0 + xt[0] > 0.0)) continue;
            ResidualTriple rt;
            try {
                rt = eval(xt);
            } catch (const std::out_of_range&) {
                continue;  // pulled outside a run; shorten the step
            } catch (const std::domain_error&) {
                continue;
            }
            if (rt.norm() <= (1.0 - 0.25 * lambda) * r.norm()) {
                x[0] = xt[0];
                x[1] = xt[1];
                x[2] = xt[2];
                r = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw std::runtime_error(
                "zero_projections: line search stalled, last residual " +
                format_double(r.norm()));
        res.residual_history.push_back(r.norm());
    }
    if (r.norm() > opts.tol)
        throw std::runtime_error(
            "zero_projections: no convergence in " +
            std::to_string(opts.max_iter) + " iterations, last residual " +
            format_double(r.norm()));

    res.gauge = gauge_from_bGA(x[0], x[1], x[2], tau0);
    res.residual = r;
    res.iterations = it;
    res.converged = true;
    res.box_ok = std::fabs(x[0]) <= 1.0 / at + 1e-15 &&
                 std::fabs(x[1]) <= 0.5 && std::fabs(x[2]) <= 1.0;
    if (!res.box_ok)
        res.warning =
            "converged gauge lies outside the reference search box "
            "|b| <= 1/|tau0|, |Gamma| <= 1/2, |A| <= 1";
    return res;
}

// ---------------------------------------------------------------------------
// Neutral-mode tracker.

struct NeutralModeSample {
    double tau = 0.0;
    double a = 0.0;
    double F = 0.0;
};

struct NeutralModeTrack {
    std::vector<NeutralModeSample> samples;
    double noise_floor = 0.0;        // differencing noise scale for F
    double integral_residual = 0.0;  // max |a - integral form| / max |a|
};

namespace detail {

// d/dtau by the centered four-neighbor stencil inside the window and
// one-sided five-point stencils of the same order at the edges.
inline std::vector<double> stencil_derivative(const std::vector<double>& a,
                                              double h) {
    std::size_t m = a.size();
    std::vector<double> d(m);
    for (std::size_t k = 0; k < m; k++) {
        if (k >= 2 && k + 2 < m) {
            d[k] = (-a[k + 2] + 8.0 * a[k + 1] - 8.0 * a[k - 1] + a[k - 2]) /
                   (12.0 * h);
        } else if (k + 4 < m && k < 2) {
            d[k] = k == 0 ? (-25.0 * a[0] + 48.0 * a[1] - 36.0 * a[2] +
                             16.0 * a[3] - 3.0 * a[4]) /
                                (12.0 * h)
                          : (-3.0 * a[0] - 10.0 * a[1] + 18.0 * a[2] -
                             6.0 * a[3] + a[4]) /
                                (12.0 * h);
        } else {
            std::size_t e = m - 1;
            d[k] = k == e ? (25.0 * a[e] - 48.0 * a[e - 1] + 36.0 * a[e - 2] -
                             16.0 * a[e - 3] + 3.0 * a[e - 4]) /
                                (12.0 * h)
                          : (3.0 * a[e] + 10.0 * a[e - 1] - 18.0 * a[e - 2] +
                             6.0 * a[e - 3] - a[e - 4]) /
                                (12.0 * h);
        }
    }
    return d;
}

}  // namespace detail

// Track a(tau) = <psi_2, phi_C w> / <psi_2, psi_2> on a uniform window and
// recover the forcing F = da/dtau - 2a/|tau| by differencing. The returned
// noise floor propagates the fourth-difference noise estimate of the a
// series through the derivative stencil. The integral residual compares a
// against the variation-of-constants form
//   a(tau) = (tau_b^2 a(tau_b) - int_tau^{tau_b} F s^2 ds) / tau^2,
// which is exact for the tracked equation.
inline NeutralModeTrack neutral_mode_track_fn(
    int n, const std::function<double(double, double)>& w, double theta,
    double tau_a, double tau_b, std::size_t m) {
    if (n < 2) throw std::invalid_argument("neutral_mode_track: n >= 2");
    if (!(tau_a < tau_b && tau_b < 0.0))
        throw std::invalid_argument(
            "neutral_mode_track: need tau_a < tau_b < 0");
    if (m < 10)
        throw std::invalid_argument(
            "neutral_mode_track: window too short, need at least 10 samples");
    static const EigenBasis basis = build_basis(2);
    std::vector<double> taus = linspace(tau_a, tau_b, m);
    double h = taus[1] - taus[0];
    std::vector<double> a(m);
    for (std::size_t k = 0; k < m; k++) {
        double tau = taus[k];
        Fn cut = make_cutoff(CutoffKind::cylindrical, theta, tau, n);
        double ymax = detail::cutoff_support(theta, tau, n);
        a[k] = detail::gaussian_pairing(
                   [&](double y) {
                       double c = cut(y);
                       return c == 0.0 ? 0.0 : c * w(y, tau) * (y * y - 2.0);
                   },
                   ymax) /
               basis.sq_norms[2];
    }
    std::vector<double> da = detail::stencil_derivative(a, h);

    NeutralModeTrack tr;
    tr.samples.resize(m);
    for (std::size_t k = 0; k < m; k++) {
        tr.samples[k].tau = taus[k];
        tr.samples[k].a = a[k];
        tr.samples[k].F = da[k] - 2.0 * a[k] / std::fabs(taus[k]);
    }

    // Fourth central differences annihilate cubics, so they mostly carry
    // sample noise; white noise of size eps gives them RMS sqrt(70) eps and
    // gives the derivative stencil noise sqrt(130)/(12 h) eps.
    if (m >= 5) {
        double s2 = 0.0;
        for (std::size_t k = 2; k + 2 < m; k++) {
            double d4 = a[k - 2] - 4.0 * a[k - 1] + 6.0 * a[k] -
                        4.0 * a[k + 1] + a[k + 2];
            s2 += d4 * d4;
        }
        double eps = std::sqrt(s2 / double(m - 4) / 70.0);
        tr.noise_floor = eps * std::sqrt(130.0) / (12.0 * h);
    }

    // Right-anchored cumulative trapezoid of F s^2, then the integral form.
    std::vector<double> I(m, 0.0);
    for (std::size_t k = m - 1; k-- > 0;) {
        double f1 = tr.samples[k].F * taus[k] * taus[k];
        double f2 = tr.samples[k + 1].F * taus[k + 1] * taus[k + 1];
        I[k] = I[k + 1] + 0.5 * h * (f1 + f2);
    }
    double amax = 0.0;
    for (double v : a) amax = std::max(amax, std::fabs(v));
    double tb = taus[m - 1];
    double worst = 0.0;
    for (std::size_t k = 0; k < m; k++) {
        double ai = (tb * tb * a[m - 1] - I[k]) / (taus[k] * taus[k]);
        worst = std::max(worst, std::fabs(a[k] - ai));
    }
    tr.integral_residual = amax > 0.0 ? worst / amax : 0.0;
    return tr;
}

inline NeutralModeTrack neutral_mode_track(const RunArchive& run1,
                                           const RunArchive& run2,
                                           const GaugeParams& g, double theta,
                                           double tau_a, double tau_b,
                                           std::size_t m = 33) {
    if (run1.kind() != ProfileKind::rescaled ||
        run2.kind() != ProfileKind::rescaled)
        throw std::invalid_argument(
            "neutral_mode_track: both runs must hold rescaled profiles");
    if (run1.dim() != run2.dim())
        throw std::invalid_argument(
            "neutral_mode_track: runs disagree on dimension");
    check_gauge(g);
    auto w = [&](double y, double tau) {
        double q = 1.0 + g.beta * std::exp(tau);
        if (!(q > 0.0))
            throw std::domain_error(
                "neutral_mode_track: 1 + beta e^tau not positive");
        double s = std::sqrt(q);
        double taup = tau + g.gamma - std::log(q);
        double shift = g.alpha * std::exp(0.5 * tau);
        return run1.value(y, tau) - s * run2.value((y - shift) / s, taup);
    };
    return neutral_mode_track_fn(run1.dim(), w, theta, tau_a, tau_b, m);
}

// ---------------------------------------------------------------------------
// Reports.

inline nlohmann::json match_report_json(const MatchResult& res, double eps) {
    AdmissibilityFlags f = admissible(res.gauge, eps);
    nlohmann::json j;
    j["gauge"] = {{"alpha", res.gauge.alpha}, {"beta", res.gauge.beta},
                  {"gamma", res.gauge.gamma}, {"tau0", res.gauge.tau0},
                  {"b", res.gauge.b},         {"Gamma", res.gauge.Gamma},
                  {"A", res.gauge.A}};
    j["residual"] = {res.residual.r0, res.residual.r1, res.residual.r2};
    j["residual_norm"] = res.residual.norm();
    j["iterations"] = res.iterations;
    j["converged"] = res.converged;
    j["box_ok"] = res.box_ok;
    j["warning"] = res.warning;
    j["admissible"] = {{"eps", eps},
                       {"alpha_ok", f.alpha_ok},
                       {"beta_ok", f.beta_ok},
                       {"gamma_ok", f.gamma_ok},
                       {"all", f.all()}};
    j["residual_history"] = res.residual_history;
    return j;
}

inline void write_match_report_json(const MatchResult& res, double eps,
                                    const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_match_report_json: cannot open " +
                                 path);
    out << match_report_json(res, eps).dump(2) << "\n";
}

inline void write_neutral_mode_csv(const NeutralModeTrack& tr,
                                   const std::string& path) {
    CsvTable t;
    t.header = {"tau", "a", "F"};
    t.columns.resize(3);
    for (const auto& s : tr.samples) {
        t.columns[0].push_back(s.tau);
        t.columns[1].push_back(s.a);
        t.columns[2].push_back(s.F);
    }
    write_csv(path, t);
}

}  // namespace ovals

#endif
