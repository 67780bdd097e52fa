#ifndef OVALS_SPECTRAL_HPP
#define OVALS_SPECTRAL_HPP

// Gaussian-weighted spectral machinery on the cylinder: the Hilbert space
// L^2(e^{-y^2/4} dy), the drift Laplacian L = d^2/dy^2 - (y/2) d/dy + 1,
// its monic polynomial eigenbasis psi_k (eigenvalue 1 - k/2), the associated
// h / d / dstar norms, sliding sup-norms in rescaled time, and the cutoff
// functions used to localize profiles to the cylindrical or tip regions.
//
// Moments of the weight: <y^{2m}> = (2m-1)!! 2^m 2sqrt(pi) (Gaussian with
// sigma^2 = 2, total mass 2 sqrt(pi)). The monic three-term recurrence is
//   psi_{k+1} = y psi_k - 2k psi_{k-1}
// because beta_k = <psi_k,psi_k>/<psi_{k-1},psi_{k-1}> = 2k, consistent with
// <psi_k,psi_k> = k! 2^k 2sqrt(pi) (both verified to high precision in the
// test suite, plus hand checks psi_2 = y^2-2, psi_3 = y^3-6y).

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ovals/grid.hpp"

namespace ovals {

using Fn = std::function<double(double)>;

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature for weight e^{-x^2} (physicists' convention).
// Orthonormal recurrence with power-of-two rescaling so node polishing
// survives degrees where the raw values overflow; weights at far-out nodes
// underflow to zero harmlessly.

struct GaussHermiteRule {
    std::vector<double> x;  // nodes, descending half omitted by symmetry? no: all nodes ascending
    std::vector<double> w;
};

namespace detail {

// Evaluate the orthonormal Hermite pair (h_N, h_{N-1}) at x with a shared
// power-of-two scale: returns mantissas and the scale exponent. h_N satisfies
// h_{j+1} = x sqrt(2/(j+1)) h_j - sqrt(j/(j+1)) h_{j-1}, h_0 = pi^{-1/4}.
inline void hermite_pair(int N, double x, double& hN, double& hNm1,
                         int& scale2) {
    double p0 = std::pow(3.14159265358979323846, -0.25);
    double p1 = p0 * x * std::sqrt(2.0);
    scale2 = 0;
    if (N == 0) {
        hN = p0;
        hNm1 = 0.0;
        return;
    }
    for (int j = 1; j < N; j++) {
        double p2 = x * std::sqrt(2.0 / double(j + 1)) * p1 -
                    std::sqrt(double(j) / double(j + 1)) * p0;
        p0 = p1;
        p1 = p2;
        if (std::fabs(p1) > 1e150) {
            int e;
            std::frexp(p1, &e);
            p0 = std::ldexp(p0, -e);
            p1 = std::ldexp(p1, -e);
            scale2 += e;
        }
    }
    hN = p1;
    hNm1 = p0;
}

inline GaussHermiteRule build_hermite_rule(int N) {
    GaussHermiteRule rule;
    rule.x.assign(N, 0.0);
    rule.w.assign(N, 0.0);
    int half = (N + 1) / 2;
    double x = 0.0;
    for (int i = 0; i < half; i++) {
        // Stroud-Secrest style initial guesses, largest root first.
        if (i == 0) {
            x = std::sqrt(2.0 * N + 1.0) -
                1.85575 * std::pow(2.0 * N + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            x -= 1.14 * std::pow(double(N), 0.426) / x;
        } else if (i == 2) {
            x = 1.86 * x - 0.86 * rule.x[N - 1];
        } else if (i == 3) {
            x = 1.91 * x - 0.91 * rule.x[N - 2];
        } else {
            x = 2.0 * x - rule.x[N - i + 1];
        }
        double hN, hNm1;
        int s2;
        for (int it = 0; it < 100; it++) {
            hermite_pair(N, x, hN, hNm1, s2);
            double dh = std::sqrt(2.0 * N) * hNm1;  // h_N'(x)
            double dx = hN / dh;
            x -= dx;
            if (std::fabs(dx) < 1e-15 * (1.0 + std::fabs(x))) break;
        }
        hermite_pair(N, x, hN, hNm1, s2);
        // w = 1/(N h_{N-1}^2); fold the tracked scale back in, flushing to
        // zero when it is too large to represent.
        double w = 0.0;
        double l2 = -std::log(double(N)) - 2.0 * (std::log(std::fabs(hNm1)) +
                                                  double(s2) * std::log(2.0));
        if (l2 > -745.0) w = std::exp(l2);
        rule.x[N - 1 - i] = x;
        rule.x[i] = -x;
        rule.w[N - 1 - i] = w;
        rule.w[i] = w;
    }
    if (N % 2 == 1) rule.x[N / 2] = 0.0;
    return rule;
}

inline const GaussHermiteRule& hermite_rule(int N) {
    static std::map<int, GaussHermiteRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(N);
    if (it == cache.end()) it = cache.emplace(N, build_hermite_rule(N)).first;
    return it->second;
}

}  // namespace detail

// <f, g> = int f g e^{-y^2/4} dy, via y = 2x onto the e^{-x^2} weight and
// adaptive node doubling until two successive rules agree to 1e-12. The
// agreement is measured against the absolute mass int |f g| e^{-y^2/4}: a
// cancelling integrand (orthogonal pair) legitimately converges to roundoff
// noise below that scale, and no absolute criterion could see it. Integrands
// must stay sub-Gaussian (|f g| <= poly * e^{y^2/8}); non-convergence throws.
inline double inner(const Fn& f, const Fn& g, double tol = 1e-12) {
    double prev = 0.0;
    bool have_prev = false;
    for (int N = 64; N <= 4096; N *= 2) {
        const auto& rule = detail::hermite_rule(N);
        double s = 0.0, mass = 0.0;
        for (int i = 0; i < N; i++) {
            if (rule.w[i] == 0.0) continue;
            double y = 2.0 * rule.x[i];
            double term = rule.w[i] * f(y) * g(y);
            s += term;
            mass += std::fabs(term);
        }
        s *= 2.0;
        mass *= 2.0;
        if (have_prev && std::isfinite(s) &&
            std::fabs(s - prev) <= tol * std::max(1.0, mass))
            return s;
        prev = s;
        have_prev = true;
    }
    throw std::runtime_error("inner: quadrature did not converge at 4096 nodes");
}

// ---------------------------------------------------------------------------
// Eigenbasis of L.

using bigrat = boost::multiprecision::cpp_rational;

struct EigenBasis {
    int max_degree = 0;
    // Exact monic coefficient rows: rows[k][j] multiplies y^j in psi_k.
    // Built in rational arithmetic; the eigen identity L psi_k = (1-k/2)
    // psi_k holds exactly on these rows (checked, not assumed, in tests).
    std::vector<std::vector<bigrat>> rows_exact;
    std::vector<std::vector<double>> polys;  // double image of rows_exact
    std::vector<double> sq_norms;            // <psi_k, psi_k> = k! 2^k 2sqrt(pi)
    std::vector<double> eigenvalues;         // 1 - k/2

    // Stable pointwise evaluation by the three-term recurrence (coefficient
    // rows become ill-conditioned near degree 20; never evaluate with them).
    double psi(int k, double y) const {
        double p0 = 1.0, p1 = y;
        if (k == 0) return p0;
        for (int j = 1; j < k; j++) {
            double p2 = y * p1 - 2.0 * double(j) * p0;
            p0 = p1;
            p1 = p2;
        }
        return p1;
    }

    // L applied in coefficient space: (L p)_j = (j+2)(j+1) p_{j+2} + (1-j/2) p_j.
    std::vector<bigrat> apply_L_exact(const std::vector<bigrat>& p) const {
        std::vector<bigrat> out(p.size());
        for (std::size_t j = 0; j < p.size(); j++) {
            out[j] = (bigrat(1) - bigrat(j) / 2) * p[j];
            if (j + 2 < p.size())
                out[j] += bigrat((j + 2) * (j + 1)) * p[j + 2];
        }
        return out;
    }
};

inline EigenBasis build_basis(int K) {
    if (K < 2 || K > 40)
        throw std::invalid_argument("build_basis: need 2 <= K <= 40");
    EigenBasis b;
    b.max_degree = K;
    b.rows_exact.assign(K + 1, {});
    for (int k = 0; k <= K; k++) b.rows_exact[k].assign(K + 1, bigrat(0));
    b.rows_exact[0][0] = 1;
    b.rows_exact[1][1] = 1;
    for (int k = 1; k < K; k++)
        for (int j = 0; j <= K; j++) {
            bigrat v = (j > 0) ? b.rows_exact[k][j - 1] : bigrat(0);
            v -= bigrat(2 * k) * b.rows_exact[k - 1][j];
            b.rows_exact[k + 1][j] = v;
        }
    b.polys.assign(K + 1, std::vector<double>(K + 1, 0.0));
    for (int k = 0; k <= K; k++)
        for (int j = 0; j <= K; j++)
            b.polys[k][j] = b.rows_exact[k][j].convert_to<double>();
    b.sq_norms.resize(K + 1);
    b.eigenvalues.resize(K + 1);
    double norm = 2.0 * std::sqrt(3.14159265358979323846);  // <1,1> = 2 sqrt(pi)
    for (int k = 0; k <= K; k++) {
        b.sq_norms[k] = norm;
        norm *= 2.0 * double(k + 1);  // <psi_{k+1}>^2 = (k+1)! 2^{k+1} 2sqrt(pi)
        b.eigenvalues[k] = 1.0 - 0.5 * double(k);
    }
    return b;
}

struct SpectralDecomposition {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    std::vector<double> coeffs;  // c_k for k = 0..K
    double minus_norm = 0.0;     // h-norm of f - pr_+ f - pr_0 f
    double h = 0.0, d = 0.0, dstar = 0.0;
    double tail2 = 0.0;  // squared h-mass beyond degree K (quadrature residual)
};

// Least-squares fit in the basis (orthogonal projection): c_k = <f,psi_k> /
// <psi_k,psi_k>. The tail (h-mass not captured by degree K) must stay below
// 1e-6 of the total or the fit is rejected; callers needing more headroom
// pass a larger basis.
inline SpectralDecomposition project(const EigenBasis& b, const Fn& f,
                                     double tail_tol = 1e-6) {
    SpectralDecomposition s;
    int K = b.max_degree;
    s.coeffs.resize(K + 1);
    for (int k = 0; k <= K; k++) {
        double ip = inner(f, [&](double y) { return b.psi(k, y); });
        s.coeffs[k] = ip / b.sq_norms[k];
    }
    s.c0 = s.coeffs[0];
    s.c1 = s.coeffs[1];
    s.c2 = s.coeffs[2];
    double total2 = inner(f, f);
    double band2 = 0.0;
    for (int k = 0; k <= K; k++)
        band2 += s.coeffs[k] * s.coeffs[k] * b.sq_norms[k];
    s.tail2 = std::max(0.0, total2 - band2);
    if (total2 > 0.0 && s.tail2 > tail_tol * total2)
        throw std::runtime_error(
            "project: spectral tail exceeds tolerance, increase the basis degree");
    double low2 = 0.0;
    for (int k = 0; k <= 2 && k <= K; k++)
        low2 += s.coeffs[k] * s.coeffs[k] * b.sq_norms[k];
    s.minus_norm = std::sqrt(std::max(0.0, total2 - low2));
    double h2 = 0.0, d2 = 0.0, ds2 = 0.0;
    for (int k = 0; k <= K; k++) {
        double mass = s.coeffs[k] * s.coeffs[k] * b.sq_norms[k];
        h2 += mass;
        d2 += (1.0 + 0.5 * double(k)) * mass;
        ds2 += mass / (1.0 + 0.5 * double(k));
    }
    s.h = std::sqrt(h2);
    s.d = std::sqrt(d2);
    s.dstar = std::sqrt(ds2);
    return s;
}

struct NormTriple {
    double h = 0.0, d = 0.0, dstar = 0.0;
};

// h^2 = sum c_k^2 |psi_k|^2; d^2 adds the derivative mass via the identity
// int psi_k'^2 e^{-y^2/4} = (k/2) <psi_k,psi_k> (so the k-th mode carries
// (1+k/2) of it); dstar divides by the same factor (coefficientwise dual).
inline NormTriple norms(const EigenBasis& b, const Fn& f,
                        double tail_tol = 1e-6) {
    SpectralDecomposition s = project(b, f, tail_tol);
    return {s.h, s.d, s.dstar};
}

// Pointwise L f = f'' - (y/2) f' + f by wide centered stencils (h ~ 1e-4
// balances truncation against roundoff; accuracy ~1e-8, enough for the
// pointwise checks that use this path). Coefficient space callers should use
// EigenBasis::apply_L_exact instead.
inline Fn apply_L(const Fn& f) {
    return [f](double y) {
        const double h = 1e-4;
        double fm2 = f(y - 2 * h), fm1 = f(y - h), f0 = f(y), fp1 = f(y + h),
               fp2 = f(y + 2 * h);
        double d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
        double d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h);
        return d2 - 0.5 * y * d1 + f0;
    };
}

// ---------------------------------------------------------------------------
// Sliding windowed sup-norms in rescaled time.

struct TimeSample {
    double tau;
    double value;
};

// Integral of value^2 over [t1, t0] by trapezoid with linear interpolation
// at the left window edge. Series must be tau-sorted.
inline double windowed_l2_sq(const std::vector<TimeSample>& series, double t1,
                             double t0) {
    if (series.size() < 2) throw std::invalid_argument("windowed_l2_sq: short series");
    auto sq = [](double v) { return v * v; };
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < series.size(); i++) {
        double a = series[i].tau, bb = series[i + 1].tau;
        if (bb <= t1 || a >= t0) continue;
        double va = series[i].value, vb = series[i + 1].value;
        double lo = std::max(a, t1), hi = std::min(bb, t0);
        double fa = va + (vb - va) * (lo - a) / (bb - a);
        double fb = va + (vb - va) * (hi - a) / (bb - a);
        s += 0.5 * (sq(fa) + sq(fb)) * (hi - lo);
    }
    return s;
}

// sup over right endpoints sigma of (int_{sigma-window}^{sigma} value^2)^{1/2}.
// Only endpoints with a full window inside the series count.
inline double sliding_sup_norm(const std::vector<TimeSample>& series,
                               double window = 1.0) {
    if (series.empty()) throw std::invalid_argument("sliding_sup_norm: empty series");
    for (std::size_t i = 0; i + 1 < series.size(); i++) {
        double step = series[i + 1].tau - series[i].tau;
        if (!(step > 0.0) || step > window / 10.0 + 1e-12)
            throw std::invalid_argument(
                "sliding_sup_norm: series must be sorted with step <= window/10");
    }
    double sup = 0.0;
    bool any = false;
    for (const auto& s : series) {
        if (s.tau - window < series.front().tau - 1e-12) continue;
        sup = std::max(sup, windowed_l2_sq(series, s.tau - window, s.tau));
        any = true;
    }
    if (!any)
        throw std::invalid_argument("sliding_sup_norm: no full window in series");
    return std::sqrt(sup);
}

// ---------------------------------------------------------------------------
// Cutoffs.

enum class CutoffKind { cylindrical, tip, transition_indicator };

// cylindrical: function of y, equal to 1 on the plateau |z| <= sqrt(2 -
//   theta^2/(n-1)) and 0 beyond |z| = sqrt(2 - theta^2/(4(n-1))), where
//   z = y/sqrt(|tau|) (the support boundaries are level sets of the
//   intermediate variable z, which fixes the scaling of the argument).
// tip: function of u, 1 on u <= theta, 0 on u >= 2 theta.
// transition_indicator: function of u, smoothed characteristic of
//   theta/2 <= u <= theta, ramp width theta/20.
inline Fn make_cutoff(CutoffKind kind, double theta, double tau, int n = 2) {
    if (!(theta > 0.0 && theta < 0.5))
        throw std::invalid_argument("make_cutoff: need 0 < theta < 1/2");
    if (!(tau < 0.0)) throw std::invalid_argument("make_cutoff: need tau < 0");
    if (kind == CutoffKind::cylindrical) {
        double z1 = std::sqrt(2.0 - theta * theta / double(n - 1));
        double z2 = std::sqrt(2.0 - theta * theta / (4.0 * double(n - 1)));
        double st = std::sqrt(-tau);
        return [z1, z2, st](double y) {
            double z = std::fabs(y) / st;
            return 1.0 - ramp(z, z1, z2);
        };
    }
    if (kind == CutoffKind::tip) {
        double t1 = theta, t2 = 2.0 * theta;
        return [t1, t2](double u) { return 1.0 - ramp(u, t1, t2); };
    }
    double delta = theta / 20.0;
    double lo = 0.5 * theta, hi = theta;
    return [lo, hi, delta](double u) {
        return ramp(u, lo - delta, lo + delta) *
               (1.0 - ramp(u, hi - delta, hi + delta));
    };
}

}  // namespace ovals

#endif
