#ifndef OVALS_GRID_HPP
#define OVALS_GRID_HPP

// One-dimensional grid utilities shared by every module: three-point
// Lagrange derivative stencils on non-uniform nodes, monotone cubic
// interpolation for resampling generator arcs, composite quadrature, and
// the quintic smoothstep used to build cutoff functions.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ovals {

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    assert(n >= 2);
    std::vector<double> x(n);
    double h = (b - a) / double(n - 1);
    for (std::size_t i = 0; i < n; i++) x[i] = a + h * double(i);
    x.back() = b;  // avoid rounding drift at the right endpoint
    return x;
}

// Index of the left node of the interval containing x, clamped so that
// [i, i+1] is always a valid bracket.
inline std::size_t bracket(const std::vector<double>& x, double v) {
    assert(x.size() >= 2);
    auto it = std::upper_bound(x.begin(), x.end(), v);
    std::ptrdiff_t i = (it - x.begin()) - 1;
    i = std::clamp<std::ptrdiff_t>(i, 0, std::ptrdiff_t(x.size()) - 2);
    return std::size_t(i);
}

// First derivative of the quadratic through (x0,f0),(x1,f1),(x2,f2),
// evaluated at x. Exact for polynomials of degree <= 2, O(h^2) for smooth f
// when x is one of the nodes.
inline double lagrange3_d1(double x, double x0, double x1, double x2,
                           double f0, double f1, double f2) {
    return f0 * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2)) +
           f1 * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2)) +
           f2 * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
}

// Second derivative of the same quadratic (constant in x).
inline double lagrange3_d2(double x0, double x1, double x2,
                           double f0, double f1, double f2) {
    return 2.0 * (f0 / ((x0 - x1) * (x0 - x2)) +
                  f1 / ((x1 - x0) * (x1 - x2)) +
                  f2 / ((x2 - x0) * (x2 - x1)));
}

struct DerivativeTable {
    std::vector<double> d1;
    std::vector<double> d2;
};

// Tabulated first and second derivatives of samples f on nodes x: centered
// three-point stencils in the interior, one-sided at the two endpoints.
inline DerivativeTable derivative_table(const std::vector<double>& x,
                                        const std::vector<double>& f) {
    std::size_t n = x.size();
    if (n < 3 || f.size() != n)
        throw std::invalid_argument("derivative_table: need >= 3 matching nodes");
    DerivativeTable t;
    t.d1.resize(n);
    t.d2.resize(n);
    for (std::size_t i = 0; i < n; i++) {
        std::size_t j = (i == 0) ? 1 : (i == n - 1) ? n - 2 : i;
        t.d1[i] = lagrange3_d1(x[i], x[j - 1], x[j], x[j + 1],
                               f[j - 1], f[j], f[j + 1]);
        t.d2[i] = lagrange3_d2(x[j - 1], x[j], x[j + 1],
                               f[j - 1], f[j], f[j + 1]);
    }
    return t;
}

// Trapezoid rule on arbitrary nodes.
inline double trapezoid(const std::vector<double>& x,
                        const std::vector<double>& f) {
    assert(x.size() == f.size() && x.size() >= 2);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); i++)
        s += 0.5 * (f[i] + f[i + 1]) * (x[i + 1] - x[i]);
    return s;
}

// Composite Simpson rule on a uniform grid; odd final interval falls back to
// trapezoid so any node count >= 2 is accepted.
inline double simpson_uniform(double h, const std::vector<double>& f) {
    std::size_t n = f.size();
    assert(n >= 2);
    double s = 0.0;
    std::size_t i = 0;
    for (; i + 2 < n; i += 2) s += (h / 3.0) * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
    if (i + 1 < n) s += 0.5 * h * (f[i] + f[i + 1]);
    return s;
}

// Cubic Hermite value on [xa, xb] from endpoint values and slopes.
inline double hermite_value(double x, double xa, double xb,
                            double fa, double fb, double da, double db) {
    double h = xb - xa;
    double t = (x - xa) / h;
    double t2 = t * t, t3 = t2 * t;
    return fa * (2 * t3 - 3 * t2 + 1) + h * da * (t3 - 2 * t2 + t) +
           fb * (-2 * t3 + 3 * t2) + h * db * (t3 - t2);
}

// Derivative of the same Hermite patch.
inline double hermite_deriv(double x, double xa, double xb, double fa,
                            double fb, double da, double db) {
    double h = xb - xa;
    double t = (x - xa) / h, t2 = t * t;
    return (fa * (6 * t2 - 6 * t) + h * da * (3 * t2 - 4 * t + 1) +
            fb * (6 * t - 6 * t2) + h * db * (3 * t2 - 2 * t)) / h;
}

// Monotone piecewise-cubic interpolant (Fritsch-Carlson limited slopes).
// Used wherever a generator arc or profile is resampled: it never
// overshoots, so positive data stays positive and monotone data stays
// monotone.
class MonotoneCubic {
  public:
    MonotoneCubic() = default;

    MonotoneCubic(std::vector<double> x, std::vector<double> f)
        : x_(std::move(x)), f_(std::move(f)) {
        std::size_t n = x_.size();
        if (n < 2 || f_.size() != n)
            throw std::invalid_argument("MonotoneCubic: need >= 2 matching nodes");
        for (std::size_t i = 0; i + 1 < n; i++)
            if (!(x_[i + 1] > x_[i]))
                throw std::invalid_argument("MonotoneCubic: nodes must increase");
        d_.assign(n, 0.0);
        if (n == 2) {
            d_[0] = d_[1] = slope(0);
            return;
        }
        // Interior slopes: harmonic mean of adjacent secants when they agree
        // in sign, zero across local extrema.
        for (std::size_t i = 1; i + 1 < n; i++) {
            double s0 = slope(i - 1), s1 = slope(i);
            if (s0 * s1 <= 0.0) {
                d_[i] = 0.0;
            } else {
                double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
                double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
                d_[i] = (w0 + w1) / (w0 / s0 + w1 / s1);
            }
        }
        d_[0] = endpoint_slope(slope(0), slope(1), x_[1] - x_[0], x_[2] - x_[1]);
        d_[n - 1] = endpoint_slope(slope(n - 2), slope(n - 3),
                                   x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3]);
    }

    double operator()(double x) const {
        std::size_t i = bracket(x_, x);
        return hermite_value(x, x_[i], x_[i + 1], f_[i], f_[i + 1], d_[i], d_[i + 1]);
    }

    double deriv(double x) const {
        std::size_t i = bracket(x_, x);
        return hermite_deriv(x, x_[i], x_[i + 1], f_[i], f_[i + 1], d_[i], d_[i + 1]);
    }

    const std::vector<double>& nodes() const { return x_; }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

  private:
    double slope(std::size_t i) const {
        return (f_[i + 1] - f_[i]) / (x_[i + 1] - x_[i]);
    }

    // One-sided three-point slope, limited so the end interval stays
    // monotone (standard Fritsch-Carlson endpoint treatment).
    static double endpoint_slope(double s_near, double s_far, double h_near,
                                 double h_far) {
        double d = ((2.0 * h_near + h_far) * s_near - h_near * s_far) /
                   (h_near + h_far);
        if (d * s_near <= 0.0) return 0.0;
        if (s_near * s_far <= 0.0 && std::fabs(d) > 3.0 * std::fabs(s_near))
            return 3.0 * s_near;
        return d;
    }

    std::vector<double> x_, f_, d_;
};

// Quintic smoothstep: 0 at t<=0, 1 at t>=1, C^2 across both ends.
inline double smoothstep5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// Smooth indicator that ramps 0 -> 1 over [a, b] (or 1 -> 0 when b < a).
inline double ramp(double x, double a, double b) {
    return smoothstep5((x - a) / (b - a));
}

}  // namespace ovals

#endif
