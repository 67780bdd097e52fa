// Probe for the self-shrinker profile ODE
//   U'' = (1+U'^2) ( (y/2) U' - U/2 + (n-1)/U ),  U(y0) = a,  U'(y0) = 0.
// A zero-slope start below the cylinder value sqrt(2(n-1)) is initially
// convex (U''(y0) = (n-1)/a - a/2 > 0), so U rises; the run ends either by
// crossing the cylinder value (slope still moderate, conical growth follows)
// or by a vertical tangent (dU'/dU ~ (y/2)(1+U'^2) integrates to a finite
// rise ~ pi/y0 before U' = infinity). This program reports which ending
// occurs for a grid of (a, y0), in 50-digit arithmetic so the verdicts are
// roundoff-free; the verdicts calibrate the regime assertions committed in
// tests/test_soliton.cpp.

#include <iomanip>
#include <iostream>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/numeric/odeint.hpp>

using real = boost::multiprecision::cpp_bin_float_50;

struct St {
    real u, p;
};
inline St operator+(const St& a, const St& b) { return {a.u + b.u, a.p + b.p}; }
inline St operator-(const St& a, const St& b) { return {a.u - b.u, a.p - b.p}; }
inline St operator*(const real& c, const St& a) { return {c * a.u, c * a.p}; }
inline St operator*(const St& a, const real& c) { return {a.u * c, a.p * c}; }
inline St operator/(const St& a, const St& b) { return {a.u / b.u, a.p / b.p}; }
inline St abs(const St& a) {
    return {a.u < 0 ? real(-a.u) : a.u, a.p < 0 ? real(-a.p) : a.p};
}
inline St operator+(const St& a, const real& c) { return {a.u + c, a.p + c}; }
inline St operator+(const real& c, const St& a) { return {c + a.u, c + a.p}; }

namespace boost::numeric::odeint {
template <>
struct vector_space_norm_inf<St> {
    typedef real result_type;
    real operator()(const St& s) const {
        real au = s.u < 0 ? real(-s.u) : s.u;
        real ap = s.p < 0 ? real(-s.p) : s.p;
        return au > ap ? au : ap;
    }
};
}  // namespace boost::numeric::odeint

namespace {

struct Rhs {
    int n;
    void operator()(const St& s, St& d, const real& y) const {
        d.u = s.p;
        d.p = (1 + s.p * s.p) * (y * s.p / 2 - s.u / 2 + real(n - 1) / s.u);
    }
};

void probe(int n, double a, double y0) {
    namespace od = boost::numeric::odeint;
    real cyl = sqrt(real(2) * (n - 1));
    using rkf = od::runge_kutta_fehlberg78<St, real, St, real,
                                           od::vector_space_algebra>;
    auto stepper = od::make_controlled(real("1e-30"), real("1e-30"), rkf());
    St s{real(a), real(0)};
    real y = real(y0);
    real max_u = s.u;
    const real h("1e-3");
    std::string verdict = "reached_y40";
    while (y < 40) {
        try {
            od::integrate_adaptive(stepper, Rhs{n}, s, y, y + h, h / 8);
        } catch (...) {
            verdict = "stepper_failure";
            break;
        }
        y += h;
        if (s.u > max_u) max_u = s.u;
        if (s.u >= cyl) {
            verdict = "crossed_cylinder";
            break;
        }
        if (s.p > 1e8) {
            verdict = "vertical_tangent_below";
            break;
        }
    }
    std::cout << std::setprecision(12) << "n=" << n << " a=" << a
              << " y0=" << y0 << " verdict=" << verdict << " y_end=" << y
              << " max_u=" << max_u << " (cyl=" << cyl << ")\n";
}

}  // namespace

int main() {
    probe(2, 1.0, 4.0);
    probe(2, 0.5, 4.0);
    probe(2, 1.3, 4.0);
    probe(2, 1.0, 10.0);
    probe(2, 0.8, 10.0);
    probe(2, 1.2, 8.0);
    probe(3, 1.5, 10.0);
    return 0;
}
