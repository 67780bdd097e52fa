// Frozen-value generator for the translator ODE
//   Z'' / (1+Z'^2) + (n-1) Z'/rho + sqrt(2)/2 = 0,  Z(0) = Z'(0) = 0.
// Integrates in 50-digit floats from a 6th-order series start at rho = 1e-3
// with two unrelated controlled steppers (RKF78 and Cash-Karp 5(4)); values
// are printed only when the two agree to 1e-20. The printed constants are
// committed into tests/golden_values.hpp; rerun this program by hand if they
// ever need to be re-derived.

#include <iomanip>
#include <iostream>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/numeric/odeint.hpp>

using real = boost::multiprecision::cpp_bin_float_50;

// Two-component state with elementwise arithmetic so odeint's
// vector_space_algebra (the documented route for multiprecision scalars)
// can drive the controlled steppers.
struct St {
    real z, p;
};
inline St operator+(const St& a, const St& b) { return {a.z + b.z, a.p + b.p}; }
inline St operator-(const St& a, const St& b) { return {a.z - b.z, a.p - b.p}; }
inline St operator*(const real& c, const St& a) { return {c * a.z, c * a.p}; }
inline St operator*(const St& a, const real& c) { return {a.z * c, a.p * c}; }
inline St operator/(const St& a, const St& b) { return {a.z / b.z, a.p / b.p}; }
inline St abs(const St& a) {
    return {a.z < 0 ? real(-a.z) : a.z, a.p < 0 ? real(-a.p) : a.p};
}
inline St operator+(const St& a, const real& c) { return {a.z + c, a.p + c}; }
inline St operator+(const real& c, const St& a) { return {c + a.z, c + a.p}; }

namespace boost::numeric::odeint {
template <>
struct vector_space_norm_inf<St> {
    typedef real result_type;
    real operator()(const St& s) const {
        real az = s.z < 0 ? real(-s.z) : s.z;
        real ap = s.p < 0 ? real(-s.p) : s.p;
        return az > ap ? az : ap;
    }
};
}  // namespace boost::numeric::odeint

namespace {

const real sqrt2 = sqrt(real(2));

struct Rhs {
    int n;
    void operator()(const St& s, St& d, const real& r) const {
        d.z = s.p;
        d.p = -(1 + s.p * s.p) * (real(n - 1) * s.p / r + sqrt2 / 2);
    }
};

// Series Z = a r^2 + b r^4 + c r^6 with coefficients forced by the ODE:
//   2an + sqrt2/2 = 0,  b(4n+8) = 8a^3,  c(6n+24) = 80 a^2 b - 32 a^5.
St series(int n, const real& r) {
    real a = -sqrt2 / (4 * real(n));
    real b = 2 * a * a * a / real(n + 2);
    real c = (80 * a * a * b - 32 * pow(a, 5)) / (6 * real(n + 4));
    return {a * r * r + b * pow(r, 4) + c * pow(r, 6),
            2 * a * r + 4 * b * pow(r, 3) + 6 * c * pow(r, 5)};
}

template <class Stepper>
St run(int n, real r_end, Stepper stepper) {
    real r0("1e-3");
    St s = series(n, r0);
    boost::numeric::odeint::integrate_adaptive(stepper, Rhs{n}, s, r0, r_end,
                                               real("1e-4"));
    return s;
}

void emit(int n, double r_end) {
    namespace od = boost::numeric::odeint;
    using od::make_controlled;
    using rkf = od::runge_kutta_fehlberg78<St, real, St, real,
                                           od::vector_space_algebra>;
    using rkck = od::runge_kutta_cash_karp54<St, real, St, real,
                                             od::vector_space_algebra>;
    St s1 = run(n, real(r_end), make_controlled(real("1e-28"), real("1e-28"), rkf()));
    St s2 = run(n, real(r_end), make_controlled(real("1e-26"), real("1e-26"), rkck()));
    real dz = abs(s1.z - s2.z), dp = abs(s1.p - s2.p);
    std::cout << std::setprecision(25) << "n=" << n << " rho=" << r_end
              << " Z0=" << s1.z << " Z0p=" << s1.p
              << " stepper_disagreement=" << std::setprecision(3) << dz
              << "," << dp << "\n";
    if (dz > real("1e-20") || dp > real("1e-20"))
        std::cout << "  WARNING: steppers disagree beyond 1e-20, do not freeze\n";
}

}  // namespace

int main() {
    emit(2, 1.0);
    emit(2, 5.0);
    emit(2, 20.0);
    emit(2, 100.0);
    emit(3, 1.0);
    return 0;
}
