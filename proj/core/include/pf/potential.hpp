// The quartic double-well W(s) = (1-s^2)^2/4, the 1D transition profile
// q(s) = tanh(s/sqrt(2)) solving q'' = W'(q), and the surface-tension
// constant c0 = integral of sqrt(2 W) over [-1,1] = 2 sqrt(2)/3.
#pragma once
#include <cmath>
#include <numbers>
#include <utility>

namespace pf {

inline double well(double s) {
    double a = 1.0 - s * s;
    return 0.25 * a * a;
}
inline double well_d1(double s) { return s * s * s - s; }
inline double well_d2(double s) { return 3.0 * s * s - 1.0; }

// (q, q') at s; q' = (1-q^2)/sqrt(2) = sqrt(2 W(q))
inline std::pair<double, double> optimal_profile(double s) {
    double q = std::tanh(s / std::numbers::sqrt2);
    double dq = (1.0 - q * q) / std::numbers::sqrt2;
    return {q, dq};
}
inline double profile_q(double s) { return optimal_profile(s).first; }
inline double profile_dq(double s) { return optimal_profile(s).second; }

// Adaptive Simpson quadrature of sqrt(2 W) over [-1,1]; agrees with the
// closed form 2 sqrt(2)/3 to better than 1e-12.
double c0_constant();

inline constexpr double c0_closed_form = 0.9428090415820634; // 2 sqrt(2)/3

// Generic adaptive Simpson, exposed for test oracles.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int depth = 48) {
    auto simpson = [&](double lo, double hi) {
        double mid = 0.5 * (lo + hi);
        return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
    };
    auto rec = [&](auto&& self, double lo, double hi, double w, double eps, int d) -> double {
        double mid = 0.5 * (lo + hi);
        double left = simpson(lo, mid), right = simpson(mid, hi);
        double delta = left + right - w;
        if (d <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
        return self(self, lo, mid, left, 0.5 * eps, d - 1) +
               self(self, mid, hi, right, 0.5 * eps, d - 1);
    };
    return rec(rec, a, b, simpson(a, b), tol, depth);
}

} // namespace pf
