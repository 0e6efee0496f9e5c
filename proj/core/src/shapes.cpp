#include "pf/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pf {

double c0_constant() {
    return adaptive_simpson([](double s) { return std::sqrt(2.0 * well(s)); }, -1.0, 1.0,
                            1e-14);
}

namespace {

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    Vec2 ab = b - a;
    double len2 = ab.norm2();
    if (len2 == 0.0) return (p - a).norm();
    double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

bool point_in_loops(const std::vector<std::vector<Vec2>>& loops, const Vec2& p) {
    // even-odd crossing rule (PNPOLY)
    bool inside = false;
    for (const auto& loop : loops) {
        size_t n = loop.size();
        for (size_t i = 0, j = n - 1; i < n; j = i++) {
            bool cross = ((loop[i].y > p.y) != (loop[j].y > p.y)) &&
                         (p.x < (loop[j].x - loop[i].x) * (p.y - loop[i].y) /
                                        (loop[j].y - loop[i].y) +
                                    loop[i].x);
            if (cross) inside = !inside;
        }
    }
    return inside;
}

double polygon_signed_distance(const Polygon& poly, const Vec2& p) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& loop : poly.loops) {
        size_t n = loop.size();
        for (size_t i = 0, j = n - 1; i < n; j = i++)
            d = std::min(d, point_segment_distance(p, loop[j], loop[i]));
    }
    return point_in_loops(poly.loops, p) ? d : -d;
}

SdfResult ellipse_signed_distance(const Ellipse& e, const Vec2& p0) {
    Vec2 p = p0 - e.center;
    double a = e.a, b = e.b;
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("ellipse: semi-axes must be > 0");
    double inside = (p.x / a) * (p.x / a) + (p.y / b) * (p.y / b);
    auto bnd = [&](double t) { return Vec2{a * std::cos(t), b * std::sin(t)}; };
    auto dbnd = [&](double t) { return Vec2{-a * std::sin(t), b * std::cos(t)}; };

    // bracket the global minimum coarsely, then Newton on the stationarity
    // equation (p - e(t)) . e'(t) = 0
    const int nc = 128;
    double t = 0.0, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nc; ++i) {
        double ti = 2.0 * std::numbers::pi * i / nc;
        double di = (p - bnd(ti)).norm2();
        if (di < best) {
            best = di;
            t = ti;
        }
    }
    bool converged = false;
    const double guard = 2.0 * std::numbers::pi / nc;
    double t0 = t;
    for (int it = 0; it < 40; ++it) {
        Vec2 x = bnd(t), dx = dbnd(t);
        Vec2 r = p - x;
        double g = r.dot(dx);
        Vec2 ddx{-a * std::cos(t), -b * std::sin(t)};
        double dg = -dx.norm2() + r.dot(ddx);
        if (dg == 0.0 || std::abs(t - t0) > 2.0 * guard) break;
        double step = g / dg;
        t -= step;
        if (std::abs(step) < 1e-14) {
            converged = true;
            break;
        }
    }
    if (converged && (p - bnd(t)).norm2() > best + 1e-12) converged = false;
    SdfResult out;
    if (converged) {
        out.d = (p - bnd(t)).norm();
    } else {
        out.fallback = true;
        double best = std::numeric_limits<double>::infinity(), bt = 0.0;
        const int n = 4096;
        for (int i = 0; i < n; ++i) {
            double ti = 2.0 * std::numbers::pi * i / n;
            double di = (p - bnd(ti)).norm();
            if (di < best) {
                best = di;
                bt = ti;
            }
        }
        // parabolic refinement
        double lo = bt - 2.0 * std::numbers::pi / n, hi = bt + 2.0 * std::numbers::pi / n;
        for (int it = 0; it < 60; ++it) {
            double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if ((p - bnd(m1)).norm() < (p - bnd(m2)).norm())
                hi = m2;
            else
                lo = m1;
        }
        out.d = (p - bnd(0.5 * (lo + hi))).norm();
    }
    if (inside > 1.0) out.d = -out.d;
    return out;
}

} // namespace

SdfResult signed_distance_ex(const Shape& s, const Vec2& p) {
    return std::visit(
        [&](const auto& sh) -> SdfResult {
            using T = std::decay_t<decltype(sh)>;
            SdfResult r;
            if constexpr (std::is_same_v<T, Circle>) {
                r.d = sh.r - (p - sh.center).norm();
            } else if constexpr (std::is_same_v<T, Ellipse>) {
                r = ellipse_signed_distance(sh, p);
            } else if constexpr (std::is_same_v<T, CrossShape>) {
                double sgn = (p.x * p.y > 0.0) ? 1.0 : (p.x * p.y < 0.0 ? -1.0 : 0.0);
                r.d = sgn * std::min(std::abs(p.x), std::abs(p.y));
                if (sgn == 0.0) r.d = 0.0;
            } else if constexpr (std::is_same_v<T, Polygon>) {
                r.d = polygon_signed_distance(sh, p);
            } else if constexpr (std::is_same_v<T, CuspDumbbell>) {
                r.d = polygon_signed_distance(cusp_limit_polygon(sh), p);
            } else {
                r.d = polygon_signed_distance(cusp_approximant(sh.base, sh.h_index), p);
            }
            return r;
        },
        s);
}

double signed_distance(const Shape& s, const Vec2& p) { return signed_distance_ex(s, p).d; }

namespace {

// lobe boundary height above the axis at arc parameter xi in [0, lobe_len]
double lobe_profile(const CuspDumbbell& d, double xi) {
    double root = 1.0 - xi / d.lobe_len;
    if (root < 0.0) root = 0.0;
    return d.coef * xi * xi * xi * std::sqrt(root);
}

double lobe_max_height(const CuspDumbbell& d) {
    // max of sin^6(s) cos(s) is (6/7)^3 / sqrt(7)
    return d.coef * std::pow(d.lobe_len, 3) * std::pow(6.0 / 7.0, 3) / std::sqrt(7.0);
}

// tube half-height damping toward the cap; w(0)=1, w'(0)=0, w(lobe_len)=0
double tube_damp(const CuspDumbbell& d, double xi) {
    double s = xi / d.lobe_len;
    double a = 1.0 - s * s;
    return a * a;
}

void append_dedup(std::vector<Vec2>& v, const Vec2& p) {
    if (!v.empty() && (v.back() - p).norm() < 1e-13) return;
    v.push_back(p);
}

} // namespace

Polygon cusp_approximant(const CuspDumbbell& base, int h_index) {
    if (!(base.L > 0.0)) throw std::invalid_argument("cusp_approximant: L must be > 0");
    if (h_index < 1) throw std::invalid_argument("cusp_approximant: h_index must be >= 1");
    double yt = 0.5 / h_index; // tube half-height
    if (yt >= 0.8 * lobe_max_height(base))
        throw std::invalid_argument("cusp_approximant: tube height must be below the lobe size");

    const double xc = 0.5 * base.L;
    const int nw = 64;                               // wall samples
    const int nl = std::max(64, base.samples_per_lobe); // per lobe
    std::vector<Vec2> v;

    // height of E_h's boundary above the axis at lobe parameter xi
    auto eh = [&](double xi) {
        double f = lobe_profile(base, xi);
        double w = yt * tube_damp(base, xi);
        return std::sqrt(w * w + f * f);
    };

    // upper wall, left to right
    for (int i = 0; i <= nw; ++i)
        append_dedup(v, {-xc + base.L * i / nw, yt});
    // right lobe: t in (0, 2pi), xi = lobe_len sin^2(t/2), sign from cos(t/2)
    for (int i = 1; i < 2 * nl; ++i) {
        double t = std::numbers::pi * i / nl;
        double xi = base.lobe_len * std::pow(std::sin(0.5 * t), 2);
        double sgn = std::cos(0.5 * t) >= 0.0 ? 1.0 : -1.0;
        append_dedup(v, {xc + xi, sgn * eh(xi)});
    }
    // lower wall, right to left
    for (int i = 0; i <= nw; ++i)
        append_dedup(v, {xc - base.L * i / nw, -yt});
    // left lobe (mirror of the right one, reversed for continuity)
    for (int i = 2 * nl - 1; i >= 1; --i) {
        double t = std::numbers::pi * i / nl;
        double xi = base.lobe_len * std::pow(std::sin(0.5 * t), 2);
        double sgn = std::cos(0.5 * t) >= 0.0 ? 1.0 : -1.0;
        append_dedup(v, {-xc - xi, sgn * eh(xi)});
    }
    if ((v.front() - v.back()).norm() < 1e-13) v.pop_back();
    return Polygon{{v}};
}

Polygon cusp_approximant(double L, int h_index) {
    CuspDumbbell d;
    d.L = L;
    return cusp_approximant(d, h_index);
}

std::vector<std::vector<Vec2>> cusp_limit_lobes(const CuspDumbbell& base, int samples) {
    const double xc = 0.5 * base.L;
    const int nl = std::max(64, samples);
    std::vector<Vec2> right, left;
    for (int i = 0; i <= 2 * nl; ++i) {
        double t = std::numbers::pi * i / nl;
        double xi = base.lobe_len * std::pow(std::sin(0.5 * t), 2);
        double sgn = std::cos(0.5 * t) >= 0.0 ? 1.0 : -1.0;
        double y = sgn * lobe_profile(base, xi);
        append_dedup(right, {xc + xi, y});
        append_dedup(left, {-xc - xi, y});
    }
    return {right, left};
}

Polygon cusp_limit_polygon(const CuspDumbbell& base) {
    auto lobes = cusp_limit_lobes(base, base.samples_per_lobe);
    Polygon p;
    for (auto& lobe : lobes) {
        if ((lobe.front() - lobe.back()).norm() < 1e-13) lobe.pop_back();
        p.loops.push_back(std::move(lobe));
    }
    return p;
}

double polygon_area(const Polygon& p) {
    double a = 0.0;
    for (const auto& loop : p.loops) {
        double s = 0.0;
        size_t n = loop.size();
        for (size_t i = 0, j = n - 1; i < n; j = i++) s += loop[j].cross(loop[i]);
        a += std::abs(0.5 * s);
    }
    return a;
}

RecoveryField recovery_field(const Shape& s, double eps, const Grid2D& grid) {
    if (!(eps > 0.0)) throw std::invalid_argument("recovery_field: eps must be > 0");
    // materialize polygon-backed shapes once instead of per node
    Shape local = s;
    if (const auto* d = std::get_if<CuspDumbbell>(&s)) local = cusp_limit_polygon(*d);
    if (const auto* t = std::get_if<TubeApproximant>(&s))
        local = cusp_approximant(t->base, t->h_index);

    RecoveryField out;
    out.u = ScalarField2D(grid);
    out.resolved = eps >= 2.0 * std::max(grid.hx, grid.hy);
    double min_boundary_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            double d = signed_distance(local, grid.node(i, j));
            out.u.at(i, j) = profile_q(d / eps);
            if (i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1)
                min_boundary_d = std::min(min_boundary_d, std::abs(d));
        }
    out.interface_near_boundary = min_boundary_d < 5.0 * eps;
    return out;
}

} // namespace pf
