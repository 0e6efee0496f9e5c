#include "pf/varifold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>

namespace pf {

namespace {
constexpr double kPi = std::numbers::pi;

int angle_bin(double theta, int n_bins) {
    int b = static_cast<int>(std::floor(theta / kPi * n_bins));
    if (b < 0) b = 0;
    if (b >= n_bins) b = n_bins - 1;
    return b;
}

double wrap_angle(double theta) {
    theta = std::fmod(theta, kPi);
    if (theta < 0.0) theta += kPi;
    return theta;
}

// distance on the circle of directions [0, pi)
double angle_dist(double a, double b) {
    double d = std::abs(a - b);
    return std::min(d, kPi - d);
}
} // namespace

DiffuseVarifold diffuse_varifold(const ScalarField2D& u, double eps, double tau, int n_bins) {
    if (n_bins < 18) throw std::invalid_argument("diffuse_varifold: n_bins must be >= 18");
    const Grid2D& g = u.grid;
    const double c0 = c0_closed_form;

    DiffuseVarifold v;
    v.grid = g;
    v.eps = eps;
    v.n_bins = n_bins;
    v.mass.assign(g.count(), 0.0);
    v.angle.assign(g.count(), -1.0);
    v.bin_mass.assign(n_bins + 1, 0.0);

    VectorField2D grad = gradient(u);
    LevelSetGeometry geo = normal_field(u, tau);

    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            double g2 = grad.x[k] * grad.x[k] + grad.y[k] * grad.y[k];
            // mu-tilde density assembled as mu + xi, the same operations the
            // energy report uses, so the mass-consistency identity is exact
            double kin = 0.5 * eps * g2;
            double pot = well(u.v[k]) / eps;
            double m = ((kin + pot) + (kin - pot)) * g.quad_weight(i, j) / c0;
            v.mass[k] = m;
            if (geo.valid[k]) {
                // level-line direction is perpendicular to nu
                double theta = wrap_angle(std::atan2(geo.normal.x[k], -geo.normal.y[k]));
                v.angle[k] = theta;
                v.bin_mass[angle_bin(theta, n_bins)] += m;
            } else {
                v.bin_mass[n_bins] += m;
                v.undirected_mass += m;
            }
            v.total_mass += m;
        }
    return v;
}

double PolylineVarifold::total_mass() const {
    double s = 0.0;
    for (const auto& c : curves) {
        size_t n = c.pts.size();
        if (n < 2) continue;
        size_t edges = c.closed ? n : n - 1;
        for (size_t e = 0; e < edges; ++e)
            s += c.multiplicity * (c.pts[(e + 1) % n] - c.pts[e]).norm();
    }
    return s;
}

void write_polylines(const PolylineVarifold& pv, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_polylines: cannot open '" + path + "'");
    char buf[80];
    for (const auto& c : pv.curves) {
        out << "CURVE closed=" << (c.closed ? 1 : 0) << " theta=" << c.multiplicity
            << " n=" << c.pts.size() << "\n";
        for (const Vec2& p : c.pts) {
            std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
            out << buf;
        }
    }
}

PolylineVarifold read_polylines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_polylines: cannot open '" + path + "'");
    PolylineVarifold pv;
    std::string tok;
    while (in >> tok) {
        if (tok != "CURVE") throw std::runtime_error("read_polylines: expected CURVE");
        Polyline c;
        int closed = 0, n = 0;
        std::string kv;
        for (int f = 0; f < 3; ++f) {
            in >> kv;
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw std::runtime_error("read_polylines: bad header");
            std::string key = kv.substr(0, eq);
            int val = std::stoi(kv.substr(eq + 1));
            if (key == "closed") closed = val;
            else if (key == "theta") c.multiplicity = val;
            else if (key == "n") n = val;
            else throw std::runtime_error("read_polylines: unknown key " + key);
        }
        c.closed = closed != 0;
        c.pts.resize(n);
        for (int i = 0; i < n; ++i) in >> c.pts[i].x >> c.pts[i].y;
        if (!in) throw std::runtime_error("read_polylines: truncated curve");
        pv.curves.push_back(std::move(c));
    }
    return pv;
}

VertexCurvature menger_curvature(const Vec2& a, const Vec2& b, const Vec2& c) {
    VertexCurvature out;
    Vec2 e1 = b - a, e2 = c - b, e3 = c - a;
    double l1 = e1.norm(), l2 = e2.norm(), l3 = e3.norm();
    if (l1 == 0.0 || l2 == 0.0 || l3 == 0.0) return out;
    double cr = e1.cross(e2);
    out.kappa = 2.0 * std::abs(cr) / (l1 * l2 * l3);
    Vec2 bis = (a - b) / l1 + (c - b) / l2;
    double bn = bis.norm();
    if (bn > 0.0) out.toward_center = bis / bn;
    return out;
}

double vertex_weight(const Polyline& c, size_t i) {
    size_t n = c.pts.size();
    if (n < 2) return 0.0;
    auto elen = [&](size_t e) { return (c.pts[(e + 1) % n] - c.pts[e]).norm(); };
    if (c.closed) {
        size_t prev = (i + n - 1) % n;
        return 0.5 * (elen(prev) + elen(i));
    }
    if (i == 0) return 0.5 * elen(0);
    if (i == n - 1) return 0.5 * elen(n - 2);
    return 0.5 * (elen(i - 1) + elen(i));
}

DiffuseFirstVariation first_variation_diffuse(const ScalarField2D& u, double eps,
                                              const VectorFieldFn& Y, double tau) {
    const Grid2D& g = u.grid;
    const double c0 = c0_closed_form;

    // sample Y on the grid and differentiate with the same stencils
    ScalarField2D yx(g), yy_(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Vec2 val = Y(g.node(i, j));
            yx.at(i, j) = val.x;
            yy_.at(i, j) = val.y;
        }
    VectorField2D dyx = gradient(yx), dyy = gradient(yy_);
    VectorField2D grad = gradient(u);
    ScalarField2D lap = laplacian(u);
    LevelSetGeometry geo = normal_field(u, tau);

    DiffuseFirstVariation out;
    double ymax = 0.0;
    for (double s : yx.v) ymax = std::max(ymax, std::abs(s));
    for (double s : yy_.v) ymax = std::max(ymax, std::abs(s));
    const double ytol = 1e-12 * std::max(1.0, ymax);

    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            double wq = g.quad_weight(i, j);
            // grad Y with (grad Y)_{ij} = d_j Y_i
            Mat2 dY{dyx.x[k], dyx.y[k], dyy.x[k], dyy.y[k]};
            Mat2 P = geo.projection.at(k);
            double g2 = grad.x[k] * grad.x[k] + grad.y[k] * grad.y[k];
            out.lhs += P.mul(dY).trace() * eps * g2 * wq / c0;
            double res = eps * lap.v[k] - well_d1(u.v[k]) / eps;
            out.rhs += res * (grad.x[k] * yx.v[k] + grad.y[k] * yy_.v[k]) * wq / c0;
            if (g.bc != BoundaryKind::Periodic &&
                (i < 2 || j < 2 || i >= g.nx - 2 || j >= g.ny - 2) &&
                (std::abs(yx.v[k]) > ytol || std::abs(yy_.v[k]) > ytol))
                out.boundary_warning = true;
        }
    return out;
}

PolylineFirstVariation polyline_first_variation(const PolylineVarifold& pv,
                                                const VectorFieldFn& Y, const JacobianFn& dY) {
    PolylineFirstVariation out;
    for (const auto& c : pv.curves) {
        size_t n = c.pts.size();
        if (n < 2) continue;
        double th = c.multiplicity;
        size_t edges = c.closed ? n : n - 1;
        for (size_t e = 0; e < edges; ++e) {
            Vec2 a = c.pts[e], b = c.pts[(e + 1) % n];
            Vec2 t = (b - a);
            double len = t.norm();
            if (len == 0.0) continue;
            t = t / len;
            Mat2 S = Mat2::outer(t, t);
            Vec2 mid = (a + b) * 0.5;
            out.delta_v += th * S.mul(dY(mid)).trace() * len;
        }
        // generalized mean curvature pairing: H = d(deltaV)/dmu = -kappa_vec
        size_t i0 = c.closed ? 0 : 1;
        size_t i1 = c.closed ? n : n - 1;
        for (size_t i = i0; i < i1; ++i) {
            Vec2 prev = c.pts[(i + n - 1) % n], cur = c.pts[i], next = c.pts[(i + 1) % n];
            VertexCurvature vc = menger_curvature(prev, cur, next);
            Vec2 H = vc.toward_center * (-vc.kappa);
            out.curvature_pairing += th * H.dot(Y(cur)) * vertex_weight(c, i);
        }
        if (!c.closed) {
            Vec2 t_first = (c.pts[1] - c.pts[0]).normalized();
            Vec2 t_last = (c.pts[n - 1] - c.pts[n - 2]).normalized();
            out.endpoint_atoms.push_back({c.pts[0], t_first * (-th)});
            out.endpoint_atoms.push_back({c.pts[n - 1], t_last * th});
        }
    }
    return out;
}

double hutchinson_residual(const PolylineVarifold& pv, const GrassmannTestFn& phi) {
    double rx = 0.0, ry = 0.0;
    for (const auto& c : pv.curves) {
        size_t n = c.pts.size();
        if (n < 2) continue;
        double th = c.multiplicity;
        size_t edges = c.closed ? n : n - 1;
        std::vector<Vec2> tang(edges);
        std::vector<Mat2> proj(edges);
        for (size_t e = 0; e < edges; ++e) {
            Vec2 t = (c.pts[(e + 1) % n] - c.pts[e]).normalized();
            tang[e] = t;
            proj[e] = Mat2::outer(t, t);
        }
        // exact per-edge integral of S grad(phi): tau_i [phi(b,S) - phi(a,S)]
        for (size_t e = 0; e < edges; ++e) {
            double dphi = phi.value(c.pts[(e + 1) % n], proj[e]) - phi.value(c.pts[e], proj[e]);
            rx += th * tang[e].x * dphi;
            ry += th * tang[e].y * dphi;
        }
        // vertex (turning) terms
        size_t vstart = c.closed ? 0 : 1;
        size_t vcount = c.closed ? n : n - 1;
        for (size_t i = vstart; i < vcount; ++i) {
            size_t e_in = (i + edges - 1) % edges;
            size_t e_out = i % edges;
            if (!c.closed) {
                e_in = i - 1;
                e_out = i;
            }
            Vec2 tm = tang[e_in], tp = tang[e_out];
            Vec2 tbar = (tm + tp).normalized();
            if (tbar.norm() == 0.0) tbar = tp;
            Mat2 Sbar = Mat2::outer(tbar, tbar);
            Mat2 dS = proj[e_out] - proj[e_in];
            Mat2 dmphi = phi.dm(c.pts[i], Sbar);
            double pairing = dS.xx * dmphi.xx + dS.xy * dmphi.xy + dS.yx * dmphi.yx +
                             dS.yy * dmphi.yy;
            double val = phi.value(c.pts[i], Sbar);
            rx += th * (tbar.x * pairing + (tp.x - tm.x) * val);
            ry += th * (tbar.y * pairing + (tp.y - tm.y) * val);
        }
    }
    return std::max(std::abs(rx), std::abs(ry));
}

double density_ratio(const DiffuseVarifold& v, const Vec2& x, double rho) {
    const Grid2D& g = v.grid;
    double x1 = g.x(g.nx - 1), y1 = g.y(g.ny - 1);
    if (x.x - rho < g.ox || x.x + rho > x1 || x.y - rho < g.oy || x.y + rho > y1)
        throw std::invalid_argument("density_ratio: ball clipped by the domain boundary");
    double m = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if ((g.node(i, j) - x).norm2() < rho * rho) m += v.mass[g.idx(i, j)];
    return m / (2.0 * rho);
}

namespace {
// length of segment [a,b] inside the ball B_rho(x)
double clipped_length(const Vec2& a, const Vec2& b, const Vec2& x, double rho) {
    Vec2 d = b - a;
    double len2 = d.norm2();
    if (len2 == 0.0) return 0.0;
    Vec2 f = a - x;
    double A = len2, B = 2.0 * f.dot(d), C = f.norm2() - rho * rho;
    double disc = B * B - 4.0 * A * C;
    if (disc <= 0.0) return 0.0;
    double sd = std::sqrt(disc);
    double t0 = std::max(0.0, (-B - sd) / (2.0 * A));
    double t1 = std::min(1.0, (-B + sd) / (2.0 * A));
    if (t1 <= t0) return 0.0;
    return (t1 - t0) * std::sqrt(len2);
}
} // namespace

double density_ratio(const PolylineVarifold& pv, const Vec2& x, double rho) {
    double m = 0.0;
    for (const auto& c : pv.curves) {
        size_t n = c.pts.size();
        size_t edges = c.closed ? n : n - 1;
        for (size_t e = 0; e < edges; ++e)
            m += c.multiplicity * clipped_length(c.pts[e], c.pts[(e + 1) % n], x, rho);
    }
    return m / (2.0 * rho);
}

double mass_in_ball(const Grid2D& g, const std::vector<double>& density, const Vec2& x,
                    double rho) {
    double m = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if ((g.node(i, j) - x).norm2() < rho * rho)
                m += density[g.idx(i, j)] * g.quad_weight(i, j);
    return m;
}

namespace {

struct Cluster {
    double share = 0.0;
    double direction = 0.0;
};

// contiguous runs of bins holding >= 5% of the scale total, circularly
std::vector<Cluster> find_clusters(const std::vector<double>& hist) {
    int n = static_cast<int>(hist.size());
    double total = 0.0;
    for (double h : hist) total += h;
    std::vector<Cluster> out;
    if (total <= 0.0) return out;
    std::vector<bool> hot(n);
    for (int i = 0; i < n; ++i) hot[i] = hist[i] >= 0.05 * total;
    std::vector<bool> used(n, false);
    for (int i = 0; i < n; ++i) {
        if (!hot[i] || used[i]) continue;
        // walk back to the start of this run (circular)
        int start = i;
        while (hot[(start + n - 1) % n] && !used[(start + n - 1) % n] &&
               (start + n - 1) % n != i)
            start = (start + n - 1) % n;
        double mass = 0.0, mx = 0.0;
        int idx = start, count = 0;
        double ref = (start + 0.5) * kPi / n;
        while (hot[idx] && !used[idx] && count < n) {
            used[idx] = true;
            double center = (idx + 0.5) * kPi / n;
            // unwrap around the run start
            while (center - ref > kPi / 2) center -= kPi;
            while (center - ref < -kPi / 2) center += kPi;
            mass += hist[idx];
            mx += hist[idx] * center;
            idx = (idx + 1) % n;
            ++count;
        }
        Cluster c;
        c.share = mass / total;
        c.direction = wrap_angle(mx / mass);
        out.push_back(c);
    }
    std::sort(out.begin(), out.end(),
              [](const Cluster& a, const Cluster& b) { return a.share > b.share; });
    return out;
}

TangentProbeReport probe_from_histograms(const Vec2& x, const std::vector<double>& lambdas,
                                         std::vector<std::vector<double>> hists, int n_bins,
                                         const std::vector<double>& totals) {
    TangentProbeReport rep;
    rep.center = x;
    rep.scales = lambdas;
    rep.histograms = std::move(hists);

    size_t ns = lambdas.size();
    if (ns < 2 || totals.empty() || totals.back() <= 1e-12) return rep; // Inconclusive

    auto c_fine = find_clusters(rep.histograms[ns - 1]);
    auto c_prev = find_clusters(rep.histograms[ns - 2]);
    const double binw = kPi / n_bins;

    if (!c_fine.empty() && !c_prev.empty() && c_fine[0].share >= 0.95 &&
        c_prev[0].share >= 0.95 &&
        angle_dist(c_fine[0].direction, c_prev[0].direction) <= binw) {
        rep.verdict = TangentVerdict::UniqueTangent;
        rep.directions = {c_fine[0].direction};
        return rep;
    }
    // two or more substantial clusters, each matched by direction (not rank,
    // which can flip between scales when shares tie) to one at the prior scale
    if (c_fine.size() >= 2 && c_prev.size() >= 2 && c_fine[1].share >= 0.20 &&
        c_prev[1].share >= 0.20) {
        auto matched = [&](const Cluster& c) {
            for (const Cluster& p : c_prev)
                if (p.share >= 0.20 && angle_dist(c.direction, p.direction) <= binw)
                    return true;
            return false;
        };
        if (matched(c_fine[0]) && matched(c_fine[1])) {
            rep.verdict = TangentVerdict::NonUnique;
            for (size_t i = 0; i < c_fine.size() && i < 4; ++i)
                if (c_fine[i].share >= 0.20) rep.directions.push_back(c_fine[i].direction);
            return rep;
        }
    }
    return rep;
}

} // namespace

TangentProbeReport blow_up_probe(const DiffuseVarifold& v, const Vec2& x,
                                 const std::vector<double>& lambdas, int n_bins) {
    const Grid2D& g = v.grid;
    std::vector<std::vector<double>> hists;
    std::vector<double> totals;
    for (double lam : lambdas) {
        std::vector<double> h(n_bins, 0.0);
        double tot = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                int k = g.idx(i, j);
                if ((g.node(i, j) - x).norm2() >= lam * lam) continue;
                tot += v.mass[k] / lam;
                if (v.angle[k] >= 0.0) h[angle_bin(v.angle[k], n_bins)] += v.mass[k] / lam;
            }
        hists.push_back(std::move(h));
        totals.push_back(tot);
    }
    return probe_from_histograms(x, lambdas, std::move(hists), n_bins, totals);
}

TangentProbeReport blow_up_probe(const PolylineVarifold& pv, const Vec2& x,
                                 const std::vector<double>& lambdas, int n_bins) {
    std::vector<std::vector<double>> hists;
    std::vector<double> totals;
    for (double lam : lambdas) {
        std::vector<double> h(n_bins, 0.0);
        double tot = 0.0;
        for (const auto& c : pv.curves) {
            size_t n = c.pts.size();
            size_t edges = c.closed ? n : n - 1;
            for (size_t e = 0; e < edges; ++e) {
                Vec2 a = c.pts[e], b = c.pts[(e + 1) % n];
                double len = clipped_length(a, b, x, lam);
                if (len <= 0.0) continue;
                double theta = wrap_angle(std::atan2(b.y - a.y, b.x - a.x));
                h[angle_bin(theta, n_bins)] += c.multiplicity * len / lam;
                tot += c.multiplicity * len / lam;
            }
        }
        hists.push_back(std::move(h));
        totals.push_back(tot);
    }
    return probe_from_histograms(x, lambdas, std::move(hists), n_bins, totals);
}

std::string TangentProbeReport::csv_rows() const {
    std::string s;
    char buf[128];
    const char* v = verdict == TangentVerdict::UniqueTangent ? "unique"
                    : verdict == TangentVerdict::NonUnique   ? "nonunique"
                                                             : "inconclusive";
    for (size_t i = 0; i < scales.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s", center.x, center.y, scales[i], v);
        s += buf;
        s += '\n';
    }
    return s;
}

// ---------------------------------------------------------------------------
// marching squares

namespace {

struct Stitcher {
    // edge-crossing graph: each crossing point has at most two segment links
    std::vector<int> link1, link2;
    std::vector<Vec2> point;
    std::vector<bool> has_point;

    explicit Stitcher(size_t nkeys)
        : link1(nkeys, -1), link2(nkeys, -1), point(nkeys), has_point(nkeys, false) {}

    void add_point(int key, const Vec2& p) {
        point[key] = p;
        has_point[key] = true;
    }
    void add_segment(int a, int b) {
        auto attach = [&](int k, int other) {
            if (link1[k] == -1) link1[k] = other;
            else if (link2[k] == -1) link2[k] = other;
            // degree > 2 cannot happen for marching squares cases
        };
        attach(a, b);
        attach(b, a);
    }
};

} // namespace

PolylineVarifold extract_level_set(const ScalarField2D& u, double s) {
    const Grid2D& g = u.grid;
    const int nx = g.nx, ny = g.ny;
    // key layout: horizontal grid edges then vertical grid edges
    const int nh = (nx - 1) * ny;
    const int nv = nx * (ny - 1);
    auto hkey = [&](int i, int j) { return j * (nx - 1) + i; };
    auto vkey = [&](int i, int j) { return nh + j * nx + i; };

    Stitcher st(nh + nv);
    auto interp = [&](int i0, int j0, int i1, int j1) -> Vec2 {
        double v0 = u.at(i0, j0), v1 = u.at(i1, j1);
        double t = (s - v0) / (v1 - v0);
        t = std::clamp(t, 0.0, 1.0);
        Vec2 a = g.node(i0, j0), b = g.node(i1, j1);
        return a + (b - a) * t;
    };

    for (int j = 0; j < ny - 1; ++j) {
        for (int i = 0; i < nx - 1; ++i) {
            bool bl = u.at(i, j) > s, br = u.at(i + 1, j) > s;
            bool tr = u.at(i + 1, j + 1) > s, tl = u.at(i, j + 1) > s;
            int code = (bl ? 1 : 0) | (br ? 2 : 0) | (tr ? 4 : 0) | (tl ? 8 : 0);
            if (code == 0 || code == 15) continue;

            int bottom = hkey(i, j), top = hkey(i, j + 1);
            int left = vkey(i, j), right = vkey(i + 1, j);
            auto P = [&](int key) {
                if (st.has_point[key]) return;
                if (key == bottom) st.add_point(key, interp(i, j, i + 1, j));
                else if (key == top) st.add_point(key, interp(i, j + 1, i + 1, j + 1));
                else if (key == left) st.add_point(key, interp(i, j, i, j + 1));
                else st.add_point(key, interp(i + 1, j, i + 1, j + 1));
            };
            auto seg = [&](int a, int b) {
                P(a);
                P(b);
                st.add_segment(a, b);
            };
            switch (code) {
                case 1: case 14: seg(left, bottom); break;
                case 2: case 13: seg(bottom, right); break;
                case 3: case 12: seg(left, right); break;
                case 4: case 11: seg(right, top); break;
                case 6: case 9:  seg(bottom, top); break;
                case 7: case 8:  seg(left, top); break;
                case 5: case 10: {
                    // ambiguous saddle cell: midpoint-value rule
                    double mid = 0.25 * (u.at(i, j) + u.at(i + 1, j) + u.at(i + 1, j + 1) +
                                         u.at(i, j + 1));
                    bool mid_in = mid > s;
                    bool connect_bl_tr = (code == 5) == mid_in;
                    if (connect_bl_tr) {
                        seg(left, top);
                        seg(bottom, right);
                    } else {
                        seg(left, bottom);
                        seg(right, top);
                    }
                    break;
                }
            }
        }
    }

    // walk chains: open ones first (degree-1 endpoints), then cycles
    PolylineVarifold pv;
    int nkeys = nh + nv;
    std::vector<bool> consumed(nkeys, false);

    auto walk = [&](int start) {
        Polyline c;
        c.multiplicity = 1;
        int prev = -1, cur = start;
        while (cur != -1 && !consumed[cur]) {
            consumed[cur] = true;
            if (c.pts.empty() || (st.point[cur] - c.pts.back()).norm() > 1e-13)
                c.pts.push_back(st.point[cur]);
            int nxt = (st.link1[cur] != prev && st.link1[cur] != -1) ? st.link1[cur]
                                                                     : st.link2[cur];
            if (nxt != -1 && consumed[nxt]) {
                if (nxt == start) c.closed = true;
                break;
            }
            prev = cur;
            cur = nxt;
        }
        return c;
    };

    for (int k = 0; k < nkeys; ++k) {
        if (!st.has_point[k] || consumed[k]) continue;
        bool endpoint = (st.link1[k] == -1) != (st.link2[k] == -1);
        if (!endpoint && st.link1[k] == -1) continue; // isolated point
        if (endpoint) {
            Polyline c = walk(k);
            if (c.pts.size() >= 2) pv.curves.push_back(std::move(c));
        }
    }
    for (int k = 0; k < nkeys; ++k) {
        if (!st.has_point[k] || consumed[k] || st.link1[k] == -1) continue;
        Polyline c = walk(k);
        if (c.closed && c.pts.size() >= 3) pv.curves.push_back(std::move(c));
        else if (!c.closed && c.pts.size() >= 2) pv.curves.push_back(std::move(c));
    }
    return pv;
}

GoodLevel select_good_level(const ScalarField2D& u, double eps, double delta) {
    (void)eps;
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("select_good_level: delta must be in (0,1)");
    GoodLevel best;
    bool found = false;
    const int n_levels = 32; // half-open grid over I_delta, so s = 0 is scanned
    for (int i = 0; i < n_levels; ++i) {
        double s = -1.0 + delta + (2.0 - 2.0 * delta) * i / n_levels;
        PolylineVarifold pv = extract_level_set(u, s);
        if (pv.curves.empty()) continue;
        double proxy = 0.0;
        for (const auto& c : pv.curves) {
            size_t n = c.pts.size();
            size_t i0 = c.closed ? 0 : 1;
            size_t i1 = c.closed ? n : n - 1;
            for (size_t k = i0; k < i1; ++k) {
                VertexCurvature vc = menger_curvature(c.pts[(k + n - 1) % n], c.pts[k],
                                                      c.pts[(k + 1) % n]);
                proxy += vc.kappa * vertex_weight(c, k);
            }
        }
        if (!found || proxy < best.proxy) {
            best.level = s;
            best.proxy = proxy;
            found = true;
        }
    }
    best.empty = !found;
    return best;
}

double elastica_energy(const PolylineVarifold& pv) {
    double total = 0.0;
    for (const auto& c : pv.curves) {
        size_t n = c.pts.size();
        if (n < 8) throw std::invalid_argument("elastica_energy: curves need >= 8 vertices");
        size_t edges = c.closed ? n : n - 1;
        for (size_t e = 0; e < edges; ++e)
            if ((c.pts[(e + 1) % n] - c.pts[e]).norm() == 0.0)
                throw std::invalid_argument("elastica_energy: repeated vertices");
        for (size_t i = 0; i < n; ++i) {
            double kappa = 0.0;
            if (c.closed || (i > 0 && i < n - 1))
                kappa = menger_curvature(c.pts[(i + n - 1) % n], c.pts[i], c.pts[(i + 1) % n])
                            .kappa;
            total += c.multiplicity * (1.0 + kappa * kappa) * vertex_weight(c, i);
        }
    }
    return total;
}

Polyline circle_polyline(const Vec2& center, double r, int n) {
    Polyline c;
    c.closed = true;
    c.multiplicity = 1;
    c.pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        double t = 2.0 * kPi * i / n;
        c.pts.push_back({center.x + r * std::cos(t), center.y + r * std::sin(t)});
    }
    return c;
}

PolylineVarifold cross_polyline(double half_extent, int n_per_arm) {
    PolylineVarifold pv;
    Polyline horiz, vert;
    int n = 2 * n_per_arm + 1;
    for (int i = 0; i < n; ++i) {
        double t = -half_extent + 2.0 * half_extent * i / (n - 1);
        horiz.pts.push_back({t, 0.0});
        vert.pts.push_back({0.0, t});
    }
    pv.curves.push_back(std::move(horiz));
    pv.curves.push_back(std::move(vert));
    return pv;
}

} // namespace pf
