#include "pf/pde.hpp"

#include "pf/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

namespace pf {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;

bool is_pinned(const Grid2D& g, int i, int j, bool pin_boundary) {
    if (!pin_boundary && g.bc != BoundaryKind::DirichletOne) return false;
    return i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1;
}

// eps lap u - W'(u)/eps with ghost-resolved compact laplacian
void pde_residual(const ScalarField2D& u, double eps, std::vector<double>& out) {
    const Grid2D& g = u.grid;
    out.assign(g.count(), 0.0);
    const double bx = 1.0 / (g.hx * g.hx), by = 1.0 / (g.hy * g.hy);
    for (int j = 0; j < g.ny; ++j) {
        int jm = g.resolve_y(j - 1), jp = g.resolve_y(j + 1);
        for (int i = 0; i < g.nx; ++i) {
            int im = g.resolve_x(i - 1), ip = g.resolve_x(i + 1);
            int k = g.idx(i, j);
            double c = u.v[k];
            double lap = (u.v[g.idx(ip, j)] - 2.0 * c + u.v[g.idx(im, j)]) * bx +
                         (u.v[g.idx(i, jp)] - 2.0 * c + u.v[g.idx(i, jm)]) * by;
            out[k] = eps * lap - well_d1(c) / eps;
        }
    }
}

double weighted_l2(const Grid2D& g, const std::vector<double>& f,
                   const std::vector<uint8_t>* skip = nullptr) {
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            if (skip && (*skip)[k]) continue;
            s += f[k] * f[k] * g.quad_weight(i, j);
        }
    return std::sqrt(s);
}

// Dirichlet part on edges plus trapezoid potential: the discrete energy whose
// exact weighted gradient is the compact ghost laplacian used by the flow.
double flow_energy(const ScalarField2D& u, double eps) {
    const Grid2D& g = u.grid;
    double e = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            double d = (u.at(i + 1, j) - u.at(i, j)) / g.hx;
            e += 0.5 * eps * d * d * g.hx * g.wy(j);
        }
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double d = (u.at(i, j + 1) - u.at(i, j)) / g.hy;
            e += 0.5 * eps * d * d * g.hy * g.wx(i);
        }
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            e += well(u.at(i, j)) / eps * g.quad_weight(i, j);
    return e;
}

} // namespace

std::string SolveReport::csv() const {
    std::string s = "step,energy,residual\n";
    char buf[96];
    for (size_t i = 0; i < energy_trace.size(); ++i) {
        double res = i < residual_trace.size() ? residual_trace[i] : 0.0;
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", energy_trace[i].first,
                      energy_trace[i].second, res);
        s += buf;
    }
    return s;
}

double flow_dt_bound(const Grid2D& g, double eps) {
    double h = std::min(g.hx, g.hy);
    return 0.2 * std::min(h * h / eps, eps);
}

std::pair<ScalarField2D, SolveReport> allen_cahn_flow(const ScalarField2D& u0, double eps,
                                                      double dt, int steps,
                                                      const FlowOptions& opt) {
    const Grid2D& g = u0.grid;
    require_finite(u0, "allen_cahn_flow");
    if (!(eps > 0.0)) throw std::invalid_argument("allen_cahn_flow: eps must be > 0");
    double bound = flow_dt_bound(g, eps);
    if (dt > bound * (1.0 + 1e-12))
        throw std::invalid_argument("allen_cahn_flow: dt above stability bound " +
                                    std::to_string(bound));
    for (double x : u0.v)
        if (std::abs(x) > 1.0 + 1e-12)
            throw std::invalid_argument("allen_cahn_flow: |u0| must be <= 1");

    ScalarField2D u = u0;
    const bool pin = opt.pin_boundary || g.bc == BoundaryKind::DirichletOne;
    if (g.bc == BoundaryKind::DirichletOne)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                if (is_pinned(g, i, j, true)) u.at(i, j) = 1.0;

    SolveReport rep;
    rep.notes = "update u += dt (eps lap u - W'(u)/eps); equals (dt eps) step of the "
                "lap u - W'(u)/eps^2 flow; trace records the edge-quadrature energy";
    std::vector<double> r;
    for (int s = 0; s < steps; ++s) {
        pde_residual(u, eps, r);
        if (s % std::max(1, opt.trace_every) == 0) {
            rep.energy_trace.push_back({s, flow_energy(u, eps)});
            rep.residual_trace.push_back(weighted_l2(g, r));
        }
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (pin && is_pinned(g, i, j, true)) continue;
                u.v[g.idx(i, j)] += dt * r[g.idx(i, j)];
            }
        if (s % 64 == 0)
            for (double x : u.v)
                if (!std::isfinite(x))
                    throw std::runtime_error("allen_cahn_flow: NaN at step " +
                                             std::to_string(s));
    }
    pde_residual(u, eps, r);
    rep.energy_trace.push_back({steps, flow_energy(u, eps)});
    rep.residual_trace.push_back(weighted_l2(g, r));
    rep.iterations = steps;
    rep.final_residual = rep.residual_trace.back();
    rep.converged = true;
    return {std::move(u), std::move(rep)};
}

namespace {

// A d = (-lap + W''(u)/eps^2) d on free nodes, d treated as 0 on pinned ones.
struct JacobianOp {
    const Grid2D& g;
    const std::vector<double>& wpp; // W''(u)/eps^2 per node
    const std::vector<uint8_t>& pinned;

    void apply(const std::vector<double>& d, std::vector<double>& out) const {
        const double bx = 1.0 / (g.hx * g.hx), by = 1.0 / (g.hy * g.hy);
        auto val = [&](int i, int j) {
            int k = g.idx(i, j);
            return pinned[k] ? 0.0 : d[k];
        };
        for (int j = 0; j < g.ny; ++j) {
            int jm = g.resolve_y(j - 1), jp = g.resolve_y(j + 1);
            for (int i = 0; i < g.nx; ++i) {
                int k = g.idx(i, j);
                if (pinned[k]) {
                    out[k] = 0.0;
                    continue;
                }
                int im = g.resolve_x(i - 1), ip = g.resolve_x(i + 1);
                double c = d[k];
                double lap = (val(ip, j) - 2.0 * c + val(im, j)) * bx +
                             (val(i, jp) - 2.0 * c + val(i, jm)) * by;
                out[k] = -lap + wpp[k] * c;
            }
        }
    }
};

double dot_w(const Grid2D& g, const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            s += a[k] * b[k] * g.quad_weight(i, j);
        }
    return s;
}

// Truncated Jacobi-preconditioned CG in the quadrature inner product.
int solve_cg(const JacobianOp& A, const std::vector<double>& rhs, std::vector<double>& x,
             double rtol, int max_iters) {
    const Grid2D& g = A.g;
    int n = g.count();
    x.assign(n, 0.0);
    std::vector<double> r = rhs, z(n), p(n), q(n), diag(n);
    const double d0 = 2.0 / (g.hx * g.hx) + 2.0 / (g.hy * g.hy);
    for (int k = 0; k < n; ++k) diag[k] = std::max(1e-12, d0 + A.wpp[k]);
    for (int k = 0; k < n; ++k) r[k] = A.pinned[k] ? 0.0 : rhs[k];
    double rr0 = dot_w(g, r, r);
    if (rr0 == 0.0) return 0;
    for (int k = 0; k < n; ++k) z[k] = r[k] / diag[k];
    p = z;
    double rz = dot_w(g, r, z);
    int it = 0;
    for (; it < max_iters; ++it) {
        A.apply(p, q);
        double pq = dot_w(g, p, q);
        if (pq <= 0.0) {
            // negative curvature: keep the current iterate, or fall back to
            // the preconditioned residual when no step was taken yet
            if (it == 0) x = z;
            break;
        }
        double alpha = rz / pq;
        for (int k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        double rr = dot_w(g, r, r);
        if (rr <= rtol * rtol * rr0) {
            ++it;
            break;
        }
        for (int k = 0; k < n; ++k) z[k] = r[k] / diag[k];
        double rz_new = dot_w(g, r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (int k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    return it;
}

} // namespace

std::pair<ScalarField2D, SolveReport> allen_cahn_newton(const ScalarField2D& u0, double eps,
                                                        double tol, int max_iter,
                                                        const NewtonOptions& opt) {
    const Grid2D& g = u0.grid;
    for (double x : u0.v)
        if (!std::isfinite(x))
            throw std::invalid_argument("allen_cahn_newton: u0 contains NaN/Inf");
    if (!(tol > 0.0)) throw std::invalid_argument("allen_cahn_newton: tol must be > 0");

    ScalarField2D u = u0;
    const bool pin = opt.pin_boundary || g.bc == BoundaryKind::DirichletOne;
    std::vector<uint8_t> pinned(g.count(), 0);
    if (!opt.pin_mask.empty()) {
        if (static_cast<int>(opt.pin_mask.size()) != g.count())
            throw std::invalid_argument("allen_cahn_newton: pin_mask size mismatch");
        pinned = opt.pin_mask;
    }
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (is_pinned(g, i, j, pin)) {
                pinned[g.idx(i, j)] = 1;
                if (g.bc == BoundaryKind::DirichletOne) u.at(i, j) = 1.0;
            }

    const double ieps2 = 1.0 / (eps * eps);
    SolveReport rep;
    std::vector<double> F(g.count()), wpp(g.count()), d;
    auto eval_F = [&](const ScalarField2D& w, std::vector<double>& out) {
        pde_residual(w, eps, out); // eps lap - W'/eps = eps (lap - W'/eps^2)
        for (int k = 0; k < g.count(); ++k) out[k] = pinned[k] ? 0.0 : out[k] / eps;
    };
    eval_F(u, F);
    double fnorm = weighted_l2(g, F);
    int cg_budget = opt.max_cg_iters > 0 ? opt.max_cg_iters
                                         : 4 * std::max(g.nx, g.ny);

    int it = 0;
    for (; it < max_iter && fnorm * eps > tol; ++it) {
        for (int k = 0; k < g.count(); ++k) wpp[k] = well_d2(u.v[k]) * ieps2;
        JacobianOp J{g, wpp, pinned};
        double rtol = std::min(0.1, std::sqrt(std::max(fnorm, 1e-16)));
        solve_cg(J, F, d, rtol, cg_budget); // direction: -J dv = -F => A d = F
        // backtracking on |F|
        double alpha = 1.0;
        bool accepted = false;
        ScalarField2D trial = u;
        std::vector<double> Ft;
        for (int ls = 0; ls < 30; ++ls) {
            for (int k = 0; k < g.count(); ++k) trial.v[k] = u.v[k] + alpha * d[k];
            eval_F(trial, Ft);
            double fn = weighted_l2(g, Ft);
            if (std::isfinite(fn) && fn < fnorm) {
                u = trial;
                F = Ft;
                fnorm = fn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        rep.energy_trace.push_back({it + 1, p_energy_value(u, eps)});
        rep.residual_trace.push_back(fnorm * eps);
        if (!accepted) break;
    }
    rep.iterations = it;
    rep.final_residual = fnorm * eps; // L2 norm of eps lap u - W'(u)/eps
    rep.converged = rep.final_residual <= tol;
    if (rep.converged && rep.residual_trace.size() >= 3) {
        // quadratic-tail constant r_{k+1} <= C r_k^2 over the last steps
        double C = 0.0;
        size_t m = rep.residual_trace.size();
        for (size_t k = m - 3; k + 1 < m; ++k) {
            double rk = rep.residual_trace[k];
            if (rk > 0.0) C = std::max(C, rep.residual_trace[k + 1] / (rk * rk));
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "quadratic tail C=%.3g", C);
        rep.notes = buf;
    }
    return {std::move(u), std::move(rep)};
}

std::string saddle_cache_dir() {
    if (const char* env = std::getenv("PF_CACHE_DIR"); env && *env) return env;
    return "pf-cache";
}

namespace {

std::string saddle_key(double R, int n, double tol) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "saddle R=%.17g n=%d tol=%.17g", R, n, tol);
    return buf;
}

std::string saddle_path(const std::string& dir, double R, int n, double tol) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "saddle-R%g-n%d-tol%g.pf2d", R, n, tol);
    return dir + "/" + buf;
}

double full_box_residual(const ScalarField2D& full) {
    // residual over the box minus one cell at the outer boundary
    const Grid2D& g = full.grid;
    std::vector<double> r;
    pde_residual(full, 1.0, r);
    double s = 0.0;
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i)
            s += r[g.idx(i, j)] * r[g.idx(i, j)] * g.quad_weight(i, j);
    return std::sqrt(s);
}

} // namespace

SaddleSolution saddle_solution(double R, int n, double tol,
                               const std::optional<std::string>& cache_dir) {
    if (!(R >= 8.0)) throw std::invalid_argument("saddle_solution: R must be >= 8");
    if (n < 129) throw std::invalid_argument("saddle_solution: n must be >= 129");

    const std::string dir = cache_dir ? *cache_dir : saddle_cache_dir();
    const std::string path = saddle_path(dir, R, n, tol);
    const std::string key = saddle_key(R, n, tol);
    if (std::filesystem::exists(path)) {
        std::string comment;
        ScalarField2D full = read_field(path, &comment);
        if (comment == key) {
            SaddleSolution s;
            s.field = std::move(full);
            s.R = R;
            s.n = n;
            s.residual = full_box_residual(s.field);
            s.converged = s.residual <= 10.0 * tol + 1e-9;
            return s;
        }
    }

    // quadrant solve on [0,R]^2: zero on the axes, tanh(min(x,y)/sqrt2) far data
    Grid2D q = make_grid(n, n, Rect{0.0, R, 0.0, R}, BoundaryKind::Neumann);
    ScalarField2D u0(q);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double x = q.x(i), y = q.y(j);
            u0.at(i, j) = std::tanh(x / kSqrt2) * std::tanh(y / kSqrt2);
            if (i == 0 || j == 0) u0.at(i, j) = 0.0;
            if (i == n - 1 || j == n - 1)
                u0.at(i, j) = std::tanh(std::min(x, y) / kSqrt2);
        }
    u0.at(0, 0) = 0.0;
    u0.at(0, n - 1) = 0.0;
    u0.at(n - 1, 0) = 0.0;

    NewtonOptions nopt;
    nopt.pin_boundary = true;
    nopt.max_cg_iters = 12 * n;
    auto [uq, rep] = allen_cahn_newton(u0, 1.0, tol, 60, nopt);

    // odd reflection to [-R,R]^2
    int m = 2 * n - 1;
    Grid2D fg = make_grid(m, m, Rect{-R, R, -R, R}, BoundaryKind::Neumann);
    ScalarField2D full(fg);
    for (int J = 0; J < m; ++J)
        for (int I = 0; I < m; ++I) {
            int di = I - (n - 1), dj = J - (n - 1);
            double sx = di > 0 ? 1.0 : (di < 0 ? -1.0 : 0.0);
            double sy = dj > 0 ? 1.0 : (dj < 0 ? -1.0 : 0.0);
            double val = uq.at(std::abs(di), std::abs(dj));
            full.at(I, J) = (sx == 0.0 || sy == 0.0) ? 0.0 : sx * sy * val;
        }

    SaddleSolution s;
    s.field = std::move(full);
    s.R = R;
    s.n = n;
    s.residual = full_box_residual(s.field);
    s.converged = rep.converged;

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!ec) {
        // create-then-rename for atomicity
        std::string tmp = path + ".tmp";
        try {
            write_field(s.field, tmp, key);
            std::filesystem::rename(tmp, path, ec);
        } catch (const FieldIoError&) {
        }
    }
    return s;
}

Grid2D make_blowdown_grid(const SaddleSolution& s, double eps, int cells_per_eps,
                          double half_extent) {
    double hs = s.R / (s.n - 1);
    int k = std::max(1, static_cast<int>(std::lround(1.0 / (cells_per_eps * hs))));
    double ht = eps * hs * k;
    int m = std::max(4, static_cast<int>(std::lround(half_extent / ht)));
    return make_grid(2 * m + 1, 2 * m + 1, Rect{-m * ht, m * ht, -m * ht, m * ht},
                     BoundaryKind::Neumann);
}

BlowDown blow_down(const SaddleSolution& s, double eps, const Grid2D& grid) {
    if (!(eps > 0.0)) throw std::invalid_argument("blow_down: eps must be > 0");
    double ext = 0.0;
    ext = std::max(ext, std::max(std::abs(grid.ox), std::abs(grid.x(grid.nx - 1))));
    ext = std::max(ext, std::max(std::abs(grid.oy), std::abs(grid.y(grid.ny - 1))));
    if (eps * s.R < 0.5 * ext) {
        char hint[128];
        std::snprintf(hint, sizeof hint,
                      "blow_down: eps too small for the stored box; need R >= %g "
                      "(full coverage %g)",
                      0.5 * ext / eps, ext / eps);
        throw std::invalid_argument(hint);
    }

    const Grid2D& sg = s.field.grid;
    const double hs = sg.hx;
    BlowDown out;
    out.field = ScalarField2D(grid);

    // exact lattice sampling when the scaled nodes land on saddle nodes
    auto aligned = [&](double v) {
        double t = (v - sg.ox) / hs;
        return std::abs(t - std::lround(t)) < 1e-9;
    };
    out.exact_sampling = aligned(grid.ox / eps) && aligned(grid.oy / eps) &&
                         std::abs(grid.hx / (eps * hs) -
                                  std::lround(grid.hx / (eps * hs))) < 1e-9 &&
                         std::abs(grid.hy / (eps * hs) -
                                  std::lround(grid.hy / (eps * hs))) < 1e-9;

    auto far_field = [&](double yx, double yy) {
        double s1 = yx > 0.0 ? 1.0 : (yx < 0.0 ? -1.0 : 0.0);
        double s2 = yy > 0.0 ? 1.0 : (yy < 0.0 ? -1.0 : 0.0);
        return s1 * s2 * std::tanh(std::min(std::abs(yx), std::abs(yy)) / kSqrt2);
    };

    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            double yx = grid.x(i) / eps, yy = grid.y(j) / eps;
            double val;
            if (std::abs(yx) <= s.R && std::abs(yy) <= s.R) {
                double ti = (yx - sg.ox) / hs, tj = (yy - sg.oy) / hs;
                if (out.exact_sampling) {
                    val = s.field.at(static_cast<int>(std::lround(ti)),
                                     static_cast<int>(std::lround(tj)));
                } else {
                    int i0 = std::clamp(static_cast<int>(std::floor(ti)), 0, sg.nx - 2);
                    int j0 = std::clamp(static_cast<int>(std::floor(tj)), 0, sg.ny - 2);
                    double fx = std::clamp(ti - i0, 0.0, 1.0);
                    double fy = std::clamp(tj - j0, 0.0, 1.0);
                    val = (1 - fx) * (1 - fy) * s.field.at(i0, j0) +
                          fx * (1 - fy) * s.field.at(i0 + 1, j0) +
                          (1 - fx) * fy * s.field.at(i0, j0 + 1) +
                          fx * fy * s.field.at(i0 + 1, j0 + 1);
                }
            } else {
                val = far_field(yx, yy);
            }
            out.field.at(i, j) = val;
        }
    return out;
}

std::pair<ScalarField2D, SolveReport> e_eps_descent(const ScalarField2D& u0, double eps,
                                                    double dt, int steps,
                                                    const DescentOptions& opt) {
    const Grid2D& g = u0.grid;
    require_finite(u0, "e_eps_descent");
    if (dt > flow_dt_bound(g, eps) * (1.0 + 1e-12))
        throw std::invalid_argument("e_eps_descent: dt above stability bound");

    auto full_energy = [&](const ScalarField2D& w) {
        LevelSetGeometry geo = normal_field(w, opt.tau);
        return p_energy_value(w, eps) + b_energy_value(w, eps, geo);
    };

    ScalarField2D u = u0;
    SolveReport rep;
    double E = full_energy(u);
    ScalarField2D trial = u;
    for (int s = 0; s < steps; ++s) {
        if (s % std::max(1, opt.trace_every) == 0) rep.energy_trace.push_back({s, E});
        LevelSetGeometry geo = normal_field(u, opt.tau);
        ScalarField2D grad = e_energy_gradient_frozen(u, eps, geo);
        double g2 = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                int k = g.idx(i, j);
                grad.v[k] /= g.quad_weight(i, j); // metric gradient
                g2 += grad.v[k] * grad.v[k] * g.quad_weight(i, j);
            }
        double alpha = dt;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h) {
            for (int k = 0; k < g.count(); ++k) trial.v[k] = u.v[k] - alpha * grad.v[k];
            double Et = full_energy(trial);
            if (std::isfinite(Et) && Et <= E - 1e-4 * alpha * g2) {
                u = trial;
                E = Et;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        rep.iterations = s + 1;
        if (!accepted) {
            rep.notes = "line search failed after " + std::to_string(opt.max_halvings) +
                        " halvings";
            rep.converged = false;
            std::vector<double> r;
            pde_residual(u, eps, r);
            rep.final_residual = weighted_l2(g, r);
            rep.energy_trace.push_back({s, E});
            return {std::move(u), std::move(rep)};
        }
    }
    rep.energy_trace.push_back({steps, E});
    std::vector<double> r;
    pde_residual(u, eps, r);
    rep.final_residual = weighted_l2(g, r);
    rep.converged = true;
    return {std::move(u), std::move(rep)};
}

} // namespace pf
