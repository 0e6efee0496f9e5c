#include "pf/grid.hpp"

#include <cmath>

namespace pf {

std::string to_string(BoundaryKind bc) {
    switch (bc) {
        case BoundaryKind::Neumann: return "neumann";
        case BoundaryKind::Periodic: return "periodic";
        case BoundaryKind::DirichletOne: return "dirichlet1";
    }
    return "neumann";
}

BoundaryKind boundary_from_string(const std::string& s) {
    if (s == "neumann") return BoundaryKind::Neumann;
    if (s == "periodic") return BoundaryKind::Periodic;
    if (s == "dirichlet1") return BoundaryKind::DirichletOne;
    throw std::invalid_argument("unknown boundary kind '" + s + "'");
}

Grid2D make_grid(int nx, int ny, const Rect& extent, BoundaryKind bc) {
    if (nx < 8 || ny < 8)
        throw std::invalid_argument("make_grid: nx, ny must be >= 8");
    if (!(extent.width() > 0.0) || !(extent.height() > 0.0))
        throw std::invalid_argument("make_grid: extent must have positive side lengths");
    Grid2D g;
    g.nx = nx;
    g.ny = ny;
    g.hx = extent.width() / (nx - 1);
    g.hy = extent.height() / (ny - 1);
    g.ox = extent.x0;
    g.oy = extent.y0;
    g.bc = bc;
    return g;
}

void require_finite(const ScalarField2D& u, const char* what) {
    for (double x : u.v)
        if (!std::isfinite(x))
            throw std::invalid_argument(std::string(what) + ": field contains non-finite values");
}

namespace {

// 1D stencil machinery: central differences inside, wrap-around for Periodic,
// one-sided second-order formulas at non-periodic ends. Each row stencil is
// reported as (index, coefficient) pairs so the adjoints are exact scatters
// of the same coefficients.
struct RowTaps {
    int idx[4];
    double c[4];
    int n = 0;
};

// first derivative, spacing h, n nodes, position i
RowTaps d1_taps(int i, int n, double h, bool wrap) {
    RowTaps t;
    double a = 1.0 / (2.0 * h);
    if (wrap) {
        int p = n - 1;
        int im = (i - 1 + p) % p, ip = (i + 1) % p;
        t = {{im, ip}, {-a, a}, 2};
        return t;
    }
    if (i == 0) {
        t = {{0, 1, 2}, {-3.0 * a, 4.0 * a, -a}, 3};
    } else if (i == n - 1) {
        t = {{n - 1, n - 2, n - 3}, {3.0 * a, -4.0 * a, a}, 3};
    } else {
        t = {{i - 1, i + 1}, {-a, a}, 2};
    }
    return t;
}

// second derivative
RowTaps d2_taps(int i, int n, double h, bool wrap) {
    RowTaps t;
    double b = 1.0 / (h * h);
    if (wrap) {
        int p = n - 1;
        int im = (i - 1 + p) % p, ip = (i + 1) % p;
        t = {{im, i % p, ip}, {b, -2.0 * b, b}, 3};
        return t;
    }
    if (i == 0) {
        t = {{0, 1, 2, 3}, {2.0 * b, -5.0 * b, 4.0 * b, -b}, 4};
    } else if (i == n - 1) {
        t = {{n - 1, n - 2, n - 3, n - 4}, {2.0 * b, -5.0 * b, 4.0 * b, -b}, 4};
    } else {
        t = {{i - 1, i, i + 1}, {b, -2.0 * b, b}, 3};
    }
    return t;
}

enum class Axis { X, Y };
enum class Order { First, Second };

void apply_axis(const Grid2D& g, const std::vector<double>& in, std::vector<double>& out,
                Axis axis, Order order) {
    bool wrap = g.bc == BoundaryKind::Periodic;
    if (axis == Axis::X) {
        for (int i = 0; i < g.nx; ++i) {
            RowTaps t = order == Order::First ? d1_taps(i, g.nx, g.hx, wrap)
                                              : d2_taps(i, g.nx, g.hx, wrap);
            for (int j = 0; j < g.ny; ++j) {
                double s = 0.0;
                for (int m = 0; m < t.n; ++m) s += t.c[m] * in[g.idx(t.idx[m], j)];
                out[g.idx(i, j)] = s;
            }
        }
    } else {
        for (int j = 0; j < g.ny; ++j) {
            RowTaps t = order == Order::First ? d1_taps(j, g.ny, g.hy, wrap)
                                              : d2_taps(j, g.ny, g.hy, wrap);
            for (int i = 0; i < g.nx; ++i) {
                double s = 0.0;
                for (int m = 0; m < t.n; ++m) s += t.c[m] * in[g.idx(i, t.idx[m])];
                out[g.idx(i, j)] = s;
            }
        }
    }
}

void apply_axis_adjoint(const Grid2D& g, const std::vector<double>& in,
                        std::vector<double>& out, Axis axis, Order order) {
    bool wrap = g.bc == BoundaryKind::Periodic;
    if (axis == Axis::X) {
        for (int i = 0; i < g.nx; ++i) {
            RowTaps t = order == Order::First ? d1_taps(i, g.nx, g.hx, wrap)
                                              : d2_taps(i, g.nx, g.hx, wrap);
            for (int j = 0; j < g.ny; ++j)
                for (int m = 0; m < t.n; ++m)
                    out[g.idx(t.idx[m], j)] += t.c[m] * in[g.idx(i, j)];
        }
    } else {
        for (int j = 0; j < g.ny; ++j) {
            RowTaps t = order == Order::First ? d1_taps(j, g.ny, g.hy, wrap)
                                              : d2_taps(j, g.ny, g.hy, wrap);
            for (int i = 0; i < g.nx; ++i)
                for (int m = 0; m < t.n; ++m)
                    out[g.idx(i, t.idx[m])] += t.c[m] * in[g.idx(i, j)];
        }
    }
}

} // namespace

VectorField2D gradient(const ScalarField2D& u) {
    VectorField2D out(u.grid);
    apply_axis(u.grid, u.v, out.x, Axis::X, Order::First);
    apply_axis(u.grid, u.v, out.y, Axis::Y, Order::First);
    return out;
}

MatrixField2D hessian(const ScalarField2D& u) {
    const Grid2D& g = u.grid;
    MatrixField2D out(g);
    apply_axis(g, u.v, out.xx, Axis::X, Order::Second);
    apply_axis(g, u.v, out.yy, Axis::Y, Order::Second);
    std::vector<double> gx(g.count());
    apply_axis(g, u.v, gx, Axis::X, Order::First);
    apply_axis(g, gx, out.xy, Axis::Y, Order::First);
    return out;
}

ScalarField2D laplacian(const ScalarField2D& u) {
    const Grid2D& g = u.grid;
    ScalarField2D out(g);
    std::vector<double> tmp(g.count());
    apply_axis(g, u.v, out.v, Axis::X, Order::Second);
    apply_axis(g, u.v, tmp, Axis::Y, Order::Second);
    for (int k = 0; k < g.count(); ++k) out.v[k] += tmp[k];
    return out;
}

ScalarField2D gradient_adjoint(const VectorField2D& f) {
    const Grid2D& g = f.grid;
    ScalarField2D out(g);
    apply_axis_adjoint(g, f.x, out.v, Axis::X, Order::First);
    apply_axis_adjoint(g, f.y, out.v, Axis::Y, Order::First);
    return out;
}

ScalarField2D hessian_adjoint(const MatrixField2D& m) {
    const Grid2D& g = m.grid;
    ScalarField2D out(g);
    apply_axis_adjoint(g, m.xx, out.v, Axis::X, Order::Second);
    apply_axis_adjoint(g, m.yy, out.v, Axis::Y, Order::Second);
    // xy enters the Frobenius pairing twice; hxy = Dy(Dx u)
    std::vector<double> sym(g.count()), tmp(g.count(), 0.0);
    for (int k = 0; k < g.count(); ++k) sym[k] = 2.0 * m.xy[k];
    apply_axis_adjoint(g, sym, tmp, Axis::Y, Order::First);
    apply_axis_adjoint(g, tmp, out.v, Axis::X, Order::First);
    return out;
}

double integrate(const ScalarField2D& u) {
    const Grid2D& g = u.grid;
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) s += u.v[g.idx(i, j)] * g.quad_weight(i, j);
    return s;
}

} // namespace pf
