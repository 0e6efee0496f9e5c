// Uniform node-centered 2D grids and second-order finite-difference operators.
//
// The operators use central differences inside, wrap-around for Periodic
// (period n-1: the last node duplicates the first), and one-sided
// second-order stencils at non-periodic boundaries. The reflection ghost
// resolution below is for the solvers, whose compact laplacian needs it for
// natural boundary conditions and the maximum principle. Quadrature is
// trapezoidal, which for Periodic is the exact one-period rectangle rule.
#pragma once
#include "pf/linalg.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace pf {

enum class BoundaryKind { Neumann, Periodic, DirichletOne };

std::string to_string(BoundaryKind bc);
BoundaryKind boundary_from_string(const std::string& s);

struct Rect {
    double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

struct Grid2D {
    int nx = 0, ny = 0;
    double hx = 0.0, hy = 0.0;
    double ox = 0.0, oy = 0.0;
    BoundaryKind bc = BoundaryKind::Neumann;

    int count() const { return nx * ny; }
    int idx(int i, int j) const { return j * nx + i; }
    double x(int i) const { return ox + i * hx; }
    double y(int j) const { return oy + j * hy; }
    Vec2 node(int i, int j) const { return {x(i), y(j)}; }

    // Ghost-index resolution (reflection / wrap) for the solver stencils.
    int resolve_x(int i) const { return resolve(i, nx); }
    int resolve_y(int j) const { return resolve(j, ny); }

    // Trapezoid weight along one axis.
    double wx(int i) const { return (i == 0 || i == nx - 1) ? 0.5 * hx : hx; }
    double wy(int j) const { return (j == 0 || j == ny - 1) ? 0.5 * hy : hy; }
    double quad_weight(int i, int j) const { return wx(i) * wy(j); }

    bool same_layout(const Grid2D& o) const {
        return nx == o.nx && ny == o.ny && hx == o.hx && hy == o.hy && ox == o.ox &&
               oy == o.oy && bc == o.bc;
    }

  private:
    int resolve(int k, int n) const {
        if (k >= 0 && k < n) return k;
        if (bc == BoundaryKind::Periodic) {
            int p = n - 1; // seam node duplicated
            int m = k % p;
            if (m < 0) m += p;
            return m;
        }
        if (k < 0) return -k;           // reflection about node 0
        return 2 * (n - 1) - k;         // reflection about node n-1
    }
};

Grid2D make_grid(int nx, int ny, const Rect& extent, BoundaryKind bc);

struct ScalarField2D {
    Grid2D grid;
    std::vector<double> v;

    ScalarField2D() = default;
    explicit ScalarField2D(const Grid2D& g) : grid(g), v(g.count(), 0.0) {}
    double& at(int i, int j) { return v[grid.idx(i, j)]; }
    double at(int i, int j) const { return v[grid.idx(i, j)]; }
};

struct VectorField2D {
    Grid2D grid;
    std::vector<double> x, y;
    VectorField2D() = default;
    explicit VectorField2D(const Grid2D& g) : grid(g), x(g.count(), 0.0), y(g.count(), 0.0) {}
    Vec2 at(int k) const { return {x[k], y[k]}; }
};

struct MatrixField2D {
    Grid2D grid;
    std::vector<double> xx, xy, yy; // symmetric by construction
    MatrixField2D() = default;
    explicit MatrixField2D(const Grid2D& g)
        : grid(g), xx(g.count(), 0.0), xy(g.count(), 0.0), yy(g.count(), 0.0) {}
    Mat2 at(int k) const { return {xx[k], xy[k], xy[k], yy[k]}; }
};

// Sample an analytic function at the nodes.
template <class F>
ScalarField2D sample_field(const Grid2D& g, F&& f) {
    ScalarField2D u(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) u.at(i, j) = f(g.x(i), g.y(j));
    return u;
}

void require_finite(const ScalarField2D& u, const char* what);

VectorField2D gradient(const ScalarField2D& u);
MatrixField2D hessian(const ScalarField2D& u);
// Trace of the Hessian, same stencils and ghost handling.
ScalarField2D laplacian(const ScalarField2D& u);

// Adjoints of the stencil operators, used to assemble exact gradients of the
// discrete energies. gradient_adjoint pairs with the plain dot product
// sum(fx*gx + fy*gy); hessian_adjoint pairs with the symmetric Frobenius
// product sum(mxx*hxx + 2*mxy*hxy + myy*hyy).
ScalarField2D gradient_adjoint(const VectorField2D& g);
ScalarField2D hessian_adjoint(const MatrixField2D& m);

double integrate(const ScalarField2D& u); // trapezoid

} // namespace pf
