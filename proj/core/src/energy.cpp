#include "pf/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pf {

std::string EnergyReport::csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d", eps, p_energy, w_energy,
                  b_energy, xi_l1, resolved ? 1 : 0);
    return buf;
}

LevelSetGeometry normal_field(const ScalarField2D& u, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("normal_field: tau must be > 0");
    require_finite(u, "normal_field");
    const Grid2D& g = u.grid;
    LevelSetGeometry out;
    out.grid = g;
    out.normal = VectorField2D(g);
    out.projection = MatrixField2D(g);
    out.valid.assign(g.count(), 0);
    out.stencil_valid.assign(g.count(), 0);
    out.grad_norm.assign(g.count(), 0.0);

    VectorField2D grad = gradient(u);
    double gmax = 0.0;
    for (int k = 0; k < g.count(); ++k) {
        out.grad_norm[k] = std::hypot(grad.x[k], grad.y[k]);
        gmax = std::max(gmax, out.grad_norm[k]);
    }
    const double thr = tau * gmax;
    for (int k = 0; k < g.count(); ++k) {
        double n = out.grad_norm[k];
        if (n > thr && n > 0.0) {
            out.valid[k] = 1;
            out.normal.x[k] = grad.x[k] / n;
            out.normal.y[k] = grad.y[k] / n;
        } else {
            out.normal.x[k] = 1.0; // degenerate convention: e1
            out.normal.y[k] = 0.0;
        }
        out.projection.xx[k] = 1.0 - out.normal.x[k] * out.normal.x[k];
        out.projection.xy[k] = -out.normal.x[k] * out.normal.y[k];
        out.projection.yy[k] = 1.0 - out.normal.y[k] * out.normal.y[k];
    }
    // erode the mask by one stencil halo; near a non-periodic boundary the
    // normals come from one-sided stencils and the tensor stencils compound
    // that, so tensor nodes keep distance 2 from the boundary
    const bool wrap = g.bc == BoundaryKind::Periodic;
    for (int j = 0; j < g.ny; ++j) {
        int jm = g.resolve_y(j - 1), jp = g.resolve_y(j + 1);
        for (int i = 0; i < g.nx; ++i) {
            int im = g.resolve_x(i - 1), ip = g.resolve_x(i + 1);
            int k = g.idx(i, j);
            bool interior = wrap || (i > 1 && j > 1 && i < g.nx - 2 && j < g.ny - 2);
            out.stencil_valid[k] = interior && out.valid[k] && out.valid[g.idx(im, j)] &&
                                   out.valid[g.idx(ip, j)] && out.valid[g.idx(i, jm)] &&
                                   out.valid[g.idx(i, jp)] && out.valid[g.idx(im, jm)] &&
                                   out.valid[g.idx(ip, jm)] && out.valid[g.idx(im, jp)] &&
                                   out.valid[g.idx(ip, jp)];
        }
    }
    return out;
}

LevelSetGeometry level_set_tensors(const ScalarField2D& u, double tau) {
    LevelSetGeometry geo = normal_field(u, tau);
    const Grid2D& g = u.grid;
    geo.has_tensors = true;
    geo.second_fundamental.assign(g.count(), Tens3{});
    geo.a_tensor.assign(g.count(), Tens3{});

    MatrixField2D hess = hessian(u);

    // nu-product fields for the stencil derivatives of A
    ScalarField2D nxx(g), nxy(g), nyy(g);
    for (int k = 0; k < g.count(); ++k) {
        nxx.v[k] = geo.normal.x[k] * geo.normal.x[k];
        nxy.v[k] = geo.normal.x[k] * geo.normal.y[k];
        nyy.v[k] = geo.normal.y[k] * geo.normal.y[k];
    }
    VectorField2D dxx = gradient(nxx), dxy = gradient(nxy), dyy = gradient(nyy);

    for (int k = 0; k < g.count(); ++k) {
        if (!geo.valid[k]) continue;
        Mat2 P = geo.projection.at(k);
        Mat2 H = hess.at(k);
        Mat2 m = P.transposed().mul(H).mul(P) * (1.0 / geo.grad_norm[k]);
        Vec2 nu{geo.normal.x[k], geo.normal.y[k]};
        // oriented so that the trace identities of the A tensor hold
        geo.second_fundamental[k] = Tens3::outer(m, nu * -1.0);

        // A_ijk = -P_il d_l(nu_j nu_k)
        double d[2][2][2]; // d[l][j][k] = d_l (nu_j nu_k)
        d[0][0][0] = dxx.x[k];
        d[1][0][0] = dxx.y[k];
        d[0][0][1] = d[0][1][0] = dxy.x[k];
        d[1][0][1] = d[1][1][0] = dxy.y[k];
        d[0][1][1] = dyy.x[k];
        d[1][1][1] = dyy.y[k];
        Tens3 A;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int kk = 0; kk < 2; ++kk) {
                    double s = 0.0;
                    for (int l = 0; l < 2; ++l) s += P(i, l) * d[l][j][kk];
                    A.at(i, j, kk) = -s;
                }
        geo.a_tensor[k] = A;
    }
    return geo;
}

EnergyReport evaluate_energies(const ScalarField2D& u, double eps, double tau) {
    if (!(eps > 0.0)) throw std::invalid_argument("evaluate_energies: eps must be > 0");
    require_finite(u, "evaluate_energies");
    const Grid2D& g = u.grid;

    EnergyReport r;
    r.eps = eps;
    r.resolved = eps >= 2.0 * std::max(g.hx, g.hy);
    r.mu_density.assign(g.count(), 0.0);
    r.w_density.assign(g.count(), 0.0);
    r.b_density.assign(g.count(), 0.0);
    r.xi_density.assign(g.count(), 0.0);

    VectorField2D grad = gradient(u);
    MatrixField2D hess = hessian(u);
    LevelSetGeometry geo = normal_field(u, tau);

    double p = 0.0, w = 0.0, b = 0.0, xi1 = 0.0;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            double wq = g.quad_weight(i, j);
            double g2 = grad.x[k] * grad.x[k] + grad.y[k] * grad.y[k];
            double kin = 0.5 * eps * g2;
            double pot = well(u.v[k]) / eps;
            double mu = kin + pot;
            double xi = kin - pot;
            double wp = well_d1(u.v[k]) / eps;
            double lap = hess.xx[k] + hess.yy[k];
            double wres = eps * lap - wp;

            Vec2 nu{geo.normal.x[k], geo.normal.y[k]};
            Mat2 M = hess.at(k) * eps - Mat2::outer(nu, nu) * wp;
            double b2 = M.frob2();

            r.mu_density[k] = mu;
            r.xi_density[k] = xi;
            r.w_density[k] = wres * wres / eps;
            r.b_density[k] = b2 / eps;

            p += mu * wq;
            w += r.w_density[k] * wq;
            b += r.b_density[k] * wq;
            xi1 += std::abs(xi) * wq;
        }
    }
    r.p_energy = p;
    r.w_energy = w;
    r.b_energy = b;
    r.xi_l1 = xi1;
    return r;
}

AbResidual check_ab_residual(const LevelSetGeometry& geo) {
    AbResidual out;
    if (!geo.has_tensors)
        throw std::invalid_argument("check_ab_residual: tensors not computed");
    bool any = false;
    const Grid2D& g = geo.grid;
    for (int k = 0; k < g.count(); ++k) {
        if (!geo.stencil_valid[k]) continue;
        any = true;
        const Tens3& A = geo.a_tensor[k];
        const Tens3& B = geo.second_fundamental[k];
        Mat2 P = geo.projection.at(k);
        double res = 0.0;
        // B^k_ij = P_jl A_ikl
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int kk = 0; kk < 2; ++kk) {
                    double s = 0.0;
                    for (int l = 0; l < 2; ++l) s += P(j, l) * A(i, kk, l);
                    res = std::max(res, std::abs(B(i, j, kk) - s));
                }
        // A_ijk = B^k_ij + B^j_ik
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int kk = 0; kk < 2; ++kk)
                    res = std::max(res, std::abs(A(i, j, kk) - (B(i, j, kk) + B(i, kk, j))));
        // H_i = A_jij = B^j_ji + B^i_jj
        for (int i = 0; i < 2; ++i) {
            double ha = 0.0, hb = 0.0;
            for (int j = 0; j < 2; ++j) {
                ha += A(j, i, j);
                hb += B(j, i, j) + B(j, j, i);
            }
            res = std::max(res, std::abs(ha - hb));
        }
        out.max_residual = std::max(out.max_residual, res);
    }
    out.empty_mask = !any;
    return out;
}

DefectInequalityReport defect_inequality_report(const ScalarField2D& u, double eps, double tau) {
    const Grid2D& g = u.grid;
    MatrixField2D hess = hessian(u);
    LevelSetGeometry geo = level_set_tensors(u, tau);

    DefectInequalityReport rep;
    for (int k = 0; k < g.count(); ++k) {
        double wp = well_d1(u.v[k]) / eps;
        Vec2 nu{geo.normal.x[k], geo.normal.y[k]};
        Mat2 M = hess.at(k) * eps - Mat2::outer(nu, nu) * wp;
        double m2 = M.frob2();
        rep.scale = std::max(rep.scale, m2);
        double tr = M.trace();
        rep.trace_gap_max = std::max(rep.trace_gap_max, tr * tr - 2.0 * m2);
        if (geo.valid[k]) {
            double bnorm = geo.second_fundamental[k].frob();
            rep.bending_gap_max =
                std::max(rep.bending_gap_max, bnorm * eps * geo.grad_norm[k] - std::sqrt(m2));
        }
    }
    return rep;
}

double p_energy_value(const ScalarField2D& u, double eps) {
    const Grid2D& g = u.grid;
    VectorField2D grad = gradient(u);
    double p = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            double g2 = grad.x[k] * grad.x[k] + grad.y[k] * grad.y[k];
            p += (0.5 * eps * g2 + well(u.v[k]) / eps) * g.quad_weight(i, j);
        }
    return p;
}

ScalarField2D p_energy_gradient(const ScalarField2D& u, double eps) {
    const Grid2D& g = u.grid;
    VectorField2D grad = gradient(u);
    VectorField2D wg(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            double wq = g.quad_weight(i, j);
            wg.x[k] = eps * wq * grad.x[k];
            wg.y[k] = eps * wq * grad.y[k];
        }
    ScalarField2D out = gradient_adjoint(wg);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            out.v[k] += g.quad_weight(i, j) * well_d1(u.v[k]) / eps;
        }
    return out;
}

double b_energy_value(const ScalarField2D& u, double eps, const LevelSetGeometry& geo) {
    const Grid2D& g = u.grid;
    MatrixField2D hess = hessian(u);
    double b = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            double wp = well_d1(u.v[k]) / eps;
            Vec2 nu{geo.normal.x[k], geo.normal.y[k]};
            Mat2 M = hess.at(k) * eps - Mat2::outer(nu, nu) * wp;
            b += M.frob2() / eps * g.quad_weight(i, j);
        }
    return b;
}

ScalarField2D e_energy_gradient_frozen(const ScalarField2D& u, double eps,
                                       const LevelSetGeometry& geo) {
    const Grid2D& g = u.grid;
    ScalarField2D out = p_energy_gradient(u, eps);

    MatrixField2D hess = hessian(u);
    MatrixField2D resid(g); // (2 w/eps) * (eps H - (W'/eps) nu x nu), symmetric storage
    std::vector<double> nn_term(g.count(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            double wq = g.quad_weight(i, j);
            double wp = well_d1(u.v[k]) / eps;
            Vec2 nu{geo.normal.x[k], geo.normal.y[k]};
            Mat2 N = Mat2::outer(nu, nu);
            Mat2 M = hess.at(k) * eps - N * wp;
            double c = 2.0 * wq / eps;
            resid.xx[k] = c * M.xx;
            resid.xy[k] = c * M.xy;
            resid.yy[k] = c * M.yy;
            // d/du_k of -(W'(u_k)/eps) nu x nu paired with M
            double mn = M.xx * N.xx + 2.0 * M.xy * N.xy + M.yy * N.yy;
            nn_term[k] = -c * (well_d2(u.v[k]) / eps) * mn;
        }
    ScalarField2D hadj = hessian_adjoint(resid);
    for (int k = 0; k < g.count(); ++k) out.v[k] += eps * hadj.v[k] + nn_term[k];
    return out;
}

} // namespace pf
