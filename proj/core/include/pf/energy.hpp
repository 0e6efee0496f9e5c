// Pointwise and integrated phase-field energies on a grid:
//   P(u)  = sum  (eps/2 |grad u|^2 + W(u)/eps) w
//   Wd(u) = (1/eps) sum (eps lap u - W'(u)/eps)^2 w
//   Bd(u) = (1/eps) sum |eps hess u - (W'(u)/eps) nu x nu|^2 w
// together with the discrepancy field xi = eps/2|grad u|^2 - W(u)/eps,
// the unit normal nu of the level-set ensemble, the projection P = Id - nu x nu,
// and the level-set tensors with their algebraic identities.
#pragma once
#include "pf/grid.hpp"
#include "pf/potential.hpp"

#include <cstdint>
#include <string>

namespace pf {

struct EnergyReport {
    double eps = 0.0;
    double p_energy = 0.0, w_energy = 0.0, b_energy = 0.0, xi_l1 = 0.0;
    bool resolved = true; // eps >= 2 max(hx, hy)
    // per-node densities; mu_tilde density = mu_density + xi_density identically
    std::vector<double> mu_density, w_density, b_density, xi_density;

    std::string csv_row() const;
};

struct LevelSetGeometry {
    Grid2D grid;
    VectorField2D normal;      // nu, = e1 on degenerate nodes
    MatrixField2D projection;  // Id - nu x nu
    std::vector<uint8_t> valid;        // |grad u| > tau * max|grad u|
    std::vector<uint8_t> stencil_valid; // valid and all 8 stencil neighbors valid
    bool has_tensors = false;
    std::vector<Tens3> second_fundamental; // oriented so trace gives the
    std::vector<Tens3> a_tensor;           // inward curvature vector of a circle
    std::vector<double> grad_norm;
};

// nu = grad u/|grad u| where |grad u| > tau*max|grad u|, else e1 + invalid.
LevelSetGeometry normal_field(const ScalarField2D& u, double tau = 1e-8);

// Adds the level-set second fundamental form and the A tensor (A computed by
// applying the gradient stencils to the nu-product fields).
LevelSetGeometry level_set_tensors(const ScalarField2D& u, double tau = 1e-8);

EnergyReport evaluate_energies(const ScalarField2D& u, double eps, double tau = 1e-8);

struct AbResidual {
    double max_residual = 0.0;
    bool empty_mask = false;
};
// Max over stencil-valid nodes of the three tensor-identity residuals
// (B from A via the tangent projection, A as the symmetrized B, trace = H).
AbResidual check_ab_residual(const LevelSetGeometry& g);

struct DefectInequalityReport {
    double trace_gap_max = 0.0; // max (eps lap - W'/eps)^2 - 2|M|^2  (<= 0 up to fp)
    double bending_gap_max = 0.0; // max |B_u| eps|grad u| - |M|        (<= 0 up to fp)
    double scale = 0.0;         // max |M|^2 over nodes, for relative tolerances
};
DefectInequalityReport defect_inequality_report(const ScalarField2D& u, double eps,
                                                double tau = 1e-8);

// Exact discrete gradient of the implemented P(u) (trapezoid quadrature,
// central stencils) with respect to the nodal values.
ScalarField2D p_energy_gradient(const ScalarField2D& u, double eps);

// Exact discrete gradient of P(u)+B(u) with the normal field frozen at `geom`.
ScalarField2D e_energy_gradient_frozen(const ScalarField2D& u, double eps,
                                       const LevelSetGeometry& geom);

double p_energy_value(const ScalarField2D& u, double eps);
double b_energy_value(const ScalarField2D& u, double eps, const LevelSetGeometry& geom);

} // namespace pf
