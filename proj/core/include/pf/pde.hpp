// Solvers for critical points and flows of the eps-energies:
//  - explicit L2 gradient flow of P (Allen-Cahn flow),
//  - damped Newton for eps lap u = W'(u)/eps,
//  - the saddle solution of lap U = W'(U) on a large box (zero on the axes,
//    odd under both reflections),
//  - blow-down sampling u(x) = U(x/eps),
//  - Armijo gradient descent on P + B with a lagged normal field.
#pragma once
#include "pf/energy.hpp"
#include "pf/grid.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pf {

struct SolveReport {
    int iterations = 0;
    double final_residual = 0.0; // L2 norm of eps lap u - W'(u)/eps
    bool converged = false;
    std::vector<std::pair<int, double>> energy_trace; // (step, energy)
    std::vector<double> residual_trace;               // same cadence as the trace
    std::string notes;
    std::string csv() const; // step,energy,residual rows
};

struct FlowOptions {
    int trace_every = 10;
    bool pin_boundary = false; // keep boundary values fixed (DirichletOne pins itself)
};

// Explicit Euler steps u <- u + dt (eps lap u - W'(u)/eps); identical to the
// eps-independent form u <- u + (dt eps)(lap u - W'(u)/eps^2). Stability
// requires dt <= 0.2 min(h^2/eps, eps). The recorded energy is the
// edge-quadrature P whose exact gradient is the applied update, so the trace
// is non-increasing by construction.
std::pair<ScalarField2D, SolveReport> allen_cahn_flow(const ScalarField2D& u0, double eps,
                                                      double dt, int steps,
                                                      const FlowOptions& opt = {});

double flow_dt_bound(const Grid2D& g, double eps); // 0.2 min(h^2/eps, eps)

struct NewtonOptions {
    bool pin_boundary = false;
    std::vector<uint8_t> pin_mask; // optional per-node pins (values from u0)
    int max_cg_iters = 0;          // 0: automatic
};

// Damped Newton on F(u) = lap u - W'(u)/eps^2 with truncated preconditioned
// CG on the (weighted-symmetric) Jacobian and backtracking on |F|.
std::pair<ScalarField2D, SolveReport> allen_cahn_newton(const ScalarField2D& u0, double eps,
                                                        double tol, int max_iter,
                                                        const NewtonOptions& opt = {});

struct SaddleSolution {
    ScalarField2D field; // odd-reflected solution on [-R,R]^2, (2n-1)^2 nodes
    double R = 0.0;
    int n = 0; // quadrant node count per side
    double residual = 0.0;
    bool converged = false;
};

// Solves lap U = W'(U) on the quadrant [0,R]^2 with U = 0 on the axes and
// tanh(min(x,y)/sqrt 2) far data, then extends by odd reflection. Cached in
// PF2D files keyed by (R, n, tol) when cache_dir is given (or PF_CACHE_DIR).
SaddleSolution saddle_solution(double R, int n, double tol,
                               const std::optional<std::string>& cache_dir = std::nullopt);

std::string saddle_cache_dir(); // PF_CACHE_DIR or "pf-cache"

// Blow-down grid commensurate with the saddle lattice (exact node sampling).
Grid2D make_blowdown_grid(const SaddleSolution& s, double eps, int cells_per_eps,
                          double half_extent);

struct BlowDown {
    ScalarField2D field;
    bool exact_sampling = false; // nodes landed on saddle lattice points
};
// u(x) = U(x/eps); outside the stored box the far-field profile
// sign(x1 x2) tanh(min |x_i|/sqrt 2) continues the data. Rejects eps so small
// that the box covers less than half of the requested domain.
BlowDown blow_down(const SaddleSolution& s, double eps, const Grid2D& grid);

struct DescentOptions {
    int trace_every = 1;
    double tau = 1e-8;
    int max_halvings = 40;
};
// Armijo gradient descent on P + B; the search direction differentiates the
// energy with the normal field frozen at the current iterate, acceptance
// re-evaluates the full energy.
std::pair<ScalarField2D, SolveReport> e_eps_descent(const ScalarField2D& u0, double eps,
                                                    double dt, int steps,
                                                    const DescentOptions& opt = {});

} // namespace pf
