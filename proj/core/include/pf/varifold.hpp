// Measure-level objects: the diffuse varifold of a phase field (mass
// eps|grad u|^2/c0 binned over unoriented level-line directions), polyline
// varifolds with Menger curvature, first variations, the Hutchinson
// integration-by-parts residual, density ratios, blow-up tangent probes,
// level-set extraction and the sharp elastica energy.
#pragma once
#include "pf/energy.hpp"
#include "pf/grid.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pf {

struct DiffuseVarifold {
    Grid2D grid;
    double eps = 0.0;
    int n_bins = 18;                 // direction bins on [0, pi)
    std::vector<double> mass;        // per node
    std::vector<double> angle;       // level-line direction in [0, pi); -1 undirected
    std::vector<double> bin_mass;    // size n_bins + 1; last slot = undirected
    double total_mass = 0.0;         // includes the undirected slot
    double undirected_mass = 0.0;
};

DiffuseVarifold diffuse_varifold(const ScalarField2D& u, double eps, double tau = 1e-8,
                                 int n_bins = 18);

struct Polyline {
    std::vector<Vec2> pts;
    bool closed = false;
    int multiplicity = 1;
};

struct PolylineVarifold {
    std::vector<Polyline> curves;
    double total_mass() const; // multiplicity-weighted length
};

void write_polylines(const PolylineVarifold& pv, const std::string& path);
PolylineVarifold read_polylines(const std::string& path);

// Menger (circumscribed-circle) curvature at an interior vertex, with the
// unit direction from the vertex toward the circumcenter (the classical
// curvature vector's direction). Endpoints of open curves get zero.
struct VertexCurvature {
    double kappa = 0.0;
    Vec2 toward_center{0.0, 0.0};
};
VertexCurvature menger_curvature(const Vec2& a, const Vec2& b, const Vec2& c);

// Arclength weight of vertex i (half the adjacent edge lengths).
double vertex_weight(const Polyline& c, size_t i);

using VectorFieldFn = std::function<Vec2(const Vec2&)>;
using JacobianFn = std::function<Mat2(const Vec2&)>;

struct DiffuseFirstVariation {
    double lhs = 0.0; // c0^-1 sum tr(P grad Y) eps|grad u|^2 w
    double rhs = 0.0; // c0^-1 sum (eps lap u - W'(u)/eps)(grad u . Y) w
    bool boundary_warning = false;
};
DiffuseFirstVariation first_variation_diffuse(const ScalarField2D& u, double eps,
                                              const VectorFieldFn& Y, double tau = 1e-8);

struct PolylineFirstVariation {
    double delta_v = 0.0;            // sum_edges theta tr(S grad Y) len
    double curvature_pairing = 0.0;  // integral of H . Y, H = d(deltaV)/dmu
    // open-curve endpoint atoms: (location, outward tangent * theta)
    std::vector<std::pair<Vec2, Vec2>> endpoint_atoms;
};
PolylineFirstVariation polyline_first_variation(const PolylineVarifold& pv,
                                                const VectorFieldFn& Y, const JacobianFn& dY);

// Test function on position x tangent-projection entries, with derivatives.
struct GrassmannTestFn {
    std::function<double(const Vec2&, const Mat2&)> value;
    std::function<Vec2(const Vec2&, const Mat2&)> dx;   // gradient in x
    std::function<Mat2(const Vec2&, const Mat2&)> dm;   // derivative in the matrix entries
};
// Max over the coordinate index of the integration-by-parts residual;
// tends to zero under vertex refinement for smooth curves.
double hutchinson_residual(const PolylineVarifold& pv, const GrassmannTestFn& phi);

// Ball-mass ratio mu(B_rho(x)) / (2 rho), normalized so a multiplicity-1
// line through x has density 1. (The pi*rho normalization seen in parts of
// the literature differs by the constant 2/pi.)
double density_ratio(const DiffuseVarifold& v, const Vec2& x, double rho);
double density_ratio(const PolylineVarifold& pv, const Vec2& x, double rho);

// Mass of a ball under a nodal density field (trapezoid weights).
double mass_in_ball(const Grid2D& g, const std::vector<double>& density, const Vec2& x,
                    double rho);

enum class TangentVerdict { UniqueTangent, NonUnique, Inconclusive };

struct TangentProbeReport {
    Vec2 center;
    std::vector<double> scales;
    std::vector<std::vector<double>> histograms; // per scale, length n_bins
    TangentVerdict verdict = TangentVerdict::Inconclusive;
    std::vector<double> directions; // cluster direction angles in [0, pi)
    std::string csv_rows() const;
};

TangentProbeReport blow_up_probe(const DiffuseVarifold& v, const Vec2& x,
                                 const std::vector<double>& lambdas, int n_bins = 18);
TangentProbeReport blow_up_probe(const PolylineVarifold& pv, const Vec2& x,
                                 const std::vector<double>& lambdas, int n_bins = 18);

// Marching squares with linear interpolation; ambiguous cells resolved by the
// cell-midpoint value.
PolylineVarifold extract_level_set(const ScalarField2D& u, double s);

struct GoodLevel {
    double level = 0.0;
    double proxy = 0.0; // sum over vertices of |kappa| * weight
    bool empty = false;
};
// Scans 32 equispaced levels in [-1+delta, 1-delta], returns the one with the
// smallest discrete first-variation proxy.
GoodLevel select_good_level(const ScalarField2D& u, double eps, double delta);

// sum theta (1 + kappa^2) weight over vertices (Menger curvature).
double elastica_energy(const PolylineVarifold& pv);

Polyline circle_polyline(const Vec2& center, double r, int n);
PolylineVarifold cross_polyline(double half_extent, int n_per_arm);

} // namespace pf
