// Shape library: signed distances (positive inside), the recovery-field
// construction u = q(d/eps), and the cusp dumbbell with its smooth tube
// approximants.
#pragma once
#include "pf/grid.hpp"
#include "pf/potential.hpp"

#include <variant>
#include <vector>

namespace pf {

struct Circle {
    Vec2 center;
    double r = 0.5;
};

struct Ellipse {
    Vec2 center;
    double a = 0.6, b = 0.3;
};

// The coordinate-axes cross; signed distance is positive in quadrants I/III.
struct CrossShape {};

// One or more closed loops; even-odd rule decides inside.
struct Polygon {
    std::vector<std::vector<Vec2>> loops;
};

// Two mirror teardrop lobes whose cusps face each other at distance L.
// Lobe boundary: y^2 = (coef * xi^3)^2 (1 - xi/lobe_len), xi measured from
// the cusp; the cusp is tangential with vanishing curvature.
struct CuspDumbbell {
    double L = 0.5;
    double lobe_len = 0.6;
    double coef = 3.2;
    int samples_per_lobe = 512;
};

// The C^1 set E_h: dumbbell lobes joined by a flat tube of height 1/h_index,
// walls meeting the lobes tangentially.
struct TubeApproximant {
    CuspDumbbell base;
    int h_index = 4;
};

using Shape = std::variant<Circle, Ellipse, CrossShape, Polygon, CuspDumbbell, TubeApproximant>;

struct SdfResult {
    double d = 0.0;
    bool fallback = false; // ellipse Newton fell back to dense sampling
};

double signed_distance(const Shape& s, const Vec2& p);
SdfResult signed_distance_ex(const Shape& s, const Vec2& p);

// Polygonal boundary of E_h (single closed loop). Rejects h_index so small
// that the tube is not thinner than the lobes.
Polygon cusp_approximant(double L, int h_index);
Polygon cusp_approximant(const CuspDumbbell& base, int h_index);

// The limit lobes as open vertex chains running cusp -> around -> cusp;
// used as the independent elastica oracle (the cusp point itself is an
// endpoint, where no discrete curvature is assigned).
std::vector<std::vector<Vec2>> cusp_limit_lobes(const CuspDumbbell& base, int samples);

// Boundary polygon(s) of the limit dumbbell itself (cusp vertices included).
Polygon cusp_limit_polygon(const CuspDumbbell& base);

double polygon_area(const Polygon& p); // shoelace, summed over loops

struct RecoveryField {
    ScalarField2D u;
    bool resolved = true;                 // eps >= 2 max(hx, hy)
    bool interface_near_boundary = false; // |d| < 5 eps somewhere on the boundary
};
RecoveryField recovery_field(const Shape& s, double eps, const Grid2D& grid);

} // namespace pf
