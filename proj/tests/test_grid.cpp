#include "pf/field_io.hpp"
#include "pf/grid.hpp"
#include "pf/potential.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace pf;

TEST_CASE("make_grid spacing and validation") {
    Grid2D g = make_grid(9, 9, Rect{-1, 1, -1, 1}, BoundaryKind::Neumann);
    CHECK(g.hx == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.hy == doctest::Approx(0.25).epsilon(1e-15));

    Grid2D g2 = make_grid(257, 257, Rect{-1, 1, -1, 1}, BoundaryKind::DirichletOne);
    CHECK(g2.hx == doctest::Approx(0.0078125).epsilon(1e-15));

    CHECK_THROWS_AS(make_grid(8, 8, Rect{0, 0, 0, 1}, BoundaryKind::Neumann),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_grid(7, 9, Rect{-1, 1, -1, 1}, BoundaryKind::Neumann),
                    std::invalid_argument);
}

TEST_CASE("linear field has exact gradient at interior nodes") {
    Grid2D g = make_grid(17, 13, Rect{-1, 1, -0.5, 0.5}, BoundaryKind::Neumann);
    ScalarField2D u = sample_field(g, [](double x, double y) { return 3.0 * x + 2.0 * y; });
    VectorField2D gr = gradient(u);
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i) {
            CHECK(gr.x[g.idx(i, j)] == doctest::Approx(3.0).epsilon(1e-13));
            CHECK(gr.y[g.idx(i, j)] == doctest::Approx(2.0).epsilon(1e-13));
        }
}

TEST_CASE("quadratic field has exact hessian at interior nodes") {
    Grid2D g = make_grid(17, 17, Rect{-1, 1, -1, 1}, BoundaryKind::Neumann);
    ScalarField2D u = sample_field(g, [](double x, double y) { return x * x + y * y; });
    MatrixField2D h = hessian(u);
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i) {
            int k = g.idx(i, j);
            CHECK(h.xx[k] == doctest::Approx(2.0).epsilon(1e-11));
            CHECK(h.yy[k] == doctest::Approx(2.0).epsilon(1e-11));
            CHECK(h.xy[k] == doctest::Approx(0.0).epsilon(1e-11));
        }
}

TEST_CASE("gradient converges at second order on a smooth field") {
    auto max_err = [](int n) {
        Grid2D g = make_grid(n, n, Rect{-1, 1, -1, 1}, BoundaryKind::Neumann);
        ScalarField2D u =
            sample_field(g, [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); });
        VectorField2D gr = gradient(u);
        double err = 0.0;
        for (int j = 1; j < g.ny - 1; ++j)
            for (int i = 1; i < g.nx - 1; ++i) {
                double ex = M_PI * std::cos(M_PI * g.x(i)) * std::sin(M_PI * g.y(j));
                err = std::max(err, std::abs(gr.x[g.idx(i, j)] - ex));
            }
        return err;
    };
    double e1 = max_err(33), e2 = max_err(65);
    CHECK(e1 / e2 > 3.5); // order ~2
    CHECK(e1 / e2 < 4.5);
}

TEST_CASE("laplacian equals trace of hessian") {
    Grid2D g = make_grid(33, 29, Rect{-1, 1, -1, 1}, BoundaryKind::Neumann);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ScalarField2D u(g);
    for (double& v : u.v) v = dist(rng);
    ScalarField2D lap = laplacian(u);
    MatrixField2D h = hessian(u);
    for (int k = 0; k < g.count(); ++k)
        CHECK(lap.v[k] == doctest::Approx(h.xx[k] + h.yy[k]).epsilon(1e-14));
}

TEST_CASE("periodic laplacian integrates to zero") {
    Grid2D g = make_grid(65, 65, Rect{-1, 1, -1, 1}, BoundaryKind::Periodic);
    ScalarField2D u = sample_field(
        g, [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y) + 0.3; });
    ScalarField2D lap = laplacian(u);
    CHECK(std::abs(integrate(lap)) < 1e-11);
}

TEST_CASE("stencil adjoints are exact") {
    Grid2D g = make_grid(19, 23, Rect{-1, 1, -1, 1}, BoundaryKind::Neumann);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    ScalarField2D u(g);
    for (double& v : u.v) v = dist(rng);
    VectorField2D f(g);
    for (double& v : f.x) v = dist(rng);
    for (double& v : f.y) v = dist(rng);
    MatrixField2D m(g);
    for (double& v : m.xx) v = dist(rng);
    for (double& v : m.xy) v = dist(rng);
    for (double& v : m.yy) v = dist(rng);

    VectorField2D gu = gradient(u);
    double lhs = 0.0;
    for (int k = 0; k < g.count(); ++k) lhs += f.x[k] * gu.x[k] + f.y[k] * gu.y[k];
    ScalarField2D gt = gradient_adjoint(f);
    double rhs = 0.0;
    for (int k = 0; k < g.count(); ++k) rhs += gt.v[k] * u.v[k];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    MatrixField2D hu = hessian(u);
    lhs = 0.0;
    for (int k = 0; k < g.count(); ++k)
        lhs += m.xx[k] * hu.xx[k] + 2.0 * m.xy[k] * hu.xy[k] + m.yy[k] * hu.yy[k];
    ScalarField2D ht = hessian_adjoint(m);
    rhs = 0.0;
    for (int k = 0; k < g.count(); ++k) rhs += ht.v[k] * u.v[k];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("PF2D round trip is bit exact") {
    Grid2D g = make_grid(11, 9, Rect{-1, 1, -0.5, 0.5}, BoundaryKind::Periodic);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    ScalarField2D u(g);
    for (double& v : u.v) v = dist(rng);

    std::string path = (std::filesystem::temp_directory_path() / "pf_roundtrip.pf2d").string();
    write_field(u, path);
    ScalarField2D r = read_field(path);
    REQUIRE(r.v.size() == u.v.size());
    for (size_t k = 0; k < u.v.size(); ++k) {
        CHECK(std::memcmp(&r.v[k], &u.v[k], sizeof(double)) == 0);
    }
    CHECK(r.grid.same_layout(g));

    std::string comment_in = "cache key 123", comment_out;
    write_field(u, path, comment_in);
    ScalarField2D r2 = read_field(path, &comment_out);
    CHECK(comment_out == comment_in);
    CHECK(r2.v == u.v);
    std::filesystem::remove(path);
}

TEST_CASE("PF2D rejects malformed files") {
    auto tmp = std::filesystem::temp_directory_path();
    std::string bad_magic = (tmp / "pf_badmagic.pf2d").string();
    {
        std::ofstream out(bad_magic, std::ios::binary);
        out << "PF3D 1\nnx=8\n";
    }
    CHECK_THROWS_AS(read_field(bad_magic), FieldIoError);
    std::filesystem::remove(bad_magic);

    // declared size disagrees with payload length
    Grid2D g = make_grid(8, 8, Rect{0, 1, 0, 1}, BoundaryKind::Neumann);
    ScalarField2D u(g);
    std::string short_payload = (tmp / "pf_short.pf2d").string();
    write_field(u, short_payload);
    {
        // truncate a few bytes
        auto size = std::filesystem::file_size(short_payload);
        std::filesystem::resize_file(short_payload, size - 8);
    }
    CHECK_THROWS_AS(read_field(short_payload), FieldIoError);
    std::filesystem::remove(short_payload);
}

TEST_CASE("profile identities and c0") {
    double c0 = c0_constant();
    CHECK(std::abs(c0 - 0.9428090416) < 1e-9);
    CHECK(std::abs(c0 - c0_closed_form) < 1e-12);
    CHECK(c0 > 0.0);

    auto [q0, dq0] = optimal_profile(0.0);
    CHECK(q0 == doctest::Approx(0.0));
    CHECK(dq0 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(std::abs(optimal_profile(30.0).first - 1.0) < 1e-12);
    CHECK(std::abs(optimal_profile(-30.0).first + 1.0) < 1e-12);

    // q'' = W'(q) and equipartition q'^2 = 2 W(q), sampled
    for (double s = -10.0; s <= 10.0; s += 0.37) {
        auto [q, dq] = optimal_profile(s);
        double h = 1e-5;
        double qpp = (optimal_profile(s + h).second - optimal_profile(s - h).second) / (2 * h);
        CHECK(std::abs(qpp - well_d1(q)) < 1e-9);
        CHECK(std::abs(dq * dq - 2.0 * well(q)) < 1e-14);
    }

    // independent consistency: integral of q'^2 over [-30,30] equals c0
    double qint = adaptive_simpson(
        [](double s) { double d = optimal_profile(s).second; return d * d; }, -30.0, 30.0,
        1e-12);
    CHECK(std::abs(qint - c0) < 1e-9);
}
