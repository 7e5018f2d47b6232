#include <doctest.h>

#include <random>

#include "lagfield/errors.hpp"
#include "lagfield/grid.hpp"
#include "oracles.hpp"

using namespace lagfield;

TEST_CASE("mesh validates sizes and derives widths") {
    const Mesh m(0.5, 1.0, 20, 20);
    CHECK(m.dt() == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(m.dx() == doctest::Approx(0.05).epsilon(1e-15));
    CHECK_THROWS_AS(Mesh(0.5, 1.0, 1, 20), InvalidArgument);
    CHECK_THROWS_AS(Mesh(0.5, 1.0, 20, 1), InvalidArgument);
    CHECK_THROWS_AS(Mesh(0.0, 1.0, 20, 20), InvalidArgument);
    CHECK_THROWS_AS(Mesh(0.5, -1.0, 20, 20), InvalidArgument);
    const Mesh w = Mesh::from_widths(0.5, 1.0, 0.025, 0.05);
    CHECK(w.N() == 20);
    CHECK(w.M() == 20);
    CHECK(m.with_steps(100).T() == doctest::Approx(2.5));
}

TEST_CASE("stencil of a constant grid") {
    FieldGrid U(Mesh(1.0, 1.0, 4, 5), 1);
    for (double& v : U.values()) v = 3.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 5; ++j) {
            const Stencil s = stencil_at(U, i, j);
            CHECK(s.a[0] == 3.0);
            CHECK(s.b[0] == 3.0);
            CHECK(s.c[0] == 3.0);
        }
    }
}

TEST_CASE("stencil wraps in space") {
    const int M = 8;
    FieldGrid U(Mesh(1.0, 1.0, 3, M), 1);
    for (int i = 0; i <= 3; ++i)
        for (int j = 0; j < M; ++j) U(i, j) = i + static_cast<double>(j) / M;
    const Stencil s = stencil_at(U, 0, M - 1);
    CHECK(s.a[0] == doctest::Approx(1.0 - 1.0 / M));
    CHECK(s.b[0] == doctest::Approx(2.0 - 1.0 / M));
    CHECK(s.c[0] == 0.0);  // u^0_M == u^0_0 = 0 + 0/M
    // Periodicity: c at j = M-1 is the value at column 0.
    for (int i = 0; i < 3; ++i) CHECK(stencil_at(U, i, M - 1).c[0] == U(i, 0));
}

TEST_CASE("stencil matches direct reads on a random vector grid") {
    std::mt19937_64 rng(7);
    const Mesh mesh(1.0, 2.0, 6, 7);
    const FieldGrid U = oracle::random_grid(mesh, 2, rng);
    const auto raw = U.values();
    auto idx = [&](int i, int j, int k) { return raw[(static_cast<std::size_t>(i) * 7 + j) * 2 + k]; };
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            const Stencil s = stencil_at(U, i, j);
            for (int k = 0; k < 2; ++k) {
                CHECK(s.a[k] == idx(i, j, k));
                CHECK(s.b[k] == idx(i + 1, j, k));
                CHECK(s.c[k] == idx(i, j + 1, k));
            }
        }
    }
    CHECK_THROWS_AS(stencil_at(U, 6, 0), std::out_of_range);
    CHECK_THROWS_AS(stencil_at(U, -1, 0), std::out_of_range);
}

TEST_CASE("sup_norm_diff") {
    std::mt19937_64 rng(3);
    const Mesh mesh(1.0, 1.0, 5, 6);
    const FieldGrid U = oracle::random_grid(mesh, 1, rng);
    CHECK(sup_norm_diff(U, U) == 0.0);
    FieldGrid V = U;
    V(2, 3) += 0.5;
    CHECK(sup_norm_diff(U, V) == doctest::Approx(0.5).epsilon(1e-15));

    const FieldGrid A = oracle::random_grid(mesh, 1, rng);
    const FieldGrid B = oracle::random_grid(mesh, 1, rng);
    const FieldGrid C = oracle::random_grid(mesh, 1, rng);
    double scan = 0.0;
    for (std::size_t k = 0; k < A.values().size(); ++k)
        scan = std::max(scan, std::abs(A.values()[k] - B.values()[k]));
    CHECK(sup_norm_diff(A, B) == scan);
    CHECK(sup_norm_diff(A, B) == sup_norm_diff(B, A));
    CHECK(sup_norm_diff(A, C) <= sup_norm_diff(A, B) + sup_norm_diff(B, C));

    CHECK_THROWS_AS(sup_norm_diff(U, FieldGrid(Mesh(1.0, 1.0, 5, 7), 1)), MeshMismatch);
    CHECK_THROWS_AS(sup_norm_diff(U, FieldGrid(mesh, 2)), MeshMismatch);
}

TEST_CASE("require_finite rejects NaN") {
    FieldGrid U(Mesh(1.0, 1.0, 2, 2), 1);
    CHECK_NOTHROW(require_finite(U, "test"));
    U(1, 1) = std::nan("");
    CHECK_THROWS_AS(require_finite(U, "test"), NumericalError);
}
