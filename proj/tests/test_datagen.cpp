#include <doctest.h>

#include <cmath>
#include <random>

#include "lagfield/datagen.hpp"
#include "lagfield/del.hpp"
#include "lagfield/errors.hpp"
#include "lagfield/twave.hpp"
#include "oracles.hpp"

using namespace lagfield;

TEST_CASE("frequency weights") {
    GenConfig g;
    CHECK(g.weight(0) == 20.0);
    CHECK(g.weight(1) == doctest::Approx(20.0 * std::exp(-2.0)).epsilon(1e-15));
    CHECK(g.weight(2) == doctest::Approx(20.0 * std::exp(-32.0)).epsilon(1e-15));
}

TEST_CASE("inverse real DFT against the full Hermitian sum") {
    std::mt19937_64 rng(5);
    for (int M : {2, 5, 8, 20, 21}) {
        GenConfig g;
        g.mesh = Mesh(0.5, 1.0, 20, M);
        g.weight_rate = 0.1;
        const SpectralSample s = sample_spectrum(g, rng);
        REQUIRE(s.coeffs.size() == static_cast<std::size_t>(M / 2 + 1));
        CHECK(s.coeffs[0].imag() == 0.0);
        if (M % 2 == 0) CHECK(s.coeffs[M / 2].imag() == 0.0);
        const std::vector<double> x = inverse_rdft(s, M);
        const auto ref = oracle::full_inverse_dft(s.coeffs, M);
        for (int n = 0; n < M; ++n) {
            CHECK(std::abs(ref[n].imag()) <= 1e-12);
            CHECK(x[n] == doctest::Approx(ref[n].real()).epsilon(1e-12).scale(1.0));
        }
        // And back: the forward DFT of the samples is the spectrum.
        for (int k = 0; k <= M / 2; ++k) CHECK(std::abs(oracle::dft(x, k) - s.coeffs[k]) <= 1e-10 * (1.0 + std::abs(s.coeffs[k])));
    }
    CHECK_THROWS_AS(inverse_rdft(SpectralSample{{1.0, 2.0}}, 8), InvalidArgument);
}

TEST_CASE("second row") {
    const Mesh m(0.5, 1.0, 20, 3);
    const std::vector<double> u0 = {1.0, 2.0, 3.0}, v0 = {0.0, 4.0, -8.0};
    const std::vector<double> u1 = second_row(u0, v0, m);
    CHECK(u1 == std::vector<double>{1.0, 2.1, 2.8});
    CHECK_THROWS_AS(second_row(u0, std::vector<double>{1.0}, m), MeshMismatch);
}

TEST_CASE("reference solve matches an independent leapfrog") {
    std::mt19937_64 rng(2);
    const Mesh m(0.5, 1.0, 20, 20);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> u0(20), u1(20);
    for (auto& v : u0) v = u(rng);
    for (auto& v : u1) v = u(rng);
    const FieldGrid A = reference_solve(u0, u1, m, Potential::quadratic());
    const FieldGrid B = oracle::leapfrog(u0, u1, m);
    CHECK(sup_norm_diff(A, B) <= 1e-13);

    const FieldGrid L = reference_solve(u0, u1, m, Potential::quadratic(), 100);
    CHECK(L.mesh().N() == 100);
    CHECK(L.mesh().T() == doctest::Approx(2.5));
    CHECK(sup_norm_diff(L, oracle::leapfrog(u0, u1, m.with_steps(100))) <= 1e-12);
}

TEST_CASE("quartic reference trajectories satisfy the quartic DEL") {
    const Mesh m(0.5, 1.0, 20, 20);
    GenConfig g;
    g.K = 2;
    g.V = Potential::quartic();
    g.potential_name = "quartic";
    const WaveDensity L(m.dt(), m.dx(), 1, Potential::quartic());
    for (const FieldGrid& U : generate_dataset(g)) {
        const ResidualField R = del_field(L, U);
        for (int i = 1; i < m.N(); ++i)
            for (int j = 0; j < m.M(); ++j) {
                const double scale = oracle::leapfrog_del_scale(U, i, j, m.dt(), m.dx(), [](double u) { return u * u * u; });
                CHECK(std::abs(R.at(i, j)[0]) <= 1e-13 * scale);
            }
    }
}

TEST_CASE("dataset generation") {
    GenConfig g;
    g.K = 6;
    g.seed = 11;
    const auto a = generate_dataset(g);
    const auto b = generate_dataset(g, 3);
    CHECK(a == b);
    for (int k = 0; k < g.K; ++k) CHECK(a[k] == generate_trajectory(g, k));
    // Trajectory k does not depend on K.
    g.K = 3;
    CHECK(generate_dataset(g)[2] == a[2]);
    CHECK(a[0] != a[1]);
    g.seed = 12;
    CHECK(generate_trajectory(g, 0) != a[0]);

    const WaveDensity L(g.mesh.dt(), g.mesh.dx());
    for (const FieldGrid& U : a) {
        CHECK(U.mesh() == g.mesh);
        CHECK(del_field(L, U).max_abs() <= 1e-10);
    }
    g.K = 0;
    CHECK_THROWS_AS(generate_dataset(g), InvalidArgument);
}

TEST_CASE("sampled fields are smooth and O(1)") {
    GenConfig g;
    g.K = 40;
    double maxabs = 0.0;
    for (const FieldGrid& U : generate_dataset(g)) maxabs = std::max(maxabs, std::abs(U(0, 0)));
    CHECK(maxabs > 0.1);
    CHECK(maxabs < 10.0);
}

TEST_CASE("reference solve reproduces exact travelling waves") {
    const Mesh m(0.5, 1.0, 20, 20);
    for (int n : {1, 2, 3}) {
        const ExactWave w = exact_wave_tw(n, 0.7, -0.4, m);
        const FieldGrid exact = tw_grid(w.state, m);
        const FieldGrid solved = reference_solve(exact.row(0), exact.row(1), m, Potential::quadratic());
        CHECK(sup_norm_diff(exact, solved) <= 1e-8);
    }
}
