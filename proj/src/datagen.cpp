#include "lagfield/datagen.hpp"

#include <cmath>
#include <numbers>

#include "lagfield/errors.hpp"
#include "lagfield/parallel.hpp"

namespace lagfield {

void GenConfig::validate() const {
    if (K < 1) throw InvalidArgument("K must be at least 1");
    if (!(weight_rate >= 0.0)) throw InvalidArgument("weight_rate must be non-negative");
    if (weight_power < 0) throw InvalidArgument("weight_power must be non-negative");
}

double GenConfig::weight(int m) const {
    return mesh.M() * std::exp(-weight_rate * std::pow(static_cast<double>(m), weight_power));
}

SpectralSample sample_spectrum(const GenConfig& cfg, std::mt19937_64& rng) {
    const int M = cfg.mesh.M();
    const int r = M / 2 + 1;
    std::normal_distribution<double> normal(0.0, 1.0);
    SpectralSample s;
    s.coeffs.resize(r);
    for (int m = 0; m < r; ++m) {
        const double re = normal(rng);
        double im = normal(rng);
        if (m == 0 || (M % 2 == 0 && m == M / 2)) im = 0.0;
        s.coeffs[m] = cfg.weight(m) * std::complex<double>(re, im);
    }
    return s;
}

std::vector<double> inverse_rdft(const SpectralSample& s, int M) {
    const int r = M / 2 + 1;
    if (static_cast<int>(s.coeffs.size()) != r) throw InvalidArgument("inverse_rdft: expected M/2+1 coefficients");
    std::vector<double> x(M);
    for (int n = 0; n < M; ++n) {
        double acc = s.coeffs[0].real();
        for (int m = 1; m < r; ++m) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>(m) * n / M;
            const double term = s.coeffs[m].real() * std::cos(phase) - s.coeffs[m].imag() * std::sin(phase);
            acc += (M % 2 == 0 && m == M / 2) ? term : 2.0 * term;
        }
        x[n] = acc / M;
    }
    return x;
}

std::vector<double> sample_initial_row(const GenConfig& cfg, std::mt19937_64& rng) {
    return inverse_rdft(sample_spectrum(cfg, rng), cfg.mesh.M());
}

std::vector<double> second_row(std::span<const double> u0, std::span<const double> v0, const Mesh& mesh) {
    if (u0.size() != v0.size()) throw MeshMismatch("second_row: u0 and v0 differ in length");
    // p0 = dL_S/dv (u0, v0) = dx v0 and the discrete momentum of
    // dt L_S(u1, (u1 - u0)/dt) is dx (u1 - u0)/dt; the potential and the
    // spatial term do not enter either.
    std::vector<double> u1(u0.size());
    for (std::size_t j = 0; j < u0.size(); ++j) u1[j] = u0[j] + mesh.dt() * v0[j];
    return u1;
}

FieldGrid reference_solve(std::span<const double> u0, std::span<const double> u1, const Mesh& mesh,
                          const Potential& V, int n_steps) {
    const int M = mesh.M();
    if (u0.size() != static_cast<std::size_t>(M) || u1.size() != static_cast<std::size_t>(M)) {
        throw MeshMismatch("reference_solve: rows must have M entries");
    }
    const Mesh out_mesh = n_steps < 0 ? mesh : mesh.with_steps(n_steps);
    FieldGrid U(out_mesh, 1);
    std::copy(u0.begin(), u0.end(), U.row(0).begin());
    std::copy(u1.begin(), u1.end(), U.row(1).begin());
    const double dt2 = mesh.dt() * mesh.dt();
    const double lam = dt2 / (mesh.dx() * mesh.dx());
    double grad = 0.0;
    for (int i = 1; i < out_mesh.N(); ++i) {
        for (int j = 0; j < M; ++j) {
            const double u = U(i, j);
            V.gradient(std::span<const double>(&u, 1), std::span<double>(&grad, 1));
            U(i + 1, j) = 2.0 * u - U(i - 1, j) + lam * (U(i, j - 1) - 2.0 * u + U(i, j + 1)) - dt2 * grad;
        }
    }
    require_finite(U, "reference_solve");
    return U;
}

FieldGrid generate_trajectory(const GenConfig& cfg, int k) {
    std::seed_seq seq{static_cast<unsigned>(cfg.seed & 0xffffffffULL), static_cast<unsigned>(cfg.seed >> 32),
                      static_cast<unsigned>(k)};
    std::mt19937_64 rng(seq);
    const std::vector<double> u0 = sample_initial_row(cfg, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v0(cfg.mesh.M());
    for (double& v : v0) v = normal(rng);
    const std::vector<double> u1 = second_row(u0, v0, cfg.mesh);
    return reference_solve(u0, u1, cfg.mesh, cfg.V);
}

std::vector<FieldGrid> generate_dataset(const GenConfig& cfg, int threads) {
    cfg.validate();
    std::vector<FieldGrid> out(cfg.K);
    parallel_for(cfg.K, threads, [&](int k) { out[k] = generate_trajectory(cfg, k); });
    return out;
}

}  // namespace lagfield
