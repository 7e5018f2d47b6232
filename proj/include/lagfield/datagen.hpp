#pragma once

#include <complex>
#include <random>
#include <span>
#include <vector>

#include "lagfield/density.hpp"
#include "lagfield/grid.hpp"

namespace lagfield {

struct GenConfig {
    int K = 80;
    Mesh mesh = Mesh(0.5, 1.0, 20, 20);
    unsigned long long seed = 0;
    /// Frequency weight m -> M * exp(-weight_rate * m^weight_power).
    double weight_rate = 2.0;
    int weight_power = 4;
    Potential V = Potential::quadratic();
    /// Name echoed into manifests ("quadratic", "quartic" or "zero").
    std::string potential_name = "quadratic";

    void validate() const;
    double weight(int m) const;
};

/// The r = floor(M/2) + 1 coefficients of a real-input DFT of length M.
/// Imaginary parts of the DC and (M even) Nyquist entries are zero.
struct SpectralSample {
    std::vector<std::complex<double>> coeffs;
};

/// Standard-normal real and imaginary parts, multiplied by cfg.weight(m).
SpectralSample sample_spectrum(const GenConfig& cfg, std::mt19937_64& rng);

/// Inverse real DFT, x_n = (1/M) sum_k X_k exp(2 pi i k n / M) with the
/// Hermitian extension of the half spectrum.
std::vector<double> inverse_rdft(const SpectralSample& s, int M);

/// u0 = inverse_rdft(sample_spectrum(cfg, rng)).
std::vector<double> sample_initial_row(const GenConfig& cfg, std::mt19937_64& rng);

/// Second initial row from the conjugate-momentum condition of the
/// semi-discrete wave Lagrangian, dx (u1 - u0) / dt = dx v0, i.e.
/// u1 = u0 + dt v0.
std::vector<double> second_row(std::span<const double> u0, std::span<const double> v0, const Mesh& mesh);

/// Explicit scheme u^{i+1} = 2u^i - u^{i-1} + (dt/dx)^2 (u_{j-1} - 2u + u_{j+1}) - dt^2 grad V(u^i)
/// for n_steps steps (n_steps < 0 means mesh.N()). Field dimension 1.
FieldGrid reference_solve(std::span<const double> u0, std::span<const double> u1, const Mesh& mesh,
                          const Potential& V, int n_steps = -1);

/// Trajectory k: its own generator seeded from (cfg.seed, k), u0 sampled as
/// above, v0 standard normal per point.
FieldGrid generate_trajectory(const GenConfig& cfg, int k);

/// K trajectories, identical for identical configs.
std::vector<FieldGrid> generate_dataset(const GenConfig& cfg, int threads = 1);

}  // namespace lagfield
