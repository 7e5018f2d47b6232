#pragma once

#include <complex>
#include <random>
#include <span>
#include <vector>

#include "lagfield/density.hpp"
#include "lagfield/grid.hpp"

namespace lagfield {

/// Wave speed c and the Fourier coefficients of an l-periodic real profile
///   f(xi) = Re (1/M) sum_m fhat_m exp(2 pi i m xi / l),
/// m = -floor((M-1)/2) .. floor(M/2) (M terms). The 1/M factor is the usual
/// inverse-DFT scaling, so fhat_m are the DFT of the samples f(j l / M).
///
/// The state is stored through its free real parameters: c, Re fhat_0,
/// (Re, Im) fhat_m for 0 < m < M/2 and, for even M, Re fhat_{M/2}. The
/// coefficients of negative m are the conjugates, so profiles are real.
class TravellingWaveState {
public:
    TravellingWaveState() = default;
    TravellingWaveState(int M, double period, double c = 0.0);

    int M() const { return M_; }
    double period() const { return period_; }
    double c() const { return params_[0]; }
    void set_c(double c) { params_[0] = c; }

    static int m_min(int M) { return -((M - 1) / 2); }
    static int m_max(int M) { return M / 2; }

    /// Coefficient for any m in [m_min, m_max].
    std::complex<double> coeff(int m) const;
    /// Sets fhat_m (and fhat_{-m} implicitly). The imaginary part of the DC
    /// and Nyquist coefficients must be zero.
    void set_coeff(int m, std::complex<double> value);

    /// [c, free coefficient parts...], M + 1 values.
    std::span<const double> params() const { return params_; }
    std::span<double> params() { return params_; }

    /// f(xi) and f'(xi).
    double profile(double xi) const;
    double profile_derivative(double xi) const;

    /// d f(xi) / d params[k] for k >= 1 (index 0, the speed, gives 0).
    void profile_basis(double xi, std::span<double> out) const;

    bool operator==(const TravellingWaveState& other) const = default;

private:
    int M_ = 0;
    double period_ = 1.0;
    std::vector<double> params_ = {0.0};
};

double profile_eval(const TravellingWaveState& s, double xi);

/// u^i_j = f(j dx - c i dt).
FieldGrid tw_grid(const TravellingWaveState& s, const Mesh& mesh);

struct DispersionRoot {
    int n = 0;
    double c = 0.0;
    /// 1 - dt^2/2 + (dt/dx)^2 (cos(kappa dx) - 1), the required cos(kappa c dt).
    double rhs = 0.0;
    /// No real speed: |rhs| > 1, or n = 0 where the relation degenerates.
    bool resonant = false;
};

/// Principal non-negative speed of mode n for the discrete wave equation with
/// V = u^2/2: c = arccos(rhs) / (kappa dt), kappa = 2 pi n / l.
DispersionRoot dispersion_root(int n, const Mesh& mesh);

struct ExactWave {
    TravellingWaveState state;
    DispersionRoot root;
};

/// f(xi) = alpha sin(kappa xi) + beta cos(kappa xi) travelling at c_n.
/// Throws ResonantMode when no real speed exists and InvalidArgument when
/// |n| > M/2 (or alpha != 0 at the Nyquist mode, which cannot carry a sine).
ExactWave exact_wave_tw(int n, double alpha, double beta, const Mesh& mesh);

/// sum of squared DEL residuals of tw_grid(s, mesh).
double tw_residual(const DensityModel& Ld, const TravellingWaveState& s, const Mesh& mesh);

struct TwLossConfig {
    /// Regulariser exp(-reg_strength * |U|^2); reg_weight 0 removes it.
    double reg_strength = 100.0;
    double reg_weight = 1.0;
};

/// tw_residual + exp(-100 |tw_grid|^2), |.| the discrete l2 norm over all entries.
double tw_loss(const DensityModel& Ld, const TravellingWaveState& s, const Mesh& mesh, const TwLossConfig& cfg = {});

struct TwLossGrad {
    double residual = 0.0;
    double regulariser = 0.0;
    double loss = 0.0;
    std::vector<double> gradient;  // over TravellingWaveState::params()
};

/// Loss and its exact gradient; uses the stencil Hessians of Ld.
TwLossGrad tw_loss_grad(const DensityModel& Ld, const TravellingWaveState& s, const Mesh& mesh,
                        const TwLossConfig& cfg = {});

/// Adds N(0, sigma^2) noise to c and to every free coefficient part.
TravellingWaveState perturb_state(const TravellingWaveState& s, double sigma, std::mt19937_64& rng);

struct FindTwConfig {
    int steps = 10000;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Stop once the loss is at or below this; adam's normalised steps would
    /// otherwise wander at round-off level around an exact solution.
    double loss_tolerance = 1e-20;
    TwLossConfig loss;
};

struct FindTwResult {
    TravellingWaveState state;  // lowest loss seen
    double loss = 0.0;
    std::vector<double> history;  // loss before each step, then the final loss
    int best_step = 0;
    bool aborted = false;
};

/// adam on tw_loss over (c, free coefficient parts) from init.
FindTwResult find_tw(const DensityModel& Ld, const TravellingWaveState& init, const Mesh& mesh,
                     const FindTwConfig& cfg = {});

}  // namespace lagfield
