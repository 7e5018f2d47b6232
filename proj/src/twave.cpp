#include "lagfield/twave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lagfield/del.hpp"
#include "lagfield/errors.hpp"
#include "lagfield/train.hpp"

namespace lagfield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int half_modes(int M) { return (M - 1) / 2; }
bool has_nyquist(int M) { return M % 2 == 0; }

}  // namespace

TravellingWaveState::TravellingWaveState(int M, double period, double c)
    : M_(M), period_(period), params_(static_cast<std::size_t>(M) + 1, 0.0) {
    if (M < 1) throw InvalidArgument("travelling wave needs at least one coefficient");
    if (!(period > 0.0)) throw InvalidArgument("travelling wave period must be positive");
    params_[0] = c;
}

std::complex<double> TravellingWaveState::coeff(int m) const {
    if (m < m_min(M_) || m > m_max(M_)) throw std::out_of_range("Fourier index outside the ansatz range");
    if (m < 0) return std::conj(coeff(-m));
    if (m == 0) return {params_[1], 0.0};
    if (has_nyquist(M_) && m == M_ / 2) return {params_[M_], 0.0};
    return {params_[2 * m], params_[2 * m + 1]};
}

void TravellingWaveState::set_coeff(int m, std::complex<double> value) {
    if (m < m_min(M_) || m > m_max(M_)) throw std::out_of_range("Fourier index outside the ansatz range");
    if (m < 0) {
        set_coeff(-m, std::conj(value));
        return;
    }
    const bool real_only = m == 0 || (has_nyquist(M_) && m == M_ / 2);
    if (real_only) {
        if (value.imag() != 0.0) throw InvalidArgument("DC and Nyquist coefficients must be real");
        params_[m == 0 ? 1 : M_] = value.real();
        return;
    }
    params_[2 * m] = value.real();
    params_[2 * m + 1] = value.imag();
}

void TravellingWaveState::profile_basis(double xi, std::span<double> out) const {
    const double inv = 1.0 / M_;
    out[0] = 0.0;
    out[1] = inv;
    for (int m = 1; m <= half_modes(M_); ++m) {
        const double th = kTwoPi * m * xi / period_;
        out[2 * m] = 2.0 * inv * std::cos(th);
        out[2 * m + 1] = -2.0 * inv * std::sin(th);
    }
    if (has_nyquist(M_) && M_ >= 2) out[M_] = inv * std::cos(kTwoPi * (M_ / 2) * xi / period_);
}

double TravellingWaveState::profile(double xi) const {
    const double inv = 1.0 / M_;
    double f = params_[1] * inv;
    for (int m = 1; m <= half_modes(M_); ++m) {
        const double th = kTwoPi * m * xi / period_;
        f += 2.0 * inv * (params_[2 * m] * std::cos(th) - params_[2 * m + 1] * std::sin(th));
    }
    if (has_nyquist(M_) && M_ >= 2) f += inv * params_[M_] * std::cos(kTwoPi * (M_ / 2) * xi / period_);
    return f;
}

double TravellingWaveState::profile_derivative(double xi) const {
    const double inv = 1.0 / M_;
    double f = 0.0;
    for (int m = 1; m <= half_modes(M_); ++m) {
        const double k = kTwoPi * m / period_;
        const double th = k * xi;
        f -= 2.0 * inv * k * (params_[2 * m] * std::sin(th) + params_[2 * m + 1] * std::cos(th));
    }
    if (has_nyquist(M_) && M_ >= 2) {
        const double k = kTwoPi * (M_ / 2) / period_;
        f -= inv * params_[M_] * k * std::sin(k * xi);
    }
    return f;
}

double profile_eval(const TravellingWaveState& s, double xi) { return s.profile(xi); }

FieldGrid tw_grid(const TravellingWaveState& s, const Mesh& mesh) {
    FieldGrid U(mesh, 1);
    for (int i = 0; i <= mesh.N(); ++i) {
        for (int j = 0; j < mesh.M(); ++j) U(i, j) = s.profile(j * mesh.dx() - s.c() * i * mesh.dt());
    }
    return U;
}

DispersionRoot dispersion_root(int n, const Mesh& mesh) {
    DispersionRoot r;
    r.n = n;
    const double dt = mesh.dt();
    const double dx = mesh.dx();
    const double kappa = kTwoPi * n / mesh.l();
    r.rhs = 1.0 - 0.5 * dt * dt + (dt * dt) / (dx * dx) * (std::cos(kappa * dx) - 1.0);
    if (n == 0 || std::abs(r.rhs) > 1.0) {
        r.resonant = true;
        r.c = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    r.c = std::acos(r.rhs) / (std::abs(kappa) * dt);
    return r;
}

ExactWave exact_wave_tw(int n, double alpha, double beta, const Mesh& mesh) {
    const int M = mesh.M();
    if (std::abs(n) > M / 2) throw InvalidArgument("mode " + std::to_string(n) + " not representable on the mesh");
    const DispersionRoot root = dispersion_root(n, mesh);
    if (root.resonant) {
        throw ResonantMode("mode " + std::to_string(n) + " has no real wave speed (rhs " + std::to_string(root.rhs) + ")");
    }
    if (n < 0) {
        n = -n;
        alpha = -alpha;
    }
    ExactWave w{TravellingWaveState(M, mesh.l(), root.c), root};
    // (2/M) Re(fhat e^{i k xi}) = alpha sin + beta cos  <=>  fhat = M (beta - i alpha) / 2.
    if (has_nyquist(M) && n == M / 2) {
        if (alpha != 0.0) throw InvalidArgument("the Nyquist mode cannot carry a sine component");
        w.state.set_coeff(n, {M * beta, 0.0});
    } else {
        w.state.set_coeff(n, {0.5 * M * beta, -0.5 * M * alpha});
    }
    return w;
}

double tw_residual(const DensityModel& Ld, const TravellingWaveState& s, const Mesh& mesh) {
    return del_field(Ld, tw_grid(s, mesh)).sum_squares();
}

double tw_loss(const DensityModel& Ld, const TravellingWaveState& s, const Mesh& mesh, const TwLossConfig& cfg) {
    const FieldGrid U = tw_grid(s, mesh);
    double norm2 = 0.0;
    for (double v : U.values()) norm2 += v * v;
    return del_field(Ld, U).sum_squares() + cfg.reg_weight * std::exp(-cfg.reg_strength * norm2);
}

TwLossGrad tw_loss_grad(const DensityModel& Ld, const TravellingWaveState& s, const Mesh& mesh,
                        const TwLossConfig& cfg) {
    if (Ld.dim() != 1) throw MeshMismatch("travelling-wave search needs a scalar field density");
    if (s.M() != mesh.M()) throw MeshMismatch("travelling-wave state and mesh differ in M");
    const int N = mesh.N();
    const int M = mesh.M();
    const FieldGrid U = tw_grid(s, mesh);

    // Partials at every stencil, then residuals at interior points.
    std::vector<double> P(static_cast<std::size_t>(N) * M * 3);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < M; ++j) {
            Ld.partials(stencil_at(U, i, j), std::span<double>(P).subspan((static_cast<std::size_t>(i) * M + j) * 3, 3));
        }
    }
    auto part = [&](int i, int j, int k) { return P[(static_cast<std::size_t>(i) * M + wrap(j, M)) * 3 + k]; };
    std::vector<double> R(static_cast<std::size_t>(N + 1) * M, 0.0);
    auto Rr = [&](int i, int j) -> double& { return R[static_cast<std::size_t>(i) * M + wrap(j, M)]; };
    TwLossGrad out;
    for (int i = 1; i < N; ++i) {
        for (int j = 0; j < M; ++j) {
            const double r = part(i - 1, j, 1) + part(i, j, 0) + part(i, j - 1, 2);
            Rr(i, j) = r;
            out.residual += r * r;
        }
    }
    double norm2 = 0.0;
    for (double v : U.values()) norm2 += v * v;
    out.regulariser = cfg.reg_weight * std::exp(-cfg.reg_strength * norm2);
    out.loss = out.residual + out.regulariser;

    // Adjoint of the grid values.
    std::vector<double> Ubar(static_cast<std::size_t>(N + 1) * M, 0.0);
    auto ub = [&](int i, int j) -> double& { return Ubar[static_cast<std::size_t>(i) * M + wrap(j, M)]; };
    double H[9];
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < M; ++j) {
            double w[3] = {0.0, 0.0, 0.0};
            if (i >= 1) {
                w[0] = 2.0 * Rr(i, j);
                w[2] = 2.0 * Rr(i, j + 1);
            }
            if (i + 1 <= N - 1) w[1] = 2.0 * Rr(i + 1, j);
            if (w[0] == 0.0 && w[1] == 0.0 && w[2] == 0.0) continue;
            Ld.hessian(stencil_at(U, i, j), H);
            ub(i, j) += H[0] * w[0] + H[1] * w[1] + H[2] * w[2];
            ub(i + 1, j) += H[3] * w[0] + H[4] * w[1] + H[5] * w[2];
            ub(i, j + 1) += H[6] * w[0] + H[7] * w[1] + H[8] * w[2];
        }
    }
    const double reg_scale = -2.0 * cfg.reg_strength * out.regulariser;
    for (int i = 0; i <= N; ++i) {
        for (int j = 0; j < M; ++j) ub(i, j) += reg_scale * U(i, j);
    }

    out.gradient.assign(s.params().size(), 0.0);
    std::vector<double> basis(s.params().size());
    for (int i = 0; i <= N; ++i) {
        for (int j = 0; j < M; ++j) {
            const double a = ub(i, j);
            if (a == 0.0) continue;
            const double xi = j * mesh.dx() - s.c() * i * mesh.dt();
            s.profile_basis(xi, basis);
            for (std::size_t k = 1; k < basis.size(); ++k) out.gradient[k] += a * basis[k];
            out.gradient[0] += a * s.profile_derivative(xi) * (-i * mesh.dt());
        }
    }
    return out;
}

TravellingWaveState perturb_state(const TravellingWaveState& s, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, sigma);
    TravellingWaveState out = s;
    for (double& p : out.params()) p += normal(rng);
    return out;
}

FindTwResult find_tw(const DensityModel& Ld, const TravellingWaveState& init, const Mesh& mesh,
                     const FindTwConfig& cfg) {
    if (cfg.steps < 0) throw InvalidArgument("find_tw: steps must be non-negative");
    if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("find_tw: learning_rate must be positive");
    FindTwResult res{init, std::numeric_limits<double>::infinity(), {}, 0, false};
    TravellingWaveState s = init;
    TrainConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    adam_cfg.beta1 = cfg.beta1;
    adam_cfg.beta2 = cfg.beta2;
    adam_cfg.eps = cfg.eps;
    AdamState adam;
    for (int step = 0; step <= cfg.steps; ++step) {
        const TwLossGrad lg = tw_loss_grad(Ld, s, mesh, cfg.loss);
        bool finite = std::isfinite(lg.loss);
        for (double g : lg.gradient) finite = finite && std::isfinite(g);
        if (!finite) {
            res.aborted = true;
            break;
        }
        res.history.push_back(lg.loss);
        if (lg.loss < res.loss) {
            res.loss = lg.loss;
            res.state = s;
            res.best_step = step;
        }
        if (step == cfg.steps || lg.loss <= cfg.loss_tolerance) break;
        adam_step(s.params(), lg.gradient, adam, adam_cfg);
    }
    return res;
}

}  // namespace lagfield
