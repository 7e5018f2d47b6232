#include "lagfield/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lagfield/errors.hpp"
#include "lagfield/linalg.hpp"

namespace lagfield {

void SolverConfig::validate() const {
    if (!(residual_tolerance > 0.0)) throw InvalidArgument("residual_tolerance must be positive");
    if (max_iterations < 1) throw InvalidArgument("max_iterations must be at least 1");
    if (max_row_sweeps < 1) throw InvalidArgument("max_row_sweeps must be at least 1");
}

namespace {

std::span<const double> view(const std::vector<double>& v) { return {v.data(), v.size()}; }

}  // namespace

NewtonResult newton_step_solve(const DensityModel& Ld, const Neighbours& nb, std::span<const double> guess,
                               const SolverConfig& cfg) {
    cfg.validate();
    const int d = Ld.dim();
    if (static_cast<int>(guess.size()) != d || static_cast<int>(nb.u_i_j.size()) != d) {
        throw MeshMismatch("newton_step_solve: dimension mismatch");
    }
    std::vector<double> p(3 * d);

    // Terms of DEL^i_j that do not contain u^{i+1}_j.
    std::vector<double> fixed(d, 0.0);
    double fixed_scale = 0.0;
    Ld.partials({nb.u_im1_j, nb.u_i_j, nb.u_im1_jp1}, p);
    for (int k = 0; k < d; ++k) fixed[k] += p[d + k];
    fixed_scale += linalg::norm2(std::span<const double>(p).subspan(d, d));
    Ld.partials({nb.u_i_jm1, nb.u_ip1_jm1, nb.u_i_j}, p);
    for (int k = 0; k < d; ++k) fixed[k] += p[2 * d + k];
    fixed_scale += linalg::norm2(std::span<const double>(p).subspan(2 * d, d));

    NewtonResult out;
    out.value.assign(guess.begin(), guess.end());
    NewtonReport& rep = out.report;
    std::vector<double> R(d), J(d * d);

    auto residual = [&]() {
        Ld.partials({nb.u_i_j, view(out.value), nb.u_i_jp1}, p);
        for (int k = 0; k < d; ++k) R[k] = fixed[k] + p[k];
        const double scale = fixed_scale + linalg::norm2(std::span<const double>(p).subspan(0, d));
        const double r = linalg::norm2(R);
        if (!std::isfinite(r)) throw NumericalError("newton_step_solve: non-finite residual");
        rep.per_iteration_residuals.push_back(r);
        rep.iterates.insert(rep.iterates.end(), out.value.begin(), out.value.end());
        rep.tolerance_used = cfg.residual_tolerance * std::max(1.0, scale);
        return r;
    };

    double r = residual();
    while (r > rep.tolerance_used) {
        if (rep.iterations >= cfg.max_iterations) {
            throw NoConvergence("Newton did not converge in " + std::to_string(cfg.max_iterations) +
                                " iterations (residual " + std::to_string(r) + ")");
        }
        Ld.mixed_ab({nb.u_i_j, view(out.value), nb.u_i_jp1}, J);
        const std::vector<double> step = linalg::solve(J, R);
        for (int k = 0; k < d; ++k) out.value[k] -= step[k];
        ++rep.iterations;
        r = residual();
    }
    rep.final_residual_norm = r;
    Ld.mixed_ab({nb.u_i_j, view(out.value), nb.u_i_jp1}, J);
    rep.rho_star = linalg::inverse_spectral_norm(J, d);
    return out;
}

namespace {

template <class E>
[[noreturn]] void rethrow_at(const E& e, int i, int j) {
    throw E("at (i=" + std::to_string(i) + ", j=" + std::to_string(j) + "): " + e.what());
}

}  // namespace

PropagationResult propagate(const DensityModel& Ld, std::span<const double> row0, std::span<const double> row1,
                            const Mesh& mesh, const SolverConfig& cfg, int d) {
    cfg.validate();
    const int M = mesh.M();
    if (Ld.dim() != d) throw MeshMismatch("propagate: density dimension differs from d");
    if (row0.size() != static_cast<std::size_t>(M * d) || row1.size() != static_cast<std::size_t>(M * d)) {
        throw MeshMismatch("propagate: initial rows must hold M * d values");
    }
    PropagationResult res;
    res.grid = FieldGrid(mesh, d);
    FieldGrid& U = res.grid;
    std::copy(row0.begin(), row0.end(), U.row(0).begin());
    std::copy(row1.begin(), row1.end(), U.row(1).begin());
    res.reports.resize(static_cast<std::size_t>(mesh.N() - 1) * M);

    std::vector<double> previous(M * d);
    for (int i = 1; i < mesh.N(); ++i) {
        auto next = U.row(i + 1);
        for (int j = 0; j < M; ++j) {
            for (int k = 0; k < d; ++k) {
                const double ui = U(i, j, k);
                next[j * d + k] = cfg.initial_guess == GuessStrategy::linear_extrapolation ? 2.0 * ui - U(i - 1, j, k) : ui;
            }
        }
        int sweep = 0;
        for (;;) {
            ++sweep;
            std::copy(next.begin(), next.end(), previous.begin());
            for (int j = 0; j < M; ++j) {
                const Neighbours nb{U.at(i, j), U.at(i, j + 1), U.at(i - 1, j), U.at(i - 1, j + 1), U.at(i, j - 1),
                                    U.at(i + 1, j - 1)};
                std::vector<double> guess(U.at(i + 1, j).begin(), U.at(i + 1, j).end());
                try {
                    NewtonResult r = newton_step_solve(Ld, nb, guess, cfg);
                    std::copy(r.value.begin(), r.value.end(), U.at(i + 1, j).begin());
                    // Keep the report of the last solve that actually iterated.
                    if (sweep == 1 || r.report.iterations > 0) {
                        res.reports[static_cast<std::size_t>(i - 1) * M + j] = std::move(r.report);
                    }
                } catch (const SingularJacobian& e) {
                    rethrow_at(e, i, j);
                } catch (const NoConvergence& e) {
                    rethrow_at(e, i, j);
                } catch (const NumericalError& e) {
                    rethrow_at(e, i, j);
                }
            }
            // The seam value u^{i+1}_{M-1} used at j = 0 is current once no
            // entry moved beyond roundoff in this sweep.
            double change = 0.0, size = 0.0;
            for (int p = 0; p < M * d; ++p) {
                change = std::max(change, std::abs(next[p] - previous[p]));
                size = std::max(size, std::abs(next[p]));
            }
            if (sweep > 1 && change <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, size)) break;
            if (sweep >= cfg.max_row_sweeps) {
                throw NoConvergence("at (i=" + std::to_string(i) + ", j=0): row closure did not settle in " +
                                    std::to_string(cfg.max_row_sweeps) + " sweeps (change " +
                                    std::to_string(change) + ")");
            }
        }
        res.sweeps.push_back(sweep);
    }
    for (const NewtonReport& r : res.reports) {
        res.max_iterations = std::max(res.max_iterations, r.iterations);
        res.max_residual = std::max(res.max_residual, r.final_residual_norm);
        res.max_rho_star = std::max(res.max_rho_star, r.rho_star);
    }
    require_finite(U, "propagate");
    return res;
}

}  // namespace lagfield
