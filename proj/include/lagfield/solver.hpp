#pragma once

#include <span>
#include <vector>

#include "lagfield/density.hpp"
#include "lagfield/grid.hpp"

namespace lagfield {

enum class GuessStrategy { previous_value, linear_extrapolation };

struct SolverConfig {
    /// Newton stops once the residual norm is at most
    /// residual_tolerance * max(1, residual_scale), where residual_scale is the
    /// summed norm of the three partial-gradient terms at the iterate. With
    /// terms of order one this is the plain absolute tolerance.
    double residual_tolerance = 1e-12;
    int max_iterations = 50;
    GuessStrategy initial_guess = GuessStrategy::previous_value;
    /// Row-closure sweeps (see propagate).
    int max_row_sweeps = 100;

    void validate() const;
};

struct NewtonReport {
    int iterations = 0;
    double final_residual_norm = 0.0;
    double tolerance_used = 0.0;
    /// Spectral norm of the inverse d12 block at the accepted solution.
    double rho_star = 0.0;
    /// Residual norm before each update, then after the last one.
    std::vector<double> per_iteration_residuals;
    /// Iterates x_0 (the guess), x_1, ..., flattened (d values each).
    std::vector<double> iterates;
};

/// The six known values entering DEL^i_j as a function of u^{i+1}_j.
struct Neighbours {
    std::span<const double> u_i_j;       // u^i_j
    std::span<const double> u_i_jp1;     // u^i_{j+1}
    std::span<const double> u_im1_j;     // u^{i-1}_j
    std::span<const double> u_im1_jp1;   // u^{i-1}_{j+1}
    std::span<const double> u_i_jm1;     // u^i_{j-1}
    std::span<const double> u_ip1_jm1;   // u^{i+1}_{j-1}
};

struct NewtonResult {
    std::vector<double> value;
    NewtonReport report;
};

/// Solves DEL^i_j = 0 for u^{i+1}_j. The Jacobian is the d12 block at
/// (u^i_j, x, u^i_{j+1}). Throws SingularJacobian or NoConvergence.
NewtonResult newton_step_solve(const DensityModel& Ld, const Neighbours& nb, std::span<const double> guess,
                               const SolverConfig& cfg);

struct PropagationResult {
    FieldGrid grid;
    /// Report of the last iterating solve at every (i, j), i = 2..N, row-major.
    std::vector<NewtonReport> reports;
    /// Row-closure sweeps used for each computed row.
    std::vector<int> sweeps;
    int max_iterations = 0;
    double max_residual = 0.0;
    double max_rho_star = 0.0;

    const NewtonReport& report(int i, int j) const { return reports[static_cast<std::size_t>(i - 2) * grid.cols() + j]; }
};

/// Computes rows 2..N from rows 0 and 1 by Newton solves swept over j.
///
/// DEL^i_0 involves u^{i+1}_{M-1}, which the sweep has not produced yet. The
/// first sweep uses the initial guess for it; further sweeps reuse the latest
/// row until no entry changes by more than a few ulps, so the final row
/// satisfies every DEL equation with its final neighbours. Errors carry the
/// failing (i, j).
PropagationResult propagate(const DensityModel& Ld, std::span<const double> row0, std::span<const double> row1,
                            const Mesh& mesh, const SolverConfig& cfg, int d = 1);

}  // namespace lagfield
