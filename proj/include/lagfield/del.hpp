#pragma once

#include <span>
#include <vector>

#include "lagfield/density.hpp"
#include "lagfield/grid.hpp"

namespace lagfield {

/// Discrete Euler-Lagrange residuals DEL(L_d)^i_j(U) at interior rows
/// i = 1..N-1, all j.
class ResidualField {
public:
    ResidualField() = default;
    ResidualField(const Mesh& mesh, int d);

    const Mesh& mesh() const { return mesh_; }
    int dim() const { return d_; }

    /// Residual at interior row i (1 <= i <= N-1), column j mod M.
    std::span<const double> at(int i, int j) const;
    std::span<double> at(int i, int j);

    std::span<const double> values() const { return values_; }

    /// Largest Euclidean norm of a single residual vector.
    double max_norm() const;
    /// Largest absolute component.
    double max_abs() const;
    /// Sum of squared Euclidean norms.
    double sum_squares() const;

    bool operator==(const ResidualField& other) const = default;

private:
    Mesh mesh_;
    int d_ = 1;
    std::vector<double> values_;
};

/// d2 L(u^{i-1}_j, u^i_j, u^{i-1}_{j+1}) + d1 L(u^i_j, u^{i+1}_j, u^i_{j+1})
///   + d3 L(u^i_{j-1}, u^{i+1}_{j-1}, u^i_j), the derivative of the action with
/// respect to u^i_j (without the dt dx prefactor). Requires 1 <= i <= N-1.
std::vector<double> del_residual(const DensityModel& Ld, const FieldGrid& U, int i, int j);

/// Residuals at every interior point. Rows may be evaluated on `threads`
/// workers; the result is bitwise independent of the thread count.
ResidualField del_field(const DensityModel& Ld, const FieldGrid& U, int threads = 1);

}  // namespace lagfield
