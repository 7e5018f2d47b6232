#pragma once

#include <span>
#include <vector>

// Small dense linear algebra on row-major d x d matrices (d is the field
// dimension, at most a handful).
namespace lagfield::linalg {

/// Solves A x = b by LU with partial pivoting. Throws SingularJacobian when a
/// pivot is zero or negligible relative to the largest entry of A.
std::vector<double> solve(std::span<const double> A, std::span<const double> b);

/// Smallest eigenvalue of the symmetric positive semi-definite A^T A, i.e. the
/// squared smallest singular value of A. Closed form for d <= 2, inverse
/// iteration (relative tolerance 1e-10) for d >= 3. Returns 0 for singular A.
double min_singular_value_sq(std::span<const double> A, int d);

/// Spectral norm of A^{-1}, i.e. 1 / sigma_min(A); +inf for singular A.
double inverse_spectral_norm(std::span<const double> A, int d);

/// Euclidean norm.
double norm2(std::span<const double> x);

}  // namespace lagfield::linalg
