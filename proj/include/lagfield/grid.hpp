#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lagfield {

/// Uniform space-time mesh on [0,T] x [0,l) with periodic spatial boundary.
///
/// Rows are indexed by time i = 0..N, columns by space j = 0..M-1.
class Mesh {
public:
    Mesh() = default;

    /// Throws InvalidArgument unless N >= 2, M >= 2, T > 0 and l > 0.
    Mesh(double T, double l, int N, int M);

    /// Mesh with the given widths; N and M are rounded from T/dt and l/dx.
    static Mesh from_widths(double T, double l, double dt, double dx);

    double T() const { return T_; }
    double l() const { return l_; }
    int N() const { return N_; }
    int M() const { return M_; }
    double dt() const { return dt_; }
    double dx() const { return dx_; }

    /// Same spacing and period, N steps (T rescaled to N * dt).
    Mesh with_steps(int N) const;

    bool operator==(const Mesh& other) const;

private:
    double T_ = 1.0;
    double l_ = 1.0;
    int N_ = 2;
    int M_ = 2;
    double dt_ = 0.5;
    double dx_ = 0.5;
};

/// The triple (u^i_j, u^{i+1}_j, u^i_{j+1}) fed to a discrete Lagrangian.
/// Non-owning; the viewed storage must outlive the stencil.
struct Stencil {
    std::span<const double> a;
    std::span<const double> b;
    std::span<const double> c;

    std::size_t dim() const { return a.size(); }
};

/// Field values u^i_j in R^d on all (N+1) x M mesh points, row-major in time.
class FieldGrid {
public:
    FieldGrid() = default;
    FieldGrid(const Mesh& mesh, int d);

    const Mesh& mesh() const { return mesh_; }
    int dim() const { return d_; }
    int rows() const { return mesh_.N() + 1; }
    int cols() const { return mesh_.M(); }

    /// Value at (i, j); j is taken modulo M.
    std::span<const double> at(int i, int j) const;
    std::span<double> at(int i, int j);

    double& operator()(int i, int j, int k = 0) { return at(i, j)[k]; }
    double operator()(int i, int j, int k = 0) const { return at(i, j)[k]; }

    /// Contiguous row i (M * d values).
    std::span<const double> row(int i) const;
    std::span<double> row(int i);

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    bool operator==(const FieldGrid& other) const = default;

private:
    std::size_t offset(int i, int j) const;

    Mesh mesh_;
    int d_ = 1;
    std::vector<double> values_;
};

/// Wraps j into [0, M).
inline int wrap(int j, int M) {
    const int r = j % M;
    return r < 0 ? r + M : r;
}

/// (u^i_j, u^{i+1}_j, u^i_{j+1 mod M}); requires 0 <= i <= N-1.
Stencil stencil_at(const FieldGrid& U, int i, int j);

/// max |U - V| over all entries; throws MeshMismatch on shape disagreement.
double sup_norm_diff(const FieldGrid& U, const FieldGrid& V);

/// Throws NumericalError if any entry is NaN or infinite.
void require_finite(const FieldGrid& U, const char* context);

}  // namespace lagfield
