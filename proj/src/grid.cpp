#include "lagfield/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lagfield/errors.hpp"

namespace lagfield {

Mesh::Mesh(double T, double l, int N, int M) : T_(T), l_(l), N_(N), M_(M) {
    if (N < 2 || M < 2) {
        throw InvalidArgument("mesh needs N >= 2 and M >= 2, got N=" + std::to_string(N) +
                              " M=" + std::to_string(M));
    }
    if (!(T > 0.0) || !(l > 0.0) || !std::isfinite(T) || !std::isfinite(l)) {
        throw InvalidArgument("mesh extents T and l must be positive and finite");
    }
    dt_ = T / N;
    dx_ = l / M;
}

Mesh Mesh::from_widths(double T, double l, double dt, double dx) {
    if (!(dt > 0.0) || !(dx > 0.0)) throw InvalidArgument("mesh widths must be positive");
    const auto N = static_cast<int>(std::lround(T / dt));
    const auto M = static_cast<int>(std::lround(l / dx));
    return Mesh(T, l, N, M);
}

Mesh Mesh::with_steps(int N) const { return Mesh(dt_ * N, l_, N, M_); }

bool Mesh::operator==(const Mesh& other) const {
    return N_ == other.N_ && M_ == other.M_ && T_ == other.T_ && l_ == other.l_;
}

FieldGrid::FieldGrid(const Mesh& mesh, int d)
    : mesh_(mesh), d_(d), values_(static_cast<std::size_t>(mesh.N() + 1) * mesh.M() * d, 0.0) {
    if (d < 1) throw InvalidArgument("field dimension must be >= 1");
}

std::size_t FieldGrid::offset(int i, int j) const {
    return (static_cast<std::size_t>(i) * mesh_.M() + wrap(j, mesh_.M())) * d_;
}

std::span<const double> FieldGrid::at(int i, int j) const {
    return {values_.data() + offset(i, j), static_cast<std::size_t>(d_)};
}

std::span<double> FieldGrid::at(int i, int j) {
    return {values_.data() + offset(i, j), static_cast<std::size_t>(d_)};
}

std::span<const double> FieldGrid::row(int i) const {
    return {values_.data() + offset(i, 0), static_cast<std::size_t>(mesh_.M()) * d_};
}

std::span<double> FieldGrid::row(int i) {
    return {values_.data() + offset(i, 0), static_cast<std::size_t>(mesh_.M()) * d_};
}

Stencil stencil_at(const FieldGrid& U, int i, int j) {
    if (i < 0 || i > U.mesh().N() - 1) {
        throw std::out_of_range("stencil time index " + std::to_string(i) + " outside [0, " +
                                std::to_string(U.mesh().N() - 1) + "]");
    }
    return {U.at(i, j), U.at(i + 1, j), U.at(i, j + 1)};
}

double sup_norm_diff(const FieldGrid& U, const FieldGrid& V) {
    if (!(U.mesh() == V.mesh()) || U.dim() != V.dim()) {
        throw MeshMismatch("sup_norm_diff: grids differ in mesh or field dimension");
    }
    double m = 0.0;
    const auto u = U.values();
    const auto v = V.values();
    for (std::size_t k = 0; k < u.size(); ++k) m = std::max(m, std::abs(u[k] - v[k]));
    return m;
}

void require_finite(const FieldGrid& U, const char* context) {
    for (double x : U.values()) {
        if (!std::isfinite(x)) throw NumericalError(std::string(context) + ": non-finite field value");
    }
}

}  // namespace lagfield
