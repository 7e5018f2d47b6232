#include "lagfield/del.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lagfield/errors.hpp"
#include "lagfield/parallel.hpp"

namespace lagfield {

ResidualField::ResidualField(const Mesh& mesh, int d)
    : mesh_(mesh), d_(d), values_(static_cast<std::size_t>(mesh.N() - 1) * mesh.M() * d, 0.0) {}

std::span<const double> ResidualField::at(int i, int j) const {
    const std::size_t off = (static_cast<std::size_t>(i - 1) * mesh_.M() + wrap(j, mesh_.M())) * d_;
    return {values_.data() + off, static_cast<std::size_t>(d_)};
}

std::span<double> ResidualField::at(int i, int j) {
    const std::size_t off = (static_cast<std::size_t>(i - 1) * mesh_.M() + wrap(j, mesh_.M())) * d_;
    return {values_.data() + off, static_cast<std::size_t>(d_)};
}

double ResidualField::max_norm() const {
    double m = 0.0;
    for (std::size_t p = 0; p < values_.size(); p += d_) {
        double s = 0.0;
        for (int k = 0; k < d_; ++k) s += values_[p + k] * values_[p + k];
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

double ResidualField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double ResidualField::sum_squares() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return s;
}

namespace {

void check_interior(const FieldGrid& U, int i) {
    if (i < 1 || i > U.mesh().N() - 1) {
        throw std::out_of_range("DEL time index " + std::to_string(i) + " outside [1, " +
                                std::to_string(U.mesh().N() - 1) + "]");
    }
}

}  // namespace

std::vector<double> del_residual(const DensityModel& Ld, const FieldGrid& U, int i, int j) {
    check_interior(U, i);
    const int d = U.dim();
    if (Ld.dim() != d) throw MeshMismatch("density and grid differ in field dimension");
    std::vector<double> p(3 * d);
    std::vector<double> r(d, 0.0);
    Ld.partials(stencil_at(U, i - 1, j), p);
    for (int k = 0; k < d; ++k) r[k] += p[d + k];
    Ld.partials(stencil_at(U, i, j), p);
    for (int k = 0; k < d; ++k) r[k] += p[k];
    Ld.partials(stencil_at(U, i, j - 1), p);
    for (int k = 0; k < d; ++k) r[k] += p[2 * d + k];
    return r;
}

ResidualField del_field(const DensityModel& Ld, const FieldGrid& U, int threads) {
    const Mesh& mesh = U.mesh();
    const int d = U.dim();
    const int M = mesh.M();
    if (Ld.dim() != d) throw MeshMismatch("density and grid differ in field dimension");

    // Partials of every stencil row 0..N-1, then a fixed-order three-term sum.
    const std::size_t stride = static_cast<std::size_t>(3) * d;
    std::vector<double> P(static_cast<std::size_t>(mesh.N()) * M * stride);
    parallel_for(mesh.N(), threads, [&](int i) {
        for (int j = 0; j < M; ++j) {
            Ld.partials(stencil_at(U, i, j), std::span<double>(P).subspan((static_cast<std::size_t>(i) * M + j) * stride, stride));
        }
    });
    auto part = [&](int i, int j, int slot, int k) {
        return P[(static_cast<std::size_t>(i) * M + wrap(j, M)) * stride + slot * d + k];
    };

    ResidualField R(mesh, d);
    for (int i = 1; i < mesh.N(); ++i) {
        for (int j = 0; j < M; ++j) {
            auto r = R.at(i, j);
            for (int k = 0; k < d; ++k) r[k] = part(i - 1, j, 1, k) + part(i, j, 0, k) + part(i, j - 1, 2, k);
        }
    }
    for (double v : R.values()) {
        if (!std::isfinite(v)) throw NumericalError("del_field: non-finite residual");
    }
    return R;
}

}  // namespace lagfield
