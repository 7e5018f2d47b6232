#include "lagfield/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lagfield/errors.hpp"

namespace lagfield::linalg {

namespace {

int dim_of(std::span<const double> A) {
    const auto d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(A.size()))));
    if (static_cast<std::size_t>(d) * d != A.size()) throw InvalidArgument("matrix is not square");
    return d;
}

std::vector<double> gram(std::span<const double> A, int d) {
    std::vector<double> G(static_cast<std::size_t>(d) * d, 0.0);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) s += A[k * d + r] * A[k * d + c];
            G[r * d + c] = s;
        }
    }
    return G;
}

}  // namespace

std::vector<double> solve(std::span<const double> A, std::span<const double> b) {
    const int d = dim_of(A);
    if (static_cast<int>(b.size()) != d) throw InvalidArgument("solve: dimension mismatch");
    std::vector<double> lu(A.begin(), A.end());
    std::vector<double> x(b.begin(), b.end());
    double scale = 0.0;
    for (double v : lu) scale = std::max(scale, std::abs(v));
    const double tiny = scale * d * std::numeric_limits<double>::epsilon();
    for (int k = 0; k < d; ++k) {
        int p = k;
        for (int r = k + 1; r < d; ++r) {
            if (std::abs(lu[r * d + k]) > std::abs(lu[p * d + k])) p = r;
        }
        const double pivot = lu[p * d + k];
        if (!(std::abs(pivot) > tiny)) throw SingularJacobian("matrix is singular to working precision");
        if (p != k) {
            for (int c = 0; c < d; ++c) std::swap(lu[k * d + c], lu[p * d + c]);
            std::swap(x[k], x[p]);
        }
        for (int r = k + 1; r < d; ++r) {
            const double f = lu[r * d + k] / pivot;
            for (int c = k; c < d; ++c) lu[r * d + c] -= f * lu[k * d + c];
            x[r] -= f * x[k];
        }
    }
    for (int k = d - 1; k >= 0; --k) {
        double s = x[k];
        for (int c = k + 1; c < d; ++c) s -= lu[k * d + c] * x[c];
        x[k] = s / lu[k * d + k];
    }
    return x;
}

double min_singular_value_sq(std::span<const double> A, int d) {
    if (static_cast<int>(A.size()) != d * d) throw InvalidArgument("min_singular_value_sq: bad matrix size");
    if (d == 1) return A[0] * A[0];
    const auto G = gram(A, d);
    if (d == 2) {
        // Eigenvalues of [[p, q], [q, r]]; the smaller one via det / larger to
        // avoid cancellation.
        const double p = G[0], q = G[1], r = G[3];
        const double half_tr = 0.5 * (p + r);
        const double disc = std::hypot(0.5 * (p - r), q);
        const double big = half_tr + disc;
        if (big <= 0.0) return 0.0;
        const double det = A[0] * A[3] - A[1] * A[2];
        return std::max(0.0, det * det / big);
    }

    // Inverse iteration on G: x <- G^{-1} x / |G^{-1} x| converges to the
    // eigenvector of the smallest eigenvalue; the Rayleigh quotient gives it.
    std::vector<double> x(d, 1.0 / std::sqrt(static_cast<double>(d)));
    double lambda = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 500; ++it) {
        std::vector<double> y;
        try {
            y = solve(G, x);
        } catch (const SingularJacobian&) {
            return 0.0;
        }
        const double ny = norm2(y);
        if (!(ny > 0.0) || !std::isfinite(ny)) return 0.0;
        for (int k = 0; k < d; ++k) y[k] /= ny;
        double rq = 0.0;
        for (int r = 0; r < d; ++r) {
            double s = 0.0;
            for (int c = 0; c < d; ++c) s += G[r * d + c] * y[c];
            rq += y[r] * s;
        }
        x = std::move(y);
        if (std::abs(rq - lambda) <= 1e-10 * std::abs(rq)) return std::max(rq, 0.0);
        lambda = rq;
    }
    return std::max(lambda, 0.0);
}

double inverse_spectral_norm(std::span<const double> A, int d) {
    const double s2 = min_singular_value_sq(A, d);
    return s2 > 0.0 ? 1.0 / std::sqrt(s2) : std::numeric_limits<double>::infinity();
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace lagfield::linalg
