#include <algorithm>
#include <cmath>
#include <random>

#include "lagfield/density.hpp"
#include "lagfield/errors.hpp"

namespace lagfield {

namespace {

constexpr int H = NeuralDensity::kHidden;
constexpr int I = NeuralDensity::kInputs;

struct Layout {
    const double* W1;
    const double* b1;
    const double* W2;
    const double* b2;
    const double* w3;

    explicit Layout(const double* t)
        : W1(t), b1(t + H * I), W2(t + H * I + H), b2(t + H * I + H + H * H), w3(t + H * I + H + H * H + H) {}
};

// Forward pass state with tangents along the three inputs.
struct Forward {
    double h1[H], s1[H], t1[H];  // tanh, tanh', tanh'' of layer 1
    double h2[H], s2[H], t2[H];
    double dz2[I][H];            // d z2 / d x_k
};

void forward_pass(const Layout& p, const double x[I], Forward& f) {
    for (int r = 0; r < H; ++r) {
        double z = p.b1[r];
        for (int k = 0; k < I; ++k) z += p.W1[r * I + k] * x[k];
        const double h = std::tanh(z);
        f.h1[r] = h;
        f.s1[r] = 1.0 - h * h;
        f.t1[r] = -2.0 * h * f.s1[r];
    }
    for (int r = 0; r < H; ++r) {
        double z = p.b2[r];
        double dz[I] = {0.0, 0.0, 0.0};
        for (int q = 0; q < H; ++q) {
            const double w = p.W2[r * H + q];
            z += w * f.h1[q];
            for (int k = 0; k < I; ++k) dz[k] += w * f.s1[q] * p.W1[q * I + k];
        }
        const double h = std::tanh(z);
        f.h2[r] = h;
        f.s2[r] = 1.0 - h * h;
        f.t2[r] = -2.0 * h * f.s2[r];
        for (int k = 0; k < I; ++k) f.dz2[k][r] = dz[k];
    }
}

// Second derivative d2 L / dx_k dx_l given a forward pass.
double second(const Layout& p, const Forward& f, int k, int l) {
    double ddh1[H];
    for (int q = 0; q < H; ++q) ddh1[q] = f.t1[q] * p.W1[q * I + k] * p.W1[q * I + l];
    double out = 0.0;
    for (int r = 0; r < H; ++r) {
        double ddz = 0.0;
        for (int q = 0; q < H; ++q) ddz += p.W2[r * H + q] * ddh1[q];
        out += p.w3[r] * (f.t2[r] * f.dz2[k][r] * f.dz2[l][r] + f.s2[r] * ddz);
    }
    return out;
}

}  // namespace

NeuralDensity::NeuralDensity() : theta_(kParams, 0.0) {}

NeuralDensity::NeuralDensity(std::vector<double> theta) : theta_(std::move(theta)) {
    if (theta_.size() != static_cast<std::size_t>(kParams)) {
        throw InvalidArgument("neural density expects " + std::to_string(kParams) + " parameters, got " +
                              std::to_string(theta_.size()));
    }
}

NeuralDensity NeuralDensity::init(unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> theta(kParams);
    auto fill = [&](std::size_t begin, std::size_t count, int fan_in) {
        const double bound = std::sqrt(1.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t k = 0; k < count; ++k) theta[begin + k] = dist(rng);
    };
    std::size_t off = 0;
    fill(off, H * I, I);
    off += H * I;
    fill(off, H, I);
    off += H;
    fill(off, H * H, H);
    off += H * H;
    fill(off, H, H);
    off += H;
    fill(off, H, H);
    return NeuralDensity(std::move(theta));
}

void NeuralDensity::set_params(std::span<const double> theta) {
    if (theta.size() != theta_.size()) throw InvalidArgument("set_params: wrong parameter count");
    std::copy(theta.begin(), theta.end(), theta_.begin());
}

double NeuralDensity::eval(const Stencil& s) const {
    check_dims(s);
    const Layout p(theta_.data());
    const double x[I] = {s.a[0], s.b[0], s.c[0]};
    double h1[H];
    for (int r = 0; r < H; ++r) {
        double z = p.b1[r];
        for (int k = 0; k < I; ++k) z += p.W1[r * I + k] * x[k];
        h1[r] = std::tanh(z);
    }
    double out = 0.0;
    for (int r = 0; r < H; ++r) {
        double z = p.b2[r];
        for (int q = 0; q < H; ++q) z += p.W2[r * H + q] * h1[q];
        out += p.w3[r] * std::tanh(z);
    }
    return out;
}

NeuralDensity::Jet NeuralDensity::jet(double a, double b, double c) const {
    const Layout p(theta_.data());
    const double x[I] = {a, b, c};
    Forward f;
    forward_pass(p, x, f);
    Jet j{};
    for (int k = 0; k < I; ++k) {
        double g = 0.0;
        for (int r = 0; r < H; ++r) g += p.w3[r] * f.s2[r] * f.dz2[k][r];
        j.g[k] = g;
    }
    j.mixed = second(p, f, 0, 1);
    return j;
}

void NeuralDensity::partials(const Stencil& s, std::span<double> out) const {
    check_dims(s);
    const Jet j = jet(s.a[0], s.b[0], s.c[0]);
    out[0] = j.g[0];
    out[1] = j.g[1];
    out[2] = j.g[2];
}

void NeuralDensity::mixed_ab(const Stencil& s, std::span<double> out) const {
    check_dims(s);
    out[0] = jet(s.a[0], s.b[0], s.c[0]).mixed;
}

void NeuralDensity::hessian(const Stencil& s, std::span<double> out) const {
    check_dims(s);
    const Layout p(theta_.data());
    const double x[I] = {s.a[0], s.b[0], s.c[0]};
    Forward f;
    forward_pass(p, x, f);
    for (int k = 0; k < I; ++k) {
        for (int l = k; l < I; ++l) out[k * I + l] = out[l * I + k] = second(p, f, k, l);
    }
}

NeuralDensity::Jet NeuralDensity::jet_vjp(double a, double b, double c, const double w[4],
                                          std::span<double> grad_theta) const {
    const Layout p(theta_.data());
    const double x[I] = {a, b, c};
    Forward f;
    forward_pass(p, x, f);

    // Mixed (a, b) direction through both layers.
    double ddh1[H];
    for (int q = 0; q < H; ++q) ddh1[q] = f.t1[q] * p.W1[q * I + 0] * p.W1[q * I + 1];
    double ddz2[H];
    for (int r = 0; r < H; ++r) {
        double s = 0.0;
        for (int q = 0; q < H; ++q) s += p.W2[r * H + q] * ddh1[q];
        ddz2[r] = s;
    }

    // phi = w3 . Q with Q = sum_k w_k s2 dz2_k + wA (t2 dz2_0 dz2_1 + s2 ddz2).
    Jet jet{};
    double Q[H];
    for (int r = 0; r < H; ++r) {
        double q = 0.0;
        for (int k = 0; k < I; ++k) {
            const double gk = f.s2[r] * f.dz2[k][r];
            jet.g[k] += p.w3[r] * gk;
            q += w[k] * gk;
        }
        const double mixed = f.t2[r] * f.dz2[0][r] * f.dz2[1][r] + f.s2[r] * ddz2[r];
        jet.mixed += p.w3[r] * mixed;
        Q[r] = q + w[3] * mixed;
    }

    double* gW1 = grad_theta.data();
    double* gb1 = gW1 + H * I;
    double* gW2 = gb1 + H;
    double* gb2 = gW2 + H * H;
    double* gw3 = gb2 + H;

    // Adjoints of layer-2 quantities.
    double bar_z2[H], bar_dz2[I][H], bar_ddz2[H];
    for (int r = 0; r < H; ++r) {
        gw3[r] += Q[r];
        const double qb = p.w3[r];
        double bar_s2 = 0.0;
        for (int k = 0; k < I; ++k) bar_s2 += w[k] * f.dz2[k][r];
        bar_s2 = qb * (bar_s2 + w[3] * ddz2[r]);
        const double bar_t2 = qb * w[3] * f.dz2[0][r] * f.dz2[1][r];
        for (int k = 0; k < I; ++k) bar_dz2[k][r] = qb * w[k] * f.s2[r];
        bar_dz2[0][r] += qb * w[3] * f.t2[r] * f.dz2[1][r];
        bar_dz2[1][r] += qb * w[3] * f.t2[r] * f.dz2[0][r];
        bar_ddz2[r] = qb * w[3] * f.s2[r];
        const double h = f.h2[r];
        const double bar_h2 = bar_s2 * (-2.0 * h) + bar_t2 * (-2.0 + 6.0 * h * h);
        bar_z2[r] = bar_h2 * f.s2[r];
        gb2[r] += bar_z2[r];
    }

    // Through W2: z2 = W2 h1 + b2, dz2_k = W2 dh1_k, ddz2 = W2 ddh1.
    double bar_h1[H] = {}, bar_dh1[I][H] = {}, bar_ddh1[H] = {};
    for (int r = 0; r < H; ++r) {
        for (int q = 0; q < H; ++q) {
            const double W = p.W2[r * H + q];
            double g = bar_z2[r] * f.h1[q] + bar_ddz2[r] * ddh1[q];
            for (int k = 0; k < I; ++k) {
                const double dh1 = f.s1[q] * p.W1[q * I + k];
                g += bar_dz2[k][r] * dh1;
                bar_dh1[k][q] += W * bar_dz2[k][r];
            }
            gW2[r * H + q] += g;
            bar_h1[q] += W * bar_z2[r];
            bar_ddh1[q] += W * bar_ddz2[r];
        }
    }

    // Layer 1: dh1_k = s1 W1[:,k], ddh1 = t1 W1[:,0] W1[:,1], h1 = tanh(W1 x + b1).
    for (int q = 0; q < H; ++q) {
        const double w0 = p.W1[q * I + 0];
        const double w1 = p.W1[q * I + 1];
        double bar_s1 = 0.0;
        for (int k = 0; k < I; ++k) {
            bar_s1 += bar_dh1[k][q] * p.W1[q * I + k];
            gW1[q * I + k] += bar_dh1[k][q] * f.s1[q];
        }
        const double bar_t1 = bar_ddh1[q] * w0 * w1;
        gW1[q * I + 0] += bar_ddh1[q] * f.t1[q] * w1;
        gW1[q * I + 1] += bar_ddh1[q] * f.t1[q] * w0;
        const double h = f.h1[q];
        const double bh = bar_h1[q] + bar_s1 * (-2.0 * h) + bar_t1 * (-2.0 + 6.0 * h * h);
        const double bz = bh * f.s1[q];
        gb1[q] += bz;
        for (int k = 0; k < I; ++k) gW1[q * I + k] += bz * x[k];
    }
    return jet;
}

}  // namespace lagfield
