#include <doctest.h>

#include <random>

#include "lagfield/autodiff.hpp"
#include "lagfield/density.hpp"
#include "lagfield/train.hpp"
#include "oracles.hpp"

using namespace lagfield;
using ad::Dual2;
using ad::Var;

TEST_CASE("grad_hess of simple functions") {
    {
        const double x[] = {3.0};
        const auto r = ad::grad_hess([](std::span<const Dual2<double>> v) { return v[0] * v[0]; }, x);
        CHECK(r.value == 9.0);
        CHECK(r.gradient[0] == 6.0);
        CHECK(r.hessian[0] == 2.0);
    }
    {
        const double x[] = {0.0, 0.0};
        const auto r = ad::grad_hess([](std::span<const Dual2<double>> v) { return ad::tanh(v[0] * v[1]); }, x);
        CHECK(r.value == 0.0);
        CHECK(r.gradient[0] == 0.0);
        CHECK(r.gradient[1] == 0.0);
        CHECK(r.hessian[0] == 0.0);
        CHECK(r.hessian[1] == 1.0);
        CHECK(r.hessian[2] == 1.0);
        CHECK(r.hessian[3] == 0.0);
    }
}

TEST_CASE("grad_hess rejects non-finite results") {
    const double x[] = {0.0};
    CHECK_THROWS_AS(ad::grad_hess([](std::span<const Dual2<double>> v) { return 1.0 / v[0]; }, x), NumericalError);
}

namespace {

// Random 3-input MLP with one tanh hidden layer plus exp and division, so
// every primitive appears.
struct SmallNet {
    double W[5][3], b[5], w[5];
    explicit SmallNet(std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& r : W)
            for (double& v : r) v = u(rng);
        for (double& v : b) v = u(rng);
        for (double& v : w) v = u(rng);
    }
    template <class X>
    X operator()(std::span<const X> x) const {
        X out{};
        for (int r = 0; r < 5; ++r) {
            X z = x[0] * W[r][0] + x[1] * W[r][1] + x[2] * W[r][2] + b[r];
            out = r == 0 ? ad::tanh(z) * w[r] : out + ad::tanh(z) * w[r];
        }
        return out + ad::exp(x[0] * 0.3) / (x[1] * x[1] + 2.0) + ad::pow(x[2], 3) * 0.1;
    }
    double plain(const std::vector<double>& x) const {
        double out = 0.0;
        for (int r = 0; r < 5; ++r) out += std::tanh(x[0] * W[r][0] + x[1] * W[r][1] + x[2] * W[r][2] + b[r]) * w[r];
        return out + std::exp(x[0] * 0.3) / (x[1] * x[1] + 2.0) + std::pow(x[2], 3) * 0.1;
    }
};

}  // namespace

TEST_CASE("grad_hess matches central differences on random networks") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 10; ++trial) {
        const SmallNet net(rng);
        std::vector<double> x = {u(rng), u(rng), u(rng)};
        const auto r = ad::grad_hess([&](std::span<const Dual2<double>> v) { return net(v); }, x);
        CHECK(r.value == doctest::Approx(net.plain(x)).epsilon(1e-14));  // value slot is plain arithmetic
        const double h = 1e-4;
        for (std::size_t k = 0; k < 3; ++k) {
            const double fd = oracle::central_diff([&](const std::vector<double>& y) { return net.plain(y); }, x, k, h);
            CHECK(oracle::close(r.gradient[k], fd, 1e-6, 1e-9));
            for (std::size_t l = 0; l < 3; ++l) {
                const double fdh = oracle::central_diff(
                    [&](const std::vector<double>& y) {
                        return ad::grad_hess([&](std::span<const Dual2<double>> v) { return net(v); }, y).gradient[l];
                    },
                    x, k, h);
                CHECK(oracle::close(r.hessian[k * 3 + l], fdh, 1e-6, 1e-9));
                CHECK(r.hessian[k * 3 + l] == r.hessian[l * 3 + k]);
            }
        }
    }
}

TEST_CASE("tape replay reproduces the forward value") {
    ad::Tape tape;
    std::vector<Var> x = {tape.variable(0.3), tape.variable(-1.2)};
    const Var y = ad::tanh(x[0] * x[1] + 2.0) / ad::exp(x[1]) - ad::pow(x[0], 3);
    const double v0 = y.value();
    const double leaves[] = {0.3, -1.2};
    CHECK(tape.replay(leaves, y) == v0);
    const double other[] = {0.5, 0.1};
    const double expected = std::tanh(0.5 * 0.1 + 2.0) / std::exp(0.1) - std::pow(0.5, 3);
    CHECK(tape.replay(other, y) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("param_grad of a quadratic") {
    const std::vector<double> theta = {1.0, -2.0, 0.5};
    const auto r = ad::param_grad(
        [](std::span<const Var> t) {
            Var s(0.0);
            for (const Var& v : t) s += v * v;
            return s;
        },
        theta);
    CHECK(r.value == doctest::Approx(5.25));
    for (std::size_t k = 0; k < theta.size(); ++k) CHECK(r.gradient[k] == 2.0 * theta[k]);
}

namespace {

// One grid with two interior rows, small enough for a full FD sweep.
FieldGrid toy_grid(unsigned seed) {
    std::mt19937_64 rng(seed);
    return oracle::random_grid(Mesh(0.075, 0.2, 3, 4), 1, rng, 0.8);
}

double fd_total(const std::vector<double>& theta, std::span<const FieldGrid> data, double rw) {
    return neural_loss_grad(NeuralDensity(theta), data, rw, 1e-8, Reduction::sum).total;
}

}  // namespace

TEST_CASE("param_grad through second stencil derivatives matches differences on all 160 parameters") {
    const NeuralDensity nd = NeuralDensity::init(5);
    const std::vector<FieldGrid> data = {toy_grid(1)};
    const std::vector<double> theta(nd.params().begin(), nd.params().end());

    SUBCASE("l_DEL on the stencil rows") {
        const LossGrad taped = neural_loss_grad_taped(nd, data, 0.0, 1e-8, Reduction::sum);
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double fd = oracle::central_diff([&](const std::vector<double>& t) { return fd_total(t, data, 0.0); },
                                                   theta, k, 1e-6);
            CHECK(oracle::close(taped.gradient[k], fd, 1e-5, 1e-8));
        }
    }
    SUBCASE("l_reg summands (inverse squared second derivative)") {
        const LossGrad taped = neural_loss_grad_taped(nd, data, 1.0, 1e-8, Reduction::sum);
        const LossGrad del_only = neural_loss_grad_taped(nd, data, 0.0, 1e-8, Reduction::sum);
        for (std::size_t k = 0; k < theta.size(); ++k) {
            auto reg = [&](const std::vector<double>& t) { return fd_total(t, data, 1.0) - fd_total(t, data, 0.0); };
            const double fd = oracle::central_diff(reg, theta, k, 1e-6);
            CHECK(oracle::close(taped.gradient[k] - del_only.gradient[k], fd, 1e-5, 1e-8));
        }
    }
}

TEST_CASE("Dual2 Hessians stay symmetric") {
    std::mt19937_64 rng(2);
    const SmallNet net(rng);
    const double x[] = {0.4, -0.7, 1.1};
    const auto r = ad::grad_hess([&](std::span<const Dual2<double>> v) { return net(v) * net(v) / (net(v) + 3.0); }, x);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            CHECK(std::abs(r.hessian[k * 3 + l] - r.hessian[l * 3 + k]) <= 1e-12 * std::abs(r.hessian[k * 3 + l]));
}
