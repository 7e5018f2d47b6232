#include <doctest.h>

#include <random>

#include "lagfield/density.hpp"
#include "lagfield/errors.hpp"
#include "oracles.hpp"

using namespace lagfield;
using D2 = ad::Dual2<double>;

namespace {

std::vector<double> pack(const Stencil& s) {
    std::vector<double> x;
    x.insert(x.end(), s.a.begin(), s.a.end());
    x.insert(x.end(), s.b.begin(), s.b.end());
    x.insert(x.end(), s.c.begin(), s.c.end());
    return x;
}

double eval_packed(const DensityModel& L, const std::vector<double>& x) {
    const std::size_t d = x.size() / 3;
    return L.eval({std::span(x).subspan(0, d), std::span(x).subspan(d, d), std::span(x).subspan(2 * d, d)});
}

std::vector<double> partials_packed(const DensityModel& L, const std::vector<double>& x) {
    const std::size_t d = x.size() / 3;
    std::vector<double> p(3 * d);
    L.partials({std::span(x).subspan(0, d), std::span(x).subspan(d, d), std::span(x).subspan(2 * d, d)}, p);
    return p;
}

// d1/d2/d3 against differences of eval; d12 and the Hessian against
// differences of the partials.
void check_against_differences(const DensityModel& L, const std::vector<double>& x, double rel_first,
                               double rel_second) {
    const std::size_t n = x.size();
    const std::size_t d = n / 3;
    const auto p = partials_packed(L, x);
    std::vector<double> H(n * n), A(d * d);
    const Stencil s{std::span(x).subspan(0, d), std::span(x).subspan(d, d), std::span(x).subspan(2 * d, d)};
    L.hessian(s, H);
    L.mixed_ab(s, A);
    for (std::size_t k = 0; k < n; ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
        const double fd = oracle::central_diff([&](const std::vector<double>& y) { return eval_packed(L, y); }, x, k, h);
        CHECK(oracle::close(p[k], fd, rel_first, 1e-7));
        for (std::size_t l = 0; l < n; ++l) {
            const double fdh = oracle::central_diff(
                [&](const std::vector<double>& y) { return partials_packed(L, y)[l]; }, x, k, h);
            CHECK(oracle::close(H[l * n + k], fdh, rel_second, 1e-6));
        }
    }
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            const double h = 1e-5 * std::max(1.0, std::abs(x[d + c]));
            const double fd = oracle::central_diff(
                [&](const std::vector<double>& y) { return partials_packed(L, y)[r]; }, x, d + c, h);
            CHECK(oracle::close(A[r * d + c], fd, rel_second, 1e-6));
            CHECK(A[r * d + c] == H[r * n + d + c]);
        }
    }
}

}  // namespace

TEST_CASE("wave density values") {
    const double dt = 0.025, dx = 0.05;
    const WaveDensity L(dt, dx);
    const double zero[] = {0.0}, one_step[] = {dt};
    CHECK(L.eval({zero, zero, zero}) == 0.0);
    CHECK(L.eval({zero, one_step, zero}) == doctest::Approx(0.5).epsilon(1e-15));
    const double a[] = {0.3}, b[] = {-0.2}, c[] = {0.9};
    const double expected = 0.5 * ((b[0] - a[0]) / dt) * ((b[0] - a[0]) / dt) -
                            0.5 * ((c[0] - a[0]) / dx) * ((c[0] - a[0]) / dx) - 0.5 * a[0] * a[0];
    CHECK(L.eval({a, b, c}) == doctest::Approx(expected).epsilon(1e-14));
    const double a2[] = {0.3, 1.0};
    CHECK_THROWS_AS(L.eval({a2, b, c}), MeshMismatch);
}

TEST_CASE("wave density mixed block is -1/dt^2 I") {
    const double dt = 0.025;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int d : {1, 3}) {
        const WaveDensity L(dt, 0.05, d, Potential::quartic());
        std::vector<double> x(3 * d);
        for (double& v : x) v = u(rng);
        const Stencil s{std::span(x).subspan(0, d), std::span(x).subspan(d, d), std::span(x).subspan(2 * d, d)};
        const auto A = L.d12(s);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) CHECK(A[r * d + c] == (r == c ? -1.0 / (dt * dt) : 0.0));
    }
}

TEST_CASE("analytic densities agree with finite differences") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SUBCASE("wave, quadratic, d = 1") {
        for (int t = 0; t < 5; ++t) check_against_differences(WaveDensity(0.1, 0.2), {u(rng), u(rng), u(rng)}, 1e-6, 1e-5);
    }
    SUBCASE("wave, quartic, d = 2") {
        const WaveDensity L(0.1, 0.2, 2, Potential::quartic());
        for (int t = 0; t < 5; ++t) {
            std::vector<double> x(6);
            for (double& v : x) v = u(rng);
            check_against_differences(L, x, 1e-6, 1e-5);
        }
    }
    SUBCASE("neural") {
        const NeuralDensity L = NeuralDensity::init(2);
        for (int t = 0; t < 10; ++t) check_against_differences(L, {2 * u(rng), 2 * u(rng), 2 * u(rng)}, 1e-6, 1e-5);
    }
    SUBCASE("expression with coupling between b and c") {
        const ExpressionDensity L(1, [](std::span<const D2> a, std::span<const D2> b, std::span<const D2> c) {
            return ad::tanh(a[0] * b[0]) + b[0] * c[0] * c[0] + ad::exp(a[0] - c[0]) / (b[0] * b[0] + 1.0);
        });
        for (int t = 0; t < 5; ++t) check_against_differences(L, {u(rng), u(rng), u(rng)}, 1e-6, 1e-5);
    }
}

TEST_CASE("neural density generic route equals the analytic kernels") {
    const NeuralDensity L = NeuralDensity::init(17);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 20; ++t) {
        const double x[] = {u(rng), u(rng), u(rng)};
        const auto seeds = ad::seed_all<double>(x);
        const D2 r = NeuralDensity::forward<double>(L.params(), seeds);
        const Stencil s{std::span(x, 1), std::span(x + 1, 1), std::span(x + 2, 1)};
        CHECK(r.value == doctest::Approx(L.eval(s)).epsilon(1e-14));
        std::vector<double> H(9);
        L.hessian(s, H);
        const auto j = L.jet(x[0], x[1], x[2]);
        for (int k = 0; k < 3; ++k) {
            CHECK(r.grad[k] == doctest::Approx(j.g[k]).epsilon(1e-12));
            for (int l = 0; l < 3; ++l) CHECK(r.h(k, l) == doctest::Approx(H[k * 3 + l]).epsilon(1e-12));
        }
        CHECK(j.mixed == doctest::Approx(H[1]).epsilon(1e-14));
    }
}

TEST_CASE("neural initialisation") {
    const NeuralDensity a = NeuralDensity::init(0), b = NeuralDensity::init(0), c = NeuralDensity::init(1);
    CHECK(a.params().size() == 160u);
    CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
    CHECK_FALSE(std::equal(a.params().begin(), a.params().end(), c.params().begin()));
    // Layer-wise bound sqrt(1/fan_in).
    for (int k = 0; k < 40; ++k) CHECK(std::abs(a.params()[k]) <= std::sqrt(1.0 / 3.0));
    for (int k = 40; k < 160; ++k) CHECK(std::abs(a.params()[k]) <= std::sqrt(1.0 / 10.0));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 100; ++t) {
        const double x[] = {u(rng), u(rng), u(rng)};
        const double v = a.eval({std::span(x, 1), std::span(x + 1, 1), std::span(x + 2, 1)});
        CHECK(std::isfinite(v));
        CHECK(std::abs(v) <= 10.0);
    }
    CHECK_THROWS_AS(NeuralDensity(std::vector<double>(10)), InvalidArgument);
}

TEST_CASE("gauge wrap") {
    const auto base = std::make_shared<WaveDensity>(0.1, 0.2);
    CHECK_THROWS_AS(gauge_wrap(base, 0.0), InvalidArgument);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto id = gauge_wrap(base, 1.0);
    const auto chi1 = [](std::span<const D2> v) { return ad::pow(v[0], 3); };
    const auto chi2 = [](std::span<const D2> v) { return v[0] * v[0] * 0.5 - v[0] * 2.0 + 1.0; };
    const auto chi3 = [](std::span<const D2> v) { return v[0]; };
    const auto g = gauge_wrap(base, 2.5, chi1, chi2, chi3);
    for (int t = 0; t < 10; ++t) {
        const double a[] = {u(rng)}, b[] = {u(rng)}, c[] = {u(rng)};
        CHECK(id->eval({a, b, c}) == base->eval({a, b, c}));
        auto cube = [](double x) { return x * x * x; };
        auto quad = [](double x) { return x * x * 0.5 - x * 2.0 + 1.0; };
        const double expected = 2.5 * base->eval({a, b, c}) + cube(a[0]) - cube(b[0]) + quad(a[0]) - quad(c[0]) + b[0] - c[0];
        CHECK(g->eval({a, b, c}) == doctest::Approx(expected).epsilon(1e-13));
    }
    check_against_differences(*g, {0.3, -0.4, 0.8}, 1e-6, 1e-5);
}

TEST_CASE("constant density") {
    const auto L = make_constant_density(2, 4.0);
    const double a[] = {1.0, 2.0};
    CHECK(L->eval({a, a, a}) == 4.0);
    for (double v : L->d12({a, a, a})) CHECK(v == 0.0);
}

TEST_CASE("potentials by name") {
    CHECK(Potential::by_name("quadratic").name == "quadratic");
    CHECK(Potential::by_name("quartic").name == "quartic");
    CHECK(Potential::by_name("zero").name == "zero");
    CHECK_THROWS_AS(Potential::by_name("cubic"), InvalidArgument);
}
