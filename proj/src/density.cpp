#include "lagfield/density.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lagfield/errors.hpp"

namespace lagfield {

void DensityModel::check_dims(const Stencil& s) const {
    const auto d = static_cast<std::size_t>(dim());
    if (s.a.size() != d || s.b.size() != d || s.c.size() != d) {
        throw MeshMismatch(name() + " density: stencil dimension does not match field dimension " +
                           std::to_string(d));
    }
}

std::vector<double> DensityModel::d1(const Stencil& s) const {
    std::vector<double> p(3 * dim());
    partials(s, p);
    return {p.begin(), p.begin() + dim()};
}

std::vector<double> DensityModel::d2(const Stencil& s) const {
    std::vector<double> p(3 * dim());
    partials(s, p);
    return {p.begin() + dim(), p.begin() + 2 * dim()};
}

std::vector<double> DensityModel::d3(const Stencil& s) const {
    std::vector<double> p(3 * dim());
    partials(s, p);
    return {p.begin() + 2 * dim(), p.end()};
}

std::vector<double> DensityModel::d12(const Stencil& s) const {
    std::vector<double> m(dim() * dim());
    mixed_ab(s, m);
    return m;
}

std::vector<double> DensityModel::hessian(const Stencil& s) const {
    std::vector<double> h(9 * dim() * dim());
    hessian(s, h);
    return h;
}

// ---------------------------------------------------------------------------
// Potentials

Potential Potential::quadratic() {
    return {[](std::span<const double> u) {
                double v = 0.0;
                for (double x : u) v += 0.5 * x * x;
                return v;
            },
            [](std::span<const double> u, std::span<double> g) { std::copy(u.begin(), u.end(), g.begin()); },
            [](std::span<const double> u, std::span<double> h) {
                const std::size_t d = u.size();
                std::fill(h.begin(), h.end(), 0.0);
                for (std::size_t k = 0; k < d; ++k) h[k * d + k] = 1.0;
            },
            "quadratic"};
}

Potential Potential::quartic() {
    return {[](std::span<const double> u) {
                double v = 0.0;
                for (double x : u) v += 0.25 * x * x * x * x;
                return v;
            },
            [](std::span<const double> u, std::span<double> g) {
                for (std::size_t k = 0; k < u.size(); ++k) g[k] = u[k] * u[k] * u[k];
            },
            [](std::span<const double> u, std::span<double> h) {
                const std::size_t d = u.size();
                std::fill(h.begin(), h.end(), 0.0);
                for (std::size_t k = 0; k < d; ++k) h[k * d + k] = 3.0 * u[k] * u[k];
            },
            "quartic"};
}

Potential Potential::zero() {
    return {[](std::span<const double>) { return 0.0; },
            [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); },
            [](std::span<const double>, std::span<double> h) { std::fill(h.begin(), h.end(), 0.0); },
            "zero"};
}

Potential Potential::by_name(const std::string& name) {
    if (name == "quadratic") return quadratic();
    if (name == "quartic") return quartic();
    if (name == "zero") return zero();
    throw InvalidArgument("unknown potential '" + name + "'");
}

// ---------------------------------------------------------------------------
// WaveDensity

WaveDensity::WaveDensity(double dt, double dx, int d, Potential V) : dt_(dt), dx_(dx), d_(d), V_(std::move(V)) {
    if (!(dt > 0.0) || !(dx > 0.0)) throw InvalidArgument("wave density needs positive mesh widths");
    if (d < 1) throw InvalidArgument("field dimension must be >= 1");
    if (!V_.value || !V_.gradient) throw InvalidArgument("wave density needs V and grad V");
}

double WaveDensity::eval(const Stencil& s) const {
    check_dims(s);
    double kinetic = 0.0, strain = 0.0;
    for (int k = 0; k < d_; ++k) {
        const double vt = (s.b[k] - s.a[k]) / dt_;
        const double vx = (s.c[k] - s.a[k]) / dx_;
        kinetic += vt * vt;
        strain += vx * vx;
    }
    return 0.5 * kinetic - 0.5 * strain - V_.value(s.a);
}

void WaveDensity::partials(const Stencil& s, std::span<double> out) const {
    check_dims(s);
    const double it2 = 1.0 / (dt_ * dt_);
    const double ix2 = 1.0 / (dx_ * dx_);
    std::span<double> gv = out.subspan(0, d_);
    V_.gradient(s.a, gv);
    for (int k = 0; k < d_; ++k) {
        const double db = (s.b[k] - s.a[k]) * it2;
        const double dc = (s.c[k] - s.a[k]) * ix2;
        out[k] = -db + dc - gv[k];
        out[d_ + k] = db;
        out[2 * d_ + k] = -dc;
    }
}

void WaveDensity::mixed_ab(const Stencil& s, std::span<double> out) const {
    check_dims(s);
    std::fill(out.begin(), out.end(), 0.0);
    for (int k = 0; k < d_; ++k) out[k * d_ + k] = -1.0 / (dt_ * dt_);
}

void WaveDensity::hessian(const Stencil& s, std::span<double> out) const {
    check_dims(s);
    if (!V_.hessian) throw InvalidArgument("wave density: potential has no Hessian");
    const int n = 3 * d_;
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> hv(d_ * d_);
    V_.hessian(s.a, hv);
    const double it2 = 1.0 / (dt_ * dt_);
    const double ix2 = 1.0 / (dx_ * dx_);
    auto at = [&](int blk_r, int blk_c, int r, int c) -> double& {
        return out[(blk_r * d_ + r) * n + blk_c * d_ + c];
    };
    for (int r = 0; r < d_; ++r) {
        for (int c = 0; c < d_; ++c) at(0, 0, r, c) = -hv[r * d_ + c];
        at(0, 0, r, r) += it2 - ix2;
        at(0, 1, r, r) = at(1, 0, r, r) = -it2;
        at(0, 2, r, r) = at(2, 0, r, r) = ix2;
        at(1, 1, r, r) = it2;
        at(2, 2, r, r) = -ix2;
    }
}

// ---------------------------------------------------------------------------
// ExpressionDensity

ExpressionDensity::ExpressionDensity(int d, Expr expr, std::string name)
    : d_(d), expr_(std::move(expr)), name_(std::move(name)) {
    if (d < 1) throw InvalidArgument("field dimension must be >= 1");
    if (!expr_) throw InvalidArgument("expression density needs an expression");
}

ad::GradHess ExpressionDensity::evaluate(const Stencil& s) const {
    check_dims(s);
    std::vector<double> x;
    x.reserve(3 * d_);
    x.insert(x.end(), s.a.begin(), s.a.end());
    x.insert(x.end(), s.b.begin(), s.b.end());
    x.insert(x.end(), s.c.begin(), s.c.end());
    const std::size_t d = d_;
    return ad::grad_hess(
        [&](std::span<const ad::Dual2<double>> v) { return expr_(v.subspan(0, d), v.subspan(d, d), v.subspan(2 * d, d)); },
        x);
}

double ExpressionDensity::eval(const Stencil& s) const { return evaluate(s).value; }

void ExpressionDensity::partials(const Stencil& s, std::span<double> out) const {
    const auto gh = evaluate(s);
    std::copy(gh.gradient.begin(), gh.gradient.end(), out.begin());
}

void ExpressionDensity::mixed_ab(const Stencil& s, std::span<double> out) const {
    const auto gh = evaluate(s);
    const int n = 3 * d_;
    for (int r = 0; r < d_; ++r) {
        for (int c = 0; c < d_; ++c) out[r * d_ + c] = gh.hessian[r * n + d_ + c];
    }
}

void ExpressionDensity::hessian(const Stencil& s, std::span<double> out) const {
    const auto gh = evaluate(s);
    std::copy(gh.hessian.begin(), gh.hessian.end(), out.begin());
}

ConstantDensity::ConstantDensity(int d, double value) : d_(d), value_(value) {
    if (d < 1) throw InvalidArgument("field dimension must be >= 1");
}

double ConstantDensity::eval(const Stencil& s) const {
    check_dims(s);
    return value_;
}

void ConstantDensity::partials(const Stencil& s, std::span<double> out) const {
    check_dims(s);
    std::fill(out.begin(), out.end(), 0.0);
}

void ConstantDensity::mixed_ab(const Stencil& s, std::span<double> out) const {
    check_dims(s);
    std::fill(out.begin(), out.end(), 0.0);
}

void ConstantDensity::hessian(const Stencil& s, std::span<double> out) const {
    check_dims(s);
    std::fill(out.begin(), out.end(), 0.0);
}

std::shared_ptr<DensityModel> make_constant_density(int d, double value) {
    return std::make_shared<ConstantDensity>(d, value);
}

// ---------------------------------------------------------------------------
// GaugedDensity

namespace {

ad::GradHess eval_gauge(const GaugeFn& chi, std::span<const double> u) {
    if (!chi) {
        ad::GradHess z;
        z.gradient.assign(u.size(), 0.0);
        z.hessian.assign(u.size() * u.size(), 0.0);
        return z;
    }
    return ad::grad_hess([&](std::span<const ad::Dual2<double>> v) { return chi(v); }, u);
}

}  // namespace

GaugedDensity::GaugedDensity(std::shared_ptr<const DensityModel> base, double s, GaugeFn chi1, GaugeFn chi2,
                             GaugeFn chi3)
    : base_(std::move(base)), s_(s), chi_{std::move(chi1), std::move(chi2), std::move(chi3)} {
    if (!base_) throw InvalidArgument("gauge_wrap: null base density");
    if (s == 0.0 || !std::isfinite(s)) throw InvalidArgument("gauge_wrap: scale s must be finite and nonzero");
}

double GaugedDensity::eval(const Stencil& st) const {
    double v = s_ * base_->eval(st);
    v += eval_gauge(chi_[0], st.a).value - eval_gauge(chi_[0], st.b).value;
    v += eval_gauge(chi_[1], st.a).value - eval_gauge(chi_[1], st.c).value;
    v += eval_gauge(chi_[2], st.b).value - eval_gauge(chi_[2], st.c).value;
    return v;
}

void GaugedDensity::partials(const Stencil& st, std::span<double> out) const {
    const int d = dim();
    base_->partials(st, out);
    for (auto& v : out) v *= s_;
    const auto c1a = eval_gauge(chi_[0], st.a), c1b = eval_gauge(chi_[0], st.b);
    const auto c2a = eval_gauge(chi_[1], st.a), c2c = eval_gauge(chi_[1], st.c);
    const auto c3b = eval_gauge(chi_[2], st.b), c3c = eval_gauge(chi_[2], st.c);
    for (int k = 0; k < d; ++k) {
        out[k] += c1a.gradient[k] + c2a.gradient[k];
        out[d + k] += -c1b.gradient[k] + c3b.gradient[k];
        out[2 * d + k] += -c2c.gradient[k] - c3c.gradient[k];
    }
}

void GaugedDensity::mixed_ab(const Stencil& st, std::span<double> out) const {
    // The gauge terms are separable in (a, b, c), so they do not touch the mixed block.
    base_->mixed_ab(st, out);
    for (auto& v : out) v *= s_;
}

void GaugedDensity::hessian(const Stencil& st, std::span<double> out) const {
    const int d = dim();
    const int n = 3 * d;
    base_->hessian(st, out);
    for (auto& v : out) v *= s_;
    const auto c1a = eval_gauge(chi_[0], st.a), c1b = eval_gauge(chi_[0], st.b);
    const auto c2a = eval_gauge(chi_[1], st.a), c2c = eval_gauge(chi_[1], st.c);
    const auto c3b = eval_gauge(chi_[2], st.b), c3c = eval_gauge(chi_[2], st.c);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            const int q = r * d + c;
            out[r * n + c] += c1a.hessian[q] + c2a.hessian[q];
            out[(d + r) * n + d + c] += -c1b.hessian[q] + c3b.hessian[q];
            out[(2 * d + r) * n + 2 * d + c] += -c2c.hessian[q] - c3c.hessian[q];
        }
    }
}

std::shared_ptr<GaugedDensity> gauge_wrap(std::shared_ptr<const DensityModel> base, double s, GaugeFn chi1,
                                          GaugeFn chi2, GaugeFn chi3) {
    return std::make_shared<GaugedDensity>(std::move(base), s, std::move(chi1), std::move(chi2), std::move(chi3));
}

}  // namespace lagfield
