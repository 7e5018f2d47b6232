#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lagfield/autodiff.hpp"
#include "lagfield/grid.hpp"

namespace lagfield {

/// A discrete Lagrangian density L_d : (R^d)^3 -> R evaluated on stencils
/// (a, b, c) = (u^i_j, u^{i+1}_j, u^i_{j+1}).
///
/// Implementations supply exact derivatives. Partial gradients are packed as
/// [d1 | d2 | d3] (3d values); the full Hessian is 3d x 3d row-major over the
/// same ordering; the mixed block d12 is d x d with entry (r, s) equal to
/// d^2 L / da_r db_s.
class DensityModel {
public:
    virtual ~DensityModel() = default;

    virtual int dim() const = 0;
    virtual double eval(const Stencil& s) const = 0;
    virtual void partials(const Stencil& s, std::span<double> out) const = 0;
    virtual void mixed_ab(const Stencil& s, std::span<double> out) const = 0;
    virtual void hessian(const Stencil& s, std::span<double> out) const = 0;

    /// Trainable parameters; empty for analytic densities.
    virtual std::span<const double> params() const { return {}; }

    /// Short descriptor, used in checkpoints and reports.
    virtual std::string name() const = 0;

    std::vector<double> d1(const Stencil& s) const;
    std::vector<double> d2(const Stencil& s) const;
    std::vector<double> d3(const Stencil& s) const;
    std::vector<double> d12(const Stencil& s) const;
    std::vector<double> hessian(const Stencil& s) const;

protected:
    void check_dims(const Stencil& s) const;
};

/// Potential V : R^d -> R with its gradient and Hessian.
struct Potential {
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    std::function<void(std::span<const double>, std::span<double>)> hessian;
    /// Identifier used in checkpoints and configs; empty for custom potentials.
    std::string name;

    /// V(u) = |u|^2 / 2.
    static Potential quadratic();
    /// V(u) = sum_k u_k^4 / 4.
    static Potential quartic();
    /// V = 0.
    static Potential zero();
    /// "quadratic", "quartic" or "zero"; throws InvalidArgument otherwise.
    static Potential by_name(const std::string& name);
};

/// Discretised wave Lagrangian
///   L_d(a,b,c) = |b-a|^2 / (2 dt^2) - |c-a|^2 / (2 dx^2) - V(a).
/// Its discrete Euler-Lagrange equations are the explicit leapfrog scheme for
/// u_tt - u_xx + grad V(u) = 0.
class WaveDensity final : public DensityModel {
public:
    WaveDensity(double dt, double dx, int d = 1, Potential V = Potential::quadratic());

    int dim() const override { return d_; }
    double eval(const Stencil& s) const override;
    void partials(const Stencil& s, std::span<double> out) const override;
    void mixed_ab(const Stencil& s, std::span<double> out) const override;
    void hessian(const Stencil& s, std::span<double> out) const override;
    std::string name() const override { return "wave"; }

    double dt() const { return dt_; }
    double dx() const { return dx_; }
    const Potential& potential() const { return V_; }

private:
    double dt_;
    double dx_;
    int d_;
    Potential V_;
};

/// Density given by an expression on Dual2 numbers; all derivatives come from
/// the forward-mode engine. Arguments are the 3d seeded stencil entries.
class ExpressionDensity final : public DensityModel {
public:
    using Expr = std::function<ad::Dual2<double>(std::span<const ad::Dual2<double>> a,
                                                 std::span<const ad::Dual2<double>> b,
                                                 std::span<const ad::Dual2<double>> c)>;

    ExpressionDensity(int d, Expr expr, std::string name = "expression");

    int dim() const override { return d_; }
    double eval(const Stencil& s) const override;
    void partials(const Stencil& s, std::span<double> out) const override;
    void mixed_ab(const Stencil& s, std::span<double> out) const override;
    void hessian(const Stencil& s, std::span<double> out) const override;
    std::string name() const override { return name_; }

private:
    ad::GradHess evaluate(const Stencil& s) const;

    int d_;
    Expr expr_;
    std::string name_;
};

/// L_d == value. Consistent with every dataset and maximally degenerate.
class ConstantDensity final : public DensityModel {
public:
    explicit ConstantDensity(int d, double value = 0.0);

    int dim() const override { return d_; }
    double eval(const Stencil& s) const override;
    void partials(const Stencil& s, std::span<double> out) const override;
    void mixed_ab(const Stencil& s, std::span<double> out) const override;
    void hessian(const Stencil& s, std::span<double> out) const override;
    std::string name() const override { return "constant"; }

    double value() const { return value_; }

private:
    int d_;
    double value_;
};

std::shared_ptr<DensityModel> make_constant_density(int d, double value = 0.0);

/// Scalar function R^d -> R given on Dual2 numbers, used for gauge terms.
using GaugeFn = std::function<ad::Dual2<double>(std::span<const ad::Dual2<double>>)>;

/// L(a,b,c) = s * base(a,b,c) + chi1(a) - chi1(b) + chi2(a) - chi2(c) + chi3(b) - chi3(c).
///
/// Such a density has Euler-Lagrange residuals equal to s times those of
/// the base density at every grid point.
class GaugedDensity final : public DensityModel {
public:
    GaugedDensity(std::shared_ptr<const DensityModel> base, double s, GaugeFn chi1, GaugeFn chi2, GaugeFn chi3);

    int dim() const override { return base_->dim(); }
    double eval(const Stencil& s) const override;
    void partials(const Stencil& s, std::span<double> out) const override;
    void mixed_ab(const Stencil& s, std::span<double> out) const override;
    void hessian(const Stencil& s, std::span<double> out) const override;
    std::string name() const override { return "gauged(" + base_->name() + ")"; }

private:
    std::shared_ptr<const DensityModel> base_;
    double s_;
    GaugeFn chi_[3];
};

/// gauge_wrap with chi_k == nullptr meaning the zero function. Throws
/// InvalidArgument for s == 0.
std::shared_ptr<GaugedDensity> gauge_wrap(std::shared_ptr<const DensityModel> base, double s,
                                          GaugeFn chi1 = nullptr, GaugeFn chi2 = nullptr,
                                          GaugeFn chi3 = nullptr);

/// Feed-forward network 3 -> 10 -> 10 -> 1 with tanh activations, biases on
/// both hidden layers and none on the output: 40 + 110 + 10 = 160 parameters.
/// Field dimension is 1; inputs are the raw stencil values (a, b, c).
///
/// Parameter layout: W1 (10x3 row-major), b1, W2 (10x10 row-major), b2, w3.
class NeuralDensity final : public DensityModel {
public:
    static constexpr int kInputs = 3;
    static constexpr int kHidden = 10;
    static constexpr int kParams = kHidden * kInputs + kHidden + kHidden * kHidden + kHidden + kHidden;
    static constexpr const char* kArchitecture = "mlp 3-10-10-1 tanh hidden-bias no-output-bias";

    NeuralDensity();
    explicit NeuralDensity(std::vector<double> theta);

    /// Uniform in +-sqrt(1/fan_in) per layer, reproducible from seed.
    static NeuralDensity init(unsigned long long seed);

    int dim() const override { return 1; }
    double eval(const Stencil& s) const override;
    void partials(const Stencil& s, std::span<double> out) const override;
    void mixed_ab(const Stencil& s, std::span<double> out) const override;
    void hessian(const Stencil& s, std::span<double> out) const override;
    std::span<const double> params() const override { return theta_; }
    std::string name() const override { return "neural"; }

    void set_params(std::span<const double> theta);

    /// First partials and mixed second derivative at one stencil:
    /// out = {dL/da, dL/db, dL/dc, d2L/dadb}.
    struct Jet {
        double g[3];
        double mixed;
    };
    Jet jet(double a, double b, double c) const;

    /// Accumulates into grad_theta the parameter gradient of
    ///   w[0] dL/da + w[1] dL/db + w[2] dL/dc + w[3] d2L/dadb
    /// at stencil (a, b, c), and returns the jet at that stencil.
    Jet jet_vjp(double a, double b, double c, const double w[4], std::span<double> grad_theta) const;

    /// Generic evaluation over any scalar type (double, ad::Var) with Dual2
    /// inputs, used as an independent route through the autodiff engine.
    template <class T>
    static ad::Dual2<T> forward(std::span<const T> theta, std::span<const ad::Dual2<T>> x);

private:
    std::vector<double> theta_;
};

template <class T>
ad::Dual2<T> NeuralDensity::forward(std::span<const T> theta, std::span<const ad::Dual2<T>> x) {
    using D = ad::Dual2<T>;
    const T* W1 = theta.data();
    const T* b1 = W1 + kHidden * kInputs;
    const T* W2 = b1 + kHidden;
    const T* b2 = W2 + kHidden * kHidden;
    const T* w3 = b2 + kHidden;
    std::vector<D> h1;
    h1.reserve(kHidden);
    for (int r = 0; r < kHidden; ++r) {
        D z = ad::shift(ad::scale(x[0], W1[r * kInputs]), b1[r]);
        for (int k = 1; k < kInputs; ++k) z = z + ad::scale(x[k], W1[r * kInputs + k]);
        h1.push_back(ad::tanh(z));
    }
    D out;
    for (int r = 0; r < kHidden; ++r) {
        D z = ad::shift(ad::scale(h1[0], W2[r * kHidden]), b2[r]);
        for (int k = 1; k < kHidden; ++k) z = z + ad::scale(h1[k], W2[r * kHidden + k]);
        const D term = ad::scale(ad::tanh(z), w3[r]);
        out = r == 0 ? term : out + term;
    }
    return out;
}

}  // namespace lagfield
