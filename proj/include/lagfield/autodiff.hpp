#pragma once

// Exact differentiation for discrete Lagrangians.
//
// Two engines that compose:
//   * Dual2<T>  forward-mode second order over a small seeded input basis
//               (the 3d stencil entries), giving value, gradient and Hessian.
//   * Var       reverse-mode scalar recorded on a Tape, used to accumulate
//               gradients with respect to model parameters.
//
// Dual2<Var> evaluates second stencil derivatives whose entries are themselves
// taped, so a loss built from Hessian entries can be differentiated in the
// parameters (third-order mixed derivatives overall).
//
// Supported primitives: + - * /, tanh, exp and integer powers.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lagfield/errors.hpp"

namespace lagfield::ad {

class Tape;

/// Reverse-mode scalar. A default-constructed Var is a constant not on any tape.
class Var {
public:
    Var() = default;
    Var(double constant) : value_(constant) {}  // NOLINT: implicit constants are intended

    double value() const { return value_; }
    int index() const { return index_; }
    Tape* tape() const { return tape_; }
    bool is_constant() const { return tape_ == nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int index, double value) : tape_(tape), index_(index), value_(value) {}

    Tape* tape_ = nullptr;
    int index_ = -1;
    double value_ = 0.0;
};

/// Ordered record of primitive operations.
///
/// Leaves are created with variable(); every arithmetic op on taped Vars
/// appends a node. backward() accumulates adjoints of one output; replay()
/// recomputes every node value from (possibly new) leaf values.
class Tape {
public:
    enum class Op : unsigned char { Leaf, Const, Add, Sub, Mul, Div, Neg, Tanh, Exp, Pow };

    Var variable(double value);

    /// Adjoints d(output)/d(leaf) for every leaf, in creation order.
    std::vector<double> backward(const Var& output) const;

    /// Recomputes all node values with the given leaf values and returns the
    /// value of `output`. With unchanged leaves the result is bit-identical to
    /// the recorded forward value.
    double replay(std::span<const double> leaf_values, const Var& output);

    std::size_t size() const { return nodes_.size(); }
    std::size_t leaf_count() const { return leaves_.size(); }

    /// Appends a node; constant operands are materialised as Const nodes.
    Var push(Op op, const Var& lhs, const Var& rhs, int exponent, double value);

private:
    struct Node {
        Op op;
        int lhs;
        int rhs;
        int exponent;
    };
    int node_of(const Var& x);
    std::vector<Node> nodes_;
    std::vector<double> values_;
    std::vector<int> leaves_;
};

Var operator+(const Var& x, const Var& y);
Var operator-(const Var& x, const Var& y);
Var operator*(const Var& x, const Var& y);
Var operator/(const Var& x, const Var& y);
Var operator-(const Var& x);
Var tanh(const Var& x);
Var exp(const Var& x);
Var pow(const Var& x, int n);

inline Var& operator+=(Var& x, const Var& y) { return x = x + y; }
inline Var& operator-=(Var& x, const Var& y) { return x = x - y; }
inline Var& operator*=(Var& x, const Var& y) { return x = x * y; }
inline Var& operator/=(Var& x, const Var& y) { return x = x / y; }

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

/// Integer power for plain doubles, matching the Var primitive.
inline double pow(double x, int n) { return std::pow(x, n); }

/// Second-order forward-mode number over an n-dimensional seed basis.
/// hess is stored densely (n x n, row-major) and kept symmetric.
template <class T>
struct Dual2 {
    T value{};
    std::vector<T> grad;
    std::vector<T> hess;

    Dual2() = default;
    explicit Dual2(std::size_t n, T v = T{}) : value(v), grad(n, T{}), hess(n * n, T{}) {}

    /// Independent variable number `k` of `n`.
    static Dual2 seed(std::size_t n, std::size_t k, T v) {
        Dual2 r(n, v);
        r.grad[k] = T{1.0};
        return r;
    }

    std::size_t size() const { return grad.size(); }
    const T& h(std::size_t r, std::size_t c) const { return hess[r * grad.size() + c]; }
};

namespace detail {

template <class T>
std::size_t common_size(const Dual2<T>& x, const Dual2<T>& y) {
    if (x.grad.empty()) return y.grad.size();
    if (y.grad.empty()) return x.grad.size();
    if (x.grad.size() != y.grad.size()) throw InvalidArgument("Dual2 operands of different dimension");
    return x.grad.size();
}

template <class T>
const T& g(const Dual2<T>& x, std::size_t k) {
    static const T zero{};
    return x.grad.empty() ? zero : x.grad[k];
}

template <class T>
const T& hh(const Dual2<T>& x, std::size_t k) {
    static const T zero{};
    return x.hess.empty() ? zero : x.hess[k];
}

// Chain rule for a scalar function phi applied to x, given phi(x0), phi'(x0), phi''(x0).
template <class T>
Dual2<T> apply_unary(const Dual2<T>& x, T f0, T f1, T f2) {
    const std::size_t n = x.grad.size();
    Dual2<T> r(n, f0);
    for (std::size_t i = 0; i < n; ++i) r.grad[i] = f1 * x.grad[i];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const T v = f1 * x.hess[i * n + j] + f2 * x.grad[i] * x.grad[j];
            r.hess[i * n + j] = v;
            r.hess[j * n + i] = v;
        }
    }
    return r;
}

}  // namespace detail

template <class T>
Dual2<T> operator+(const Dual2<T>& x, const Dual2<T>& y) {
    const std::size_t n = detail::common_size(x, y);
    Dual2<T> r(n, x.value + y.value);
    for (std::size_t i = 0; i < n; ++i) r.grad[i] = detail::g(x, i) + detail::g(y, i);
    for (std::size_t i = 0; i < n * n; ++i) r.hess[i] = detail::hh(x, i) + detail::hh(y, i);
    return r;
}

template <class T>
Dual2<T> operator-(const Dual2<T>& x, const Dual2<T>& y) {
    const std::size_t n = detail::common_size(x, y);
    Dual2<T> r(n, x.value - y.value);
    for (std::size_t i = 0; i < n; ++i) r.grad[i] = detail::g(x, i) - detail::g(y, i);
    for (std::size_t i = 0; i < n * n; ++i) r.hess[i] = detail::hh(x, i) - detail::hh(y, i);
    return r;
}

template <class T>
Dual2<T> operator-(const Dual2<T>& x) {
    Dual2<T> r(x.grad.size(), -x.value);
    for (std::size_t i = 0; i < x.grad.size(); ++i) r.grad[i] = -x.grad[i];
    for (std::size_t i = 0; i < x.hess.size(); ++i) r.hess[i] = -x.hess[i];
    return r;
}

template <class T>
Dual2<T> operator*(const Dual2<T>& x, const Dual2<T>& y) {
    const std::size_t n = detail::common_size(x, y);
    Dual2<T> r(n, x.value * y.value);
    for (std::size_t i = 0; i < n; ++i) r.grad[i] = detail::g(x, i) * y.value + x.value * detail::g(y, i);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const T v = detail::hh(x, i * n + j) * y.value + x.value * detail::hh(y, i * n + j) +
                        detail::g(x, i) * detail::g(y, j) + detail::g(x, j) * detail::g(y, i);
            r.hess[i * n + j] = v;
            r.hess[j * n + i] = v;
        }
    }
    return r;
}

template <class T>
Dual2<T> operator/(const Dual2<T>& x, const Dual2<T>& y) {
    // x * (1/y) with 1/y through the unary chain rule.
    const T inv = T{1.0} / y.value;
    const T inv2 = inv * inv;
    Dual2<T> recip = y.grad.empty() ? Dual2<T>(0, inv) : detail::apply_unary(y, inv, -inv2, T{2.0} * inv2 * inv);
    return x * recip;
}

template <class T>
Dual2<T> operator+(const Dual2<T>& x, double c) {
    Dual2<T> r = x;
    r.value = r.value + T{c};
    return r;
}
template <class T>
Dual2<T> operator+(double c, const Dual2<T>& x) { return x + c; }
template <class T>
Dual2<T> operator-(const Dual2<T>& x, double c) { return x + (-c); }
template <class T>
Dual2<T> operator-(double c, const Dual2<T>& x) { return (-x) + c; }

template <class T>
Dual2<T> operator*(const Dual2<T>& x, double c) {
    Dual2<T> r = x;
    const T ct{c};
    r.value = r.value * ct;
    for (auto& v : r.grad) v = v * ct;
    for (auto& v : r.hess) v = v * ct;
    return r;
}
template <class T>
Dual2<T> operator*(double c, const Dual2<T>& x) { return x * c; }
template <class T>
Dual2<T> operator/(const Dual2<T>& x, double c) { return x * (1.0 / c); }
template <class T>
Dual2<T> operator/(double c, const Dual2<T>& y) { return Dual2<T>(y.grad.size(), T{c}) / y; }

/// Scale by a (possibly taped) scalar of the underlying type.
template <class T>
Dual2<T> scale(const Dual2<T>& x, const T& c) {
    Dual2<T> r = x;
    r.value = r.value * c;
    for (auto& v : r.grad) v = v * c;
    for (auto& v : r.hess) v = v * c;
    return r;
}

/// Add a (possibly taped) scalar of the underlying type.
template <class T>
Dual2<T> shift(const Dual2<T>& x, const T& c) {
    Dual2<T> r = x;
    r.value = r.value + c;
    return r;
}

template <class T>
Dual2<T> tanh(const Dual2<T>& x) {
    using std::tanh;
    const T t = tanh(x.value);
    const T s = T{1.0} - t * t;
    return detail::apply_unary(x, t, s, T{-2.0} * t * s);
}

template <class T>
Dual2<T> exp(const Dual2<T>& x) {
    using std::exp;
    const T e = exp(x.value);
    return detail::apply_unary(x, e, e, e);
}

template <class T>
Dual2<T> pow(const Dual2<T>& x, int n) {
    using lagfield::ad::pow;
    if (n == 0) return Dual2<T>(x.grad.size(), T{1.0});
    if (n == 1) return x;
    const T p2 = n >= 2 ? pow(x.value, n - 2) : T{1.0} / pow(x.value, 2 - n);
    const T p1 = p2 * x.value;
    const T p0 = p1 * x.value;
    return detail::apply_unary(x, p0, T{static_cast<double>(n)} * p1,
                               T{static_cast<double>(n) * (n - 1)} * p2);
}

/// Result of grad_hess.
struct GradHess {
    double value = 0.0;
    std::vector<double> gradient;
    std::vector<double> hessian;  // row-major n x n
};

using ScalarFn = std::function<Dual2<double>(std::span<const Dual2<double>>)>;

/// Exact value, gradient and Hessian of f at x. Throws NumericalError if any
/// entry is non-finite.
GradHess grad_hess(const ScalarFn& f, std::span<const double> x);

/// Seeds x as n independent Dual2 variables over the scalar type T.
template <class T>
std::vector<Dual2<T>> seed_all(std::span<const T> x) {
    std::vector<Dual2<T>> out;
    out.reserve(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out.push_back(Dual2<T>::seed(x.size(), k, x[k]));
    return out;
}

/// Result of param_grad.
struct ValueGrad {
    double value = 0.0;
    std::vector<double> gradient;
};

using ParamLossFn = std::function<Var(std::span<const Var>)>;

/// Exact gradient of a scalar loss of the parameters theta, by reverse
/// accumulation. The loss may use Dual2<Var> internally.
ValueGrad param_grad(const ParamLossFn& loss, std::span<const double> theta);

}  // namespace lagfield::ad
