#include "lagfield/autodiff.hpp"

#include <cmath>
#include <string>

namespace lagfield::ad {

Var Tape::variable(double value) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({Op::Leaf, -1, -1, 0});
    values_.push_back(value);
    leaves_.push_back(idx);
    return Var(this, idx, value);
}

int Tape::node_of(const Var& x) {
    if (x.tape() == this) return x.index();
    if (!x.is_constant()) throw InvalidArgument("Var belongs to a different tape");
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({Op::Const, -1, -1, 0});
    values_.push_back(x.value());
    return idx;
}

Var Tape::push(Op op, const Var& lhs, const Var& rhs, int exponent, double value) {
    const int l = node_of(lhs);
    const int r = (op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div) ? node_of(rhs) : -1;
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({op, l, r, exponent});
    values_.push_back(value);
    return Var(this, idx, value);
}

std::vector<double> Tape::backward(const Var& output) const {
    std::vector<double> leaf_adj(leaves_.size(), 0.0);
    if (output.tape() != this) return leaf_adj;
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[output.index()] = 1.0;
    for (int k = output.index(); k >= 0; --k) {
        const double a = adj[k];
        if (a == 0.0) continue;
        const Node& n = nodes_[k];
        switch (n.op) {
            case Op::Leaf:
            case Op::Const:
                break;
            case Op::Add:
                adj[n.lhs] += a;
                adj[n.rhs] += a;
                break;
            case Op::Sub:
                adj[n.lhs] += a;
                adj[n.rhs] -= a;
                break;
            case Op::Mul:
                adj[n.lhs] += a * values_[n.rhs];
                adj[n.rhs] += a * values_[n.lhs];
                break;
            case Op::Div:
                adj[n.lhs] += a / values_[n.rhs];
                adj[n.rhs] -= a * values_[k] / values_[n.rhs];
                break;
            case Op::Neg:
                adj[n.lhs] -= a;
                break;
            case Op::Tanh:
                adj[n.lhs] += a * (1.0 - values_[k] * values_[k]);
                break;
            case Op::Exp:
                adj[n.lhs] += a * values_[k];
                break;
            case Op::Pow:
                adj[n.lhs] += a * n.exponent * std::pow(values_[n.lhs], n.exponent - 1);
                break;
        }
    }
    for (std::size_t q = 0; q < leaves_.size(); ++q) leaf_adj[q] = adj[leaves_[q]];
    return leaf_adj;
}

double Tape::replay(std::span<const double> leaf_values, const Var& output) {
    if (leaf_values.size() != leaves_.size()) throw InvalidArgument("replay: leaf count mismatch");
    for (std::size_t q = 0; q < leaves_.size(); ++q) values_[leaves_[q]] = leaf_values[q];
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const Node& n = nodes_[k];
        switch (n.op) {
            case Op::Leaf:
            case Op::Const:
                break;
            case Op::Add: values_[k] = values_[n.lhs] + values_[n.rhs]; break;
            case Op::Sub: values_[k] = values_[n.lhs] - values_[n.rhs]; break;
            case Op::Mul: values_[k] = values_[n.lhs] * values_[n.rhs]; break;
            case Op::Div: values_[k] = values_[n.lhs] / values_[n.rhs]; break;
            case Op::Neg: values_[k] = -values_[n.lhs]; break;
            case Op::Tanh: values_[k] = std::tanh(values_[n.lhs]); break;
            case Op::Exp: values_[k] = std::exp(values_[n.lhs]); break;
            case Op::Pow: values_[k] = std::pow(values_[n.lhs], n.exponent); break;
        }
    }
    return output.tape() == this ? values_[output.index()] : output.value();
}

namespace {

Tape* tape_of(const Var& x, const Var& y) {
    if (x.tape() && y.tape() && x.tape() != y.tape()) throw InvalidArgument("Vars from different tapes");
    return x.tape() ? x.tape() : y.tape();
}

}  // namespace

Var operator+(const Var& x, const Var& y) {
    const double v = x.value() + y.value();
    Tape* t = tape_of(x, y);
    return t ? t->push(Tape::Op::Add, x, y, 0, v) : Var(v);
}

Var operator-(const Var& x, const Var& y) {
    const double v = x.value() - y.value();
    Tape* t = tape_of(x, y);
    return t ? t->push(Tape::Op::Sub, x, y, 0, v) : Var(v);
}

Var operator*(const Var& x, const Var& y) {
    const double v = x.value() * y.value();
    Tape* t = tape_of(x, y);
    return t ? t->push(Tape::Op::Mul, x, y, 0, v) : Var(v);
}

Var operator/(const Var& x, const Var& y) {
    const double v = x.value() / y.value();
    Tape* t = tape_of(x, y);
    return t ? t->push(Tape::Op::Div, x, y, 0, v) : Var(v);
}

Var operator-(const Var& x) {
    return x.tape() ? x.tape()->push(Tape::Op::Neg, x, Var(), 0, -x.value()) : Var(-x.value());
}

Var tanh(const Var& x) {
    const double v = std::tanh(x.value());
    return x.tape() ? x.tape()->push(Tape::Op::Tanh, x, Var(), 0, v) : Var(v);
}

Var exp(const Var& x) {
    const double v = std::exp(x.value());
    return x.tape() ? x.tape()->push(Tape::Op::Exp, x, Var(), 0, v) : Var(v);
}

Var pow(const Var& x, int n) {
    const double v = std::pow(x.value(), n);
    return x.tape() ? x.tape()->push(Tape::Op::Pow, x, Var(), n, v) : Var(v);
}

GradHess grad_hess(const ScalarFn& f, std::span<const double> x) {
    const auto seeded = seed_all<double>(x);
    Dual2<double> y = f(seeded);
    const std::size_t n = x.size();
    GradHess out;
    out.value = y.value;
    out.gradient.assign(n, 0.0);
    out.hessian.assign(n * n, 0.0);
    if (!y.grad.empty()) {
        if (y.grad.size() != n) throw InvalidArgument("grad_hess: result has wrong seed dimension");
        out.gradient = y.grad;
        out.hessian = y.hess;
    }
    if (!std::isfinite(out.value)) throw NumericalError("grad_hess: non-finite value");
    for (double g : out.gradient) {
        if (!std::isfinite(g)) throw NumericalError("grad_hess: non-finite gradient");
    }
    for (double h : out.hessian) {
        if (!std::isfinite(h)) throw NumericalError("grad_hess: non-finite Hessian");
    }
    return out;
}

ValueGrad param_grad(const ParamLossFn& loss, std::span<const double> theta) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(theta.size());
    for (double t : theta) vars.push_back(tape.variable(t));
    const Var y = loss(vars);
    ValueGrad out;
    out.value = y.value();
    out.gradient = tape.backward(y);
    if (!std::isfinite(out.value)) throw NumericalError("param_grad: non-finite loss");
    for (double g : out.gradient) {
        if (!std::isfinite(g)) throw NumericalError("param_grad: non-finite gradient");
    }
    return out;
}

}  // namespace lagfield::ad
