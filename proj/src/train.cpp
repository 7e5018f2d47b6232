#include "lagfield/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "lagfield/del.hpp"
#include "lagfield/errors.hpp"
#include "lagfield/linalg.hpp"
#include "lagfield/parallel.hpp"

namespace lagfield {

void TrainConfig::validate() const {
    if (epochs < 0) throw InvalidArgument("epochs must be non-negative");
    if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw InvalidArgument("adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
    if (!(reg_weight >= 0.0)) throw InvalidArgument("reg_weight must be non-negative");
    if (!(lambda_floor > 0.0)) throw InvalidArgument("lambda_floor must be positive");
    if (!(grad_clip >= 0.0)) throw InvalidArgument("grad_clip must be non-negative");
}

namespace {

void check_batch(const DensityModel& Ld, std::span<const FieldGrid> batch) {
    if (batch.empty()) return;
    const Mesh& mesh = batch.front().mesh();
    const int d = batch.front().dim();
    for (const FieldGrid& U : batch) {
        if (!(U.mesh() == mesh) || U.dim() != d) throw MeshMismatch("batch grids differ in mesh or dimension");
    }
    if (Ld.dim() != d) throw MeshMismatch("density and data differ in field dimension");
}

long index_count(std::span<const FieldGrid> batch) {
    if (batch.empty()) return 0;
    const Mesh& m = batch.front().mesh();
    return static_cast<long>(batch.size()) * (m.N() - 1) * m.M();
}

double reduce(double sum, long count, Reduction r) {
    return r == Reduction::mean && count > 0 ? sum / static_cast<double>(count) : sum;
}

// Per-grid sums of squared residuals and regulariser summands.
LossTerms grid_terms(const DensityModel& Ld, const FieldGrid& U, double lambda_floor) {
    LossTerms t;
    t.l_del = del_field(Ld, U).sum_squares();
    const int d = U.dim();
    std::vector<double> A(d * d);
    for (int i = 1; i < U.mesh().N(); ++i) {
        for (int j = 0; j < U.mesh().M(); ++j) {
            Ld.mixed_ab(stencil_at(U, i, j), A);
            const double lam2 = linalg::min_singular_value_sq(A, d);
            if (!(lam2 >= lambda_floor)) {
                ++t.floored;
                t.l_reg += 1.0 / lambda_floor;
            } else {
                t.l_reg += 1.0 / lam2;
            }
            ++t.count;
        }
    }
    return t;
}

}  // namespace

LossTerms loss_terms(const DensityModel& Ld, std::span<const FieldGrid> batch, double lambda_floor, Reduction r,
                     int threads) {
    check_batch(Ld, batch);
    std::vector<LossTerms> parts(batch.size());
    parallel_for(static_cast<int>(batch.size()), threads,
                 [&](int g) { parts[g] = grid_terms(Ld, batch[g], lambda_floor); });
    LossTerms out;
    for (const LossTerms& p : parts) {
        out.l_del += p.l_del;
        out.l_reg += p.l_reg;
        out.floored += p.floored;
        out.count += p.count;
    }
    out.l_del = reduce(out.l_del, out.count, r);
    out.l_reg = reduce(out.l_reg, out.count, r);
    return out;
}

double loss_del(const DensityModel& Ld, std::span<const FieldGrid> batch, Reduction r) {
    check_batch(Ld, batch);
    double s = 0.0;
    for (const FieldGrid& U : batch) s += del_field(Ld, U).sum_squares();
    return reduce(s, index_count(batch), r);
}

double loss_reg(const DensityModel& Ld, std::span<const FieldGrid> batch, double lambda_floor, Reduction r,
                long* floored) {
    const LossTerms t = loss_terms(Ld, batch, lambda_floor, Reduction::sum);
    if (floored) *floored = t.floored;
    return reduce(t.l_reg, t.count, r);
}

namespace {

struct GridPass {
    double l_del = 0.0;
    double l_reg = 0.0;
    long floored = 0;
    std::vector<double> grad;
};

// Two sweeps over one grid: jets at every stencil, then the vector-Jacobian
// products weighted by the loss sensitivities. `scale` is the reduction factor.
GridPass neural_grid_pass(const NeuralDensity& Ld, const FieldGrid& U, double reg_weight, double lambda_floor,
                          double scale, bool need_grad) {
    const int N = U.mesh().N();
    const int M = U.mesh().M();
    std::vector<NeuralDensity::Jet> jets(static_cast<std::size_t>(N) * M);
    auto J = [&](int s, int j) -> NeuralDensity::Jet& { return jets[static_cast<std::size_t>(s) * M + wrap(j, M)]; };
    for (int s = 0; s < N; ++s) {
        for (int j = 0; j < M; ++j) J(s, j) = Ld.jet(U(s, j), U(s + 1, j), U(s, j + 1));
    }

    GridPass out;
    std::vector<double> R(static_cast<std::size_t>(N) * M, 0.0);  // rows 1..N-1 used
    auto Rr = [&](int i, int j) -> double& { return R[static_cast<std::size_t>(i) * M + wrap(j, M)]; };
    std::vector<double> wreg(static_cast<std::size_t>(N) * M, 0.0);
    for (int i = 1; i < N; ++i) {
        for (int j = 0; j < M; ++j) {
            const double r = J(i - 1, j).g[1] + J(i, j).g[0] + J(i, j - 1).g[2];
            Rr(i, j) = r;
            out.l_del += r * r;
            const double A = J(i, j).mixed;
            const double lam2 = A * A;
            if (!(lam2 >= lambda_floor)) {
                ++out.floored;
                out.l_reg += 1.0 / lambda_floor;
            } else {
                out.l_reg += 1.0 / lam2;
                wreg[static_cast<std::size_t>(i) * M + j] = reg_weight * scale * (-2.0 / (lam2 * A));
            }
        }
    }
    if (!need_grad) return out;

    out.grad.assign(NeuralDensity::kParams, 0.0);
    for (int s = 0; s < N; ++s) {
        for (int j = 0; j < M; ++j) {
            double w[4] = {0.0, 0.0, 0.0, 0.0};
            if (s >= 1) {
                w[0] = 2.0 * scale * Rr(s, j);
                w[2] = 2.0 * scale * Rr(s, j + 1);
                w[3] = wreg[static_cast<std::size_t>(s) * M + j];
            }
            if (s + 1 <= N - 1) w[1] = 2.0 * scale * Rr(s + 1, j);
            Ld.jet_vjp(U(s, j), U(s + 1, j), U(s, j + 1), w, out.grad);
        }
    }
    return out;
}

LossGrad neural_pass(const NeuralDensity& Ld, std::span<const FieldGrid> batch, double reg_weight,
                     double lambda_floor, Reduction r, int threads, bool need_grad) {
    check_batch(Ld, batch);
    const long count = index_count(batch);
    const double scale = r == Reduction::mean && count > 0 ? 1.0 / static_cast<double>(count) : 1.0;
    std::vector<GridPass> parts(batch.size());
    parallel_for(static_cast<int>(batch.size()), threads, [&](int g) {
        parts[g] = neural_grid_pass(Ld, batch[g], reg_weight, lambda_floor, scale, need_grad);
    });
    LossGrad out;
    if (need_grad) out.gradient.assign(NeuralDensity::kParams, 0.0);
    for (const GridPass& p : parts) {
        out.terms.l_del += p.l_del;
        out.terms.l_reg += p.l_reg;
        out.terms.floored += p.floored;
        if (need_grad) {
            for (int k = 0; k < NeuralDensity::kParams; ++k) out.gradient[k] += p.grad[k];
        }
    }
    out.terms.count = count;
    out.terms.l_del *= scale;
    out.terms.l_reg *= scale;
    out.total = out.terms.l_del + reg_weight * out.terms.l_reg;
    if (!std::isfinite(out.total)) throw NumericalError("non-finite training loss");
    for (double g : out.gradient) {
        if (!std::isfinite(g)) throw NumericalError("non-finite training gradient");
    }
    return out;
}

}  // namespace

LossGrad neural_loss_grad(const NeuralDensity& Ld, std::span<const FieldGrid> batch, double reg_weight,
                          double lambda_floor, Reduction r, int threads) {
    return neural_pass(Ld, batch, reg_weight, lambda_floor, r, threads, true);
}

LossGrad neural_loss_grad_taped(const NeuralDensity& Ld, std::span<const FieldGrid> batch, double reg_weight,
                                double lambda_floor, Reduction r) {
    using ad::Dual2;
    using ad::Var;
    check_batch(Ld, batch);
    const long count = index_count(batch);
    const double scale = r == Reduction::mean && count > 0 ? 1.0 / static_cast<double>(count) : 1.0;
    LossTerms terms;
    terms.count = count;

    auto loss = [&](std::span<const Var> theta) {
        Var l_del(0.0), l_reg(0.0);
        double reg_const = 0.0;
        terms.floored = 0;
        for (const FieldGrid& U : batch) {
            const int N = U.mesh().N();
            const int M = U.mesh().M();
            std::vector<Dual2<Var>> out(static_cast<std::size_t>(N) * M);
            for (int s = 0; s < N; ++s) {
                for (int j = 0; j < M; ++j) {
                    const Var x[3] = {U(s, j), U(s + 1, j), U(s, j + 1)};
                    const auto seeds = ad::seed_all<Var>(x);
                    out[static_cast<std::size_t>(s) * M + j] = NeuralDensity::forward<Var>(theta, seeds);
                }
            }
            auto at = [&](int s, int j) -> const Dual2<Var>& { return out[static_cast<std::size_t>(s) * M + wrap(j, M)]; };
            for (int i = 1; i < N; ++i) {
                for (int j = 0; j < M; ++j) {
                    const Var res = at(i - 1, j).grad[1] + at(i, j).grad[0] + at(i, j - 1).grad[2];
                    l_del += res * res;
                    const Var A = at(i, j).h(0, 1);
                    if (!(A.value() * A.value() >= lambda_floor)) {
                        ++terms.floored;
                        reg_const += 1.0 / lambda_floor;
                    } else {
                        l_reg += Var(1.0) / (A * A);
                    }
                }
            }
        }
        terms.l_del = l_del.value() * scale;
        terms.l_reg = (l_reg.value() + reg_const) * scale;
        return (l_del + Var(reg_weight) * l_reg) * Var(scale);
    };
    const ad::ValueGrad vg = ad::param_grad(loss, Ld.params());
    LossGrad outg;
    outg.terms = terms;
    outg.total = terms.l_del + reg_weight * terms.l_reg;
    outg.gradient = vg.gradient;
    return outg;
}

void adam_step(std::span<double> theta, std::span<const double> gradient, AdamState& state, const TrainConfig& cfg) {
    if (gradient.size() != theta.size()) throw InvalidArgument("adam_step: gradient size differs from theta");
    for (double g : gradient) {
        if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient");
    }
    if (state.m.empty()) {
        state.m.assign(theta.size(), 0.0);
        state.v.assign(theta.size(), 0.0);
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < theta.size(); ++k) {
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * gradient[k];
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * gradient[k] * gradient[k];
        const double mhat = state.m[k] / c1;
        const double vhat = state.v[k] / c2;
        theta[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

TrainResult train(std::span<const FieldGrid> data, const TrainConfig& cfg) {
    return train(data, cfg, NeuralDensity::init(cfg.seed));
}

TrainResult train(std::span<const FieldGrid> data, const TrainConfig& cfg, const NeuralDensity& init) {
    cfg.validate();
    if (data.empty()) throw InvalidArgument("train: empty dataset");
    NeuralDensity model = init;
    check_batch(model, data);

    TrainResult result{model, {}};
    TrainRecord& rec = result.record;
    const auto t0 = std::chrono::steady_clock::now();
    double best = std::numeric_limits<double>::infinity();

    auto evaluate = [&](int epoch) {
        const LossGrad e = neural_pass(model, data, cfg.reg_weight, cfg.lambda_floor, cfg.reduction, cfg.threads, false);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rec.epochs.push_back({epoch, e.terms.l_del, e.terms.l_reg, secs, e.terms.floored});
        if (e.total < best) {
            best = e.total;
            rec.best_epoch = epoch;
            result.density = model;
        }
    };

    try {
        evaluate(0);
    } catch (const NumericalError& e) {
        rec.aborted = true;
        rec.abort_reason = e.what();
        return result;
    }

    const int K = static_cast<int>(data.size());
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5bd1e995ULL);
    AdamState adam;
    std::vector<double> theta(model.params().begin(), model.params().end());
    std::vector<FieldGrid> batch;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        try {
            for (int start = 0; start < K; start += cfg.batch_size) {
                batch.clear();
                for (int k = start; k < std::min(K, start + cfg.batch_size); ++k) batch.push_back(data[order[k]]);
                LossGrad lg = neural_pass(model, batch, cfg.reg_weight, cfg.lambda_floor, cfg.reduction, cfg.threads, true);
                if (cfg.grad_clip > 0.0) {
                    const double n = linalg::norm2(lg.gradient);
                    if (n > cfg.grad_clip) {
                        for (double& g : lg.gradient) g *= cfg.grad_clip / n;
                    }
                }
                adam_step(theta, lg.gradient, adam, cfg);
                model.set_params(theta);
                ++rec.adam_steps;
            }
            evaluate(epoch);
        } catch (const NumericalError& e) {
            rec.aborted = true;
            rec.abort_reason = "epoch " + std::to_string(epoch) + ": " + e.what();
            break;
        }
    }
    return result;
}

}  // namespace lagfield
