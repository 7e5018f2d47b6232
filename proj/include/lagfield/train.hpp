#pragma once

#include <span>
#include <vector>

#include "lagfield/autodiff.hpp"
#include "lagfield/density.hpp"
#include "lagfield/grid.hpp"

namespace lagfield {

/// How per-point loss terms are combined: plain sum over the index set, or
/// the mean over it (sum divided by the number of terms).
enum class Reduction { sum, mean };

struct TrainConfig {
    int epochs = 1320;
    int batch_size = 10;
    double learning_rate = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double reg_weight = 1.0;
    double lambda_floor = 1e-8;
    unsigned long long seed = 0;
    /// Global gradient-norm clip applied before each adam step; 0 disables.
    double grad_clip = 1.0;
    Reduction reduction = Reduction::mean;
    int threads = 1;

    void validate() const;
};

struct LossTerms {
    double l_del = 0.0;
    double l_reg = 0.0;
    /// Summands of l_reg whose lambda_min^2 hit the floor.
    long floored = 0;
    /// Points in the index set (interior i, all j, over all grids).
    long count = 0;
};

/// l_DEL: squared Euclidean norms of DEL residuals over interior points of
/// every grid. Grids must share mesh and d.
double loss_del(const DensityModel& Ld, std::span<const FieldGrid> batch, Reduction r = Reduction::sum);

/// l_reg: 1 / max(lambda_min^2, lambda_floor) of the d12 block at the stencil
/// (u^i_j, u^{i+1}_j, u^i_{j+1}) over the same index set as loss_del.
double loss_reg(const DensityModel& Ld, std::span<const FieldGrid> batch, double lambda_floor,
                Reduction r = Reduction::sum, long* floored = nullptr);

/// Both losses in one pass.
LossTerms loss_terms(const DensityModel& Ld, std::span<const FieldGrid> batch, double lambda_floor,
                     Reduction r = Reduction::sum, int threads = 1);

struct LossGrad {
    LossTerms terms;
    double total = 0.0;  // l_del + reg_weight * l_reg
    std::vector<double> gradient;
};

/// Total loss and its exact parameter gradient for the neural density, using
/// the layer-wise analytic kernels (NeuralDensity::jet_vjp).
LossGrad neural_loss_grad(const NeuralDensity& Ld, std::span<const FieldGrid> batch, double reg_weight,
                          double lambda_floor, Reduction r = Reduction::sum, int threads = 1);

/// Same quantity through the generic engines: Dual2<Var> stencil derivatives
/// recorded on a reverse tape. Slow; used to cross-check the analytic path.
LossGrad neural_loss_grad_taped(const NeuralDensity& Ld, std::span<const FieldGrid> batch, double reg_weight,
                                double lambda_floor, Reduction r = Reduction::sum);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
};

/// One adam update with bias correction. Throws NumericalError on a
/// non-finite gradient.
void adam_step(std::span<double> theta, std::span<const double> gradient, AdamState& state, const TrainConfig& cfg);

struct EpochRecord {
    int epoch = 0;  // 0 is the initial evaluation, k the state after epoch k
    double l_del = 0.0;
    double l_reg = 0.0;
    double seconds = 0.0;
    long floored = 0;
};

struct TrainRecord {
    std::vector<EpochRecord> epochs;
    long adam_steps = 0;
    int best_epoch = 0;
    bool aborted = false;
    std::string abort_reason;
};

struct TrainResult {
    NeuralDensity density;
    TrainRecord record;
};

/// Minimises l_DEL + reg_weight * l_reg over the data with adam in batches of
/// whole trajectories (reshuffled each epoch from the seed). Losses are
/// evaluated on the full data after every epoch; the density with the lowest
/// recorded total is returned. A non-finite loss or gradient stops training
/// with the best state so far and record.aborted set.
TrainResult train(std::span<const FieldGrid> data, const TrainConfig& cfg);

/// As above, starting from the given parameters.
TrainResult train(std::span<const FieldGrid> data, const TrainConfig& cfg, const NeuralDensity& init);

}  // namespace lagfield
