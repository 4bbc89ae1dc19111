#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "reloss/adam.hpp"
#include "reloss/csv.hpp"
#include "reloss/generators.hpp"
#include "reloss/lossnet.hpp"
#include "reloss/metrics.hpp"

namespace reloss {

enum class ObjectiveMode { Correlation, Approximation };

struct TrainerConfig {
    std::size_t sub_batches = 64;  // N
    double penalty_weight = 10.0;  // lambda
    double steepness = 2.0;        // soft-rank relaxation
    AdamConfig adam;
    std::size_t max_steps = 2000;
    std::size_t window = 50;              // validation / trailing-window length in steps
    double plateau_tolerance = 1e-3;
    std::size_t patience = 0;             // stale validation windows before stopping; 0 disables
    double target_spearman = -0.99;       // stop once the trailing mean reaches this
    std::size_t validation_sub_batches = 256;
    std::size_t warmup_sub_batches = 256; // approximation-mode normalization buffer
    std::uint64_t seed = 0;
    ObjectiveMode mode = ObjectiveMode::Correlation;
    bool alternate_training = false;
    std::size_t alternate_steps = 0;      // K surrogate steps per prediction-model epoch
    bool record_wall_clock = false;       // otherwise elapsed_ms is written as 0
    bool orient_init = true;              // correlation mode: start from the anti-aligned sign of the init

    void validate() const;
};

struct TrainLogRow {
    std::size_t step = 0;
    double objective = 0.0;
    double spearman_soft = 0.0;
    double spearman_hard = 0.0;
    double penalty_mean = 0.0;
    double elapsed_ms = 0.0;
};

class TrainLog {
public:
    void append(const TrainLogRow& row);
    const std::vector<TrainLogRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }
    const TrainLogRow& back() const { return rows_.back(); }

    double trailing_mean_hard(std::size_t window) const;
    double trailing_mean_penalty(std::size_t window) const;

    CsvWriter to_csv() const;
    void write(const std::filesystem::path& path) const { to_csv().write(path); }

private:
    std::vector<TrainLogRow> rows_;
};

/// What the surrogate is trained against: where sub-batches come from, the
/// metric scoring them and the network shape.
struct SurrogateTask {
    BatchSampler sampler;
    std::shared_ptr<const Metric> metric;
    LossNetSpec spec;
};

/// N sub-batches stacked as network inputs, with their metric values.
struct StepBatch {
    Tensor<float> inputs;        // [N * per_group, input_width]
    std::size_t groups = 0;
    std::vector<double> metric;  // raw metric values m_i
    std::vector<double> score;   // m_i oriented so that higher is better
};

/// Rows of a sub-batch as loss-net inputs: true-class probabilities for
/// classification, whole vectors for synthetic batches.
Tensor<float> lossnet_inputs(const BatchSample& batch);
StepBatch make_step_batch(const std::vector<BatchSample>& batches, const Metric& metric);
StepBatch draw_step_batch(const SurrogateTask& task, std::size_t n, std::uint64_t seed);

/// Affine map of raw metric values onto [0, 1] fitted on a warmup buffer.
struct Normalization {
    double lo = 0.0;
    double hi = 1.0;

    static Normalization fit(const std::vector<double>& values);
    double apply(double m) const { return (m - lo) / (hi - lo); }
};

struct StepObjective {
    double objective = 0.0;
    double spearman_soft = 0.0;
    double spearman_hard = 0.0;
    double penalty_mean = 0.0;
    std::vector<double> losses;           // l_i
    std::vector<Tensor<float>> gradients; // w.r.t. weights, bias per layer, interleaved
};

/// One evaluation of the Algorithm-1 objective (or the Eq.-5 regression in
/// approximation mode) on a drawn step batch.
StepObjective evaluate_objective(const TrainerConfig& cfg, const LossNetWeights& w, const StepBatch& batch,
                                 const Normalization& norm, bool with_gradients);

/// Surrogate value of every sub-batch, evaluated with the batched tape path.
std::vector<double> surrogate_values(const LossNetWeights& w, const StepBatch& batch);

struct SurrogateResult {
    LossNetWeights weights;        // best by validation
    LossNetWeights final_weights;  // after the last step
    TrainLog log;
    double validation_spearman = 0.0;  // hard Spearman(L, score) of `weights`
    std::size_t best_step = 0;
    std::string stop_reason;
    Normalization normalization;
};

class SurrogateTrainer {
public:
    SurrogateTrainer(TrainerConfig cfg, SurrogateTask task);
    SurrogateTrainer(TrainerConfig cfg, SurrogateTask task, LossNetWeights initial);

    /// One optimization step; returns the logged row.
    const TrainLogRow& step();
    /// Runs until max steps or a stopping rule fires. `after_step` sees the
    /// trainer after every step; returning false stops the run early.
    SurrogateResult run(const std::function<bool(const SurrogateTrainer&)>& after_step = {});
    /// k further steps without stopping rules (alternate training).
    void run_steps(std::size_t k);

    std::uint64_t batch_seed(std::size_t step) const;
    double recompute_objective(const LossNetWeights& w, std::size_t step) const;

    /// Hard Spearman between surrogate values and oriented metric scores on
    /// the fixed validation set.
    double validation_spearman(const LossNetWeights& w) const;
    /// The quantity used for best-weight selection (lower is better).
    double validation_objective(const LossNetWeights& w) const;

    const TrainerConfig& config() const { return cfg_; }
    const SurrogateTask& task() const { return task_; }
    void set_dumps(std::vector<PredictionDump> dumps) { task_.sampler.set_dumps(std::move(dumps)); }
    const LossNetWeights& weights() const { return weights_; }
    const LossNetWeights& best_weights() const { return best_; }
    const TrainLog& log() const { return log_; }
    const Normalization& normalization() const { return norm_; }
    std::size_t steps_done() const { return next_step_; }

private:
    void init();
    void validate_now();

    TrainerConfig cfg_;
    SurrogateTask task_;
    LossNetWeights weights_;
    LossNetWeights best_;
    double best_value_ = 0.0;
    std::size_t best_step_ = 0;
    std::size_t stale_ = 0;
    Adam adam_;
    TrainLog log_;
    Normalization norm_;
    StepBatch validation_;
    std::size_t next_step_ = 0;
    double start_ms_ = 0.0;
};

SurrogateResult train_surrogate_correlation(TrainerConfig cfg, SurrogateTask task);
SurrogateResult train_surrogate_approximation(TrainerConfig cfg, SurrogateTask task);

/// (||d L / d y||_2 - 1)^2 for one sub-batch, y being the flattened network
/// inputs of its samples.
double gradient_penalty(const LossNetWeights& w, const BatchSample& batch);

/// Mean over samples of |soft_rank(probabilities)[label] - num_classes|.
double rank_loss(const BatchSample& batch, double steepness);

namespace ad {

/// Taped rank loss over a [B, K] probability matrix.
template <typename T>
NodeId rank_loss_rows(Graph<T>& graph, NodeId probs, std::shared_ptr<const std::vector<std::uint32_t>> labels,
                      T steepness);

}  // namespace ad

}  // namespace reloss
