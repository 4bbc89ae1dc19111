#include "reloss/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "reloss/correlation.hpp"
#include "reloss/objective.hpp"
#include "reloss/softrank.hpp"

namespace reloss {

using ad::NodeId;

namespace {

// seed streams
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kValidationStream = 3;
constexpr std::uint64_t kWarmupStream = 4;

double now_ms() {
    using namespace std::chrono;
    return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

std::vector<double> column_values(const Tensor<float>& t) {
    return std::vector<double>(t.data().begin(), t.data().end());
}

std::vector<BatchSample> draw_batches(const BatchSampler& sampler, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<BatchSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.sample(rng));
    return out;
}

double trailing_mean(const std::vector<TrainLogRow>& rows, std::size_t window, double TrainLogRow::*field) {
    if (rows.empty()) return 0.0;
    const std::size_t k = std::min(window, rows.size());
    double acc = 0.0;
    for (std::size_t i = rows.size() - k; i < rows.size(); ++i) acc += rows[i].*field;
    return acc / static_cast<double>(k);
}

}  // namespace

void TrainerConfig::validate() const {
    if (sub_batches < 3) throw Error("trainer needs N >= 3 sub-batches per step");
    if (penalty_weight < 0.0) throw Error("penalty weight must be non-negative");
    if (!(steepness > 0.0)) throw Error("steepness must be positive");
    adam.validate();
    if (window == 0) throw Error("window must be positive");
    if (validation_sub_batches < 3) throw Error("validation needs at least 3 sub-batches");
    if (mode == ObjectiveMode::Approximation && warmup_sub_batches == 0) {
        throw Error("approximation mode needs a warmup buffer");
    }
}

// ---- log -------------------------------------------------------------------

void TrainLog::append(const TrainLogRow& row) {
    if (!rows_.empty() && row.step <= rows_.back().step) throw Error("train log steps must increase");
    rows_.push_back(row);
}

double TrainLog::trailing_mean_hard(std::size_t window) const {
    return trailing_mean(rows_, window, &TrainLogRow::spearman_hard);
}

double TrainLog::trailing_mean_penalty(std::size_t window) const {
    return trailing_mean(rows_, window, &TrainLogRow::penalty_mean);
}

CsvWriter TrainLog::to_csv() const {
    CsvWriter csv({"step", "objective", "spearman_soft", "spearman_hard", "penalty_mean", "elapsed_ms"});
    for (const auto& r : rows_) {
        csv.add({std::to_string(r.step), csv_number(r.objective), csv_number(r.spearman_soft),
                 csv_number(r.spearman_hard), csv_number(r.penalty_mean), csv_number(r.elapsed_ms)});
    }
    return csv;
}

// ---- batches ---------------------------------------------------------------

Tensor<float> lossnet_inputs(const BatchSample& batch) {
    if (batch.is_classification()) return Tensor<float>::column(batch.positive_scores());
    return Tensor<float>({batch.size, batch.width}, batch.predictions);
}

StepBatch make_step_batch(const std::vector<BatchSample>& batches, const Metric& metric) {
    if (batches.empty()) throw Error("step batch needs at least one sub-batch");
    StepBatch out;
    out.groups = batches.size();
    std::vector<float> stacked;
    std::size_t rows = 0, cols = 0;
    for (const auto& b : batches) {
        const auto in = lossnet_inputs(b);
        if (rows == 0) cols = in.cols();
        if (in.cols() != cols || in.rows() != batches.front().size) {
            throw ShapeError("sub-batches of one step must share their shape");
        }
        rows += in.rows();
        stacked.insert(stacked.end(), in.data().begin(), in.data().end());
        const double m = metric(b);
        out.metric.push_back(m);
        out.score.push_back(metric.higher_is_better() ? m : -m);
    }
    out.inputs = Tensor<float>({rows, cols}, std::move(stacked));
    return out;
}

StepBatch draw_step_batch(const SurrogateTask& task, std::size_t n, std::uint64_t seed) {
    return make_step_batch(draw_batches(task.sampler, n, seed), *task.metric);
}

Normalization Normalization::fit(const std::vector<double>& values) {
    Normalization n;
    if (values.empty()) return n;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    // a degenerate buffer leaves targets unscaled
    if (*hi - *lo > 1e-12) {
        n.lo = *lo;
        n.hi = *hi;
    }
    return n;
}

// ---- objective -------------------------------------------------------------

StepObjective evaluate_objective(const TrainerConfig& cfg, const LossNetWeights& w, const StepBatch& batch,
                                 const Normalization& norm, bool with_gradients) {
    ad::Graph<float> g;
    const auto net = ad::place_lossnet(g, w, true);
    const NodeId x = g.input(batch.inputs);
    const std::size_t n = batch.groups;
    const NodeId losses = ad::grouped_loss(g, net, x, n);  // [N, 1]
    const NodeId penalties = ad::penalty_terms(g, losses, x, n);
    const NodeId penalty_mean = g.mean(penalties);
    const NodeId loss_row = g.reshape(losses, {1, n});

    StepObjective out;
    out.losses = column_values(g.value(losses));
    out.penalty_mean = g.value(penalty_mean).item();
    const auto score_ranks = hard_rank(batch.score);
    out.spearman_hard = spearman_hard(out.losses, batch.score).value;

    NodeId objective;
    if (cfg.mode == ObjectiveMode::Correlation) {
        std::vector<float> ranks(score_ranks.begin(), score_ranks.end());
        const NodeId r = g.constant(Tensor<float>::row(std::span<const float>(ranks)));
        const NodeId rho = ad::spearman_soft_vs_ranks(g, loss_row, r, static_cast<float>(cfg.steepness));
        out.spearman_soft = g.value(rho).item();
        objective = cfg.penalty_weight > 0.0
                        ? g.add(rho, g.scale_shift(penalty_mean, static_cast<float>(cfg.penalty_weight)))
                        : rho;
    } else {
        std::vector<float> target(n);
        for (std::size_t i = 0; i < n; ++i) target[i] = static_cast<float>(norm.apply(batch.metric[i]));
        const NodeId t = g.constant(Tensor<float>({n, 1}, std::move(target)));
        objective = g.mean(g.square(g.sub(losses, t)));
        out.spearman_soft = pearson(soft_rank<double>(out.losses, cfg.steepness), score_ranks);
    }
    out.objective = g.value(objective).item();
    if (!std::isfinite(out.objective)) throw DivergenceError("surrogate objective became non-finite");

    if (with_gradients) {
        const auto params = net.all();
        const auto grads = g.gradient(objective, params);
        for (NodeId id : grads) out.gradients.push_back(g.value(id));
    }
    return out;
}

std::vector<double> surrogate_values(const LossNetWeights& w, const StepBatch& batch) {
    ad::Graph<float> g;
    const auto net = ad::place_lossnet(g, w, false);
    const NodeId losses = ad::grouped_loss(g, net, g.input(batch.inputs), batch.groups);
    return column_values(g.value(losses));
}

// ---- trainer ---------------------------------------------------------------

SurrogateTrainer::SurrogateTrainer(TrainerConfig cfg, SurrogateTask task)
    : cfg_(cfg), task_(std::move(task)), adam_(cfg.adam) {
    cfg_.validate();
    weights_ = build_lossnet(task_.spec, derive_seed(cfg_.seed, {kInitStream}));
    init();
    // The init distribution is sign-symmetric, so negating the output layer is
    // an equally likely draw. Starting anti-aligned matters under the penalty:
    // flipping the slope later means crossing ||grad|| = 0, which costs lambda.
    if (cfg_.orient_init && cfg_.mode == ObjectiveMode::Correlation && best_value_ > 0.0) {
        auto& out = weights_.layers.back();
        for (std::size_t i = 0; i < out.weight.numel(); ++i) out.weight[i] = -out.weight[i];
        for (std::size_t i = 0; i < out.bias.numel(); ++i) out.bias[i] = -out.bias[i];
        best_ = weights_;
        best_value_ = validation_objective(weights_);
    }
}

SurrogateTrainer::SurrogateTrainer(TrainerConfig cfg, SurrogateTask task, LossNetWeights initial)
    : cfg_(cfg), task_(std::move(task)), weights_(std::move(initial)), adam_(cfg.adam) {
    cfg_.validate();
    init();
}

void SurrogateTrainer::init() {
    if (!task_.metric) throw Error("surrogate task has no metric");
    if (weights_.input_width() != task_.spec.input_width()) throw ShapeError("initial weights do not match the task");
    validation_ = draw_step_batch(task_, cfg_.validation_sub_batches, derive_seed(cfg_.seed, {kValidationStream}));
    if (cfg_.mode == ObjectiveMode::Approximation) {
        norm_ = Normalization::fit(
            draw_step_batch(task_, cfg_.warmup_sub_batches, derive_seed(cfg_.seed, {kWarmupStream})).metric);
    }
    best_ = weights_;
    best_value_ = validation_objective(weights_);
    best_step_ = 0;
    start_ms_ = cfg_.record_wall_clock ? now_ms() : 0.0;
}

std::uint64_t SurrogateTrainer::batch_seed(std::size_t step) const {
    return derive_seed(cfg_.seed, {kBatchStream, step});
}

double SurrogateTrainer::recompute_objective(const LossNetWeights& w, std::size_t step) const {
    const auto batch = draw_step_batch(task_, cfg_.sub_batches, batch_seed(step));
    return evaluate_objective(cfg_, w, batch, norm_, false).objective;
}

double SurrogateTrainer::validation_spearman(const LossNetWeights& w) const {
    return spearman_hard(surrogate_values(w, validation_), validation_.score).value;
}

double SurrogateTrainer::validation_objective(const LossNetWeights& w) const {
    if (cfg_.mode == ObjectiveMode::Correlation) return validation_spearman(w);
    const auto values = surrogate_values(w, validation_);
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - norm_.apply(validation_.metric[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(values.size());
}

const TrainLogRow& SurrogateTrainer::step() {
    const std::size_t s = next_step_;
    const auto batch = draw_step_batch(task_, cfg_.sub_batches, batch_seed(s));
    auto result = evaluate_objective(cfg_, weights_, batch, norm_, true);

    std::vector<Tensor<float>*> params;
    for (auto& layer : weights_.layers) {
        params.push_back(&layer.weight);
        params.push_back(&layer.bias);
    }
    adam_.step(params, result.gradients);

    TrainLogRow row;
    row.step = s;
    row.objective = result.objective;
    row.spearman_soft = result.spearman_soft;
    row.spearman_hard = result.spearman_hard;
    row.penalty_mean = result.penalty_mean;
    row.elapsed_ms = cfg_.record_wall_clock ? now_ms() - start_ms_ : 0.0;
    log_.append(row);
    ++next_step_;
    return log_.back();
}

void SurrogateTrainer::validate_now() {
    const double value = validation_objective(weights_);
    if (value < best_value_ - cfg_.plateau_tolerance) {
        stale_ = 0;
    } else {
        ++stale_;
    }
    if (value < best_value_) {
        best_value_ = value;
        best_ = weights_;
        best_step_ = next_step_;
    }
}

void SurrogateTrainer::run_steps(std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) step();
    best_ = weights_;
    best_step_ = next_step_;
}

SurrogateResult SurrogateTrainer::run(const std::function<bool(const SurrogateTrainer&)>& after_step) {
    std::string reason = "max_steps";
    while (next_step_ < cfg_.max_steps) {
        step();
        const bool boundary = next_step_ % cfg_.window == 0 || next_step_ == cfg_.max_steps;
        const bool reached = cfg_.mode == ObjectiveMode::Correlation && log_.rows().size() >= cfg_.window &&
                             log_.trailing_mean_hard(cfg_.window) <= cfg_.target_spearman;
        if (boundary || reached) validate_now();
        if (reached) {
            reason = "target";
            break;
        }
        if (boundary && cfg_.patience > 0 && stale_ >= cfg_.patience) {
            reason = "plateau";
            break;
        }
        if (after_step && !after_step(*this)) {
            reason = "observer";
            break;
        }
    }
    SurrogateResult out;
    out.weights = best_;
    out.final_weights = weights_;
    out.log = log_;
    out.validation_spearman = validation_spearman(best_);
    out.best_step = best_step_;
    out.stop_reason = reason;
    out.normalization = norm_;
    return out;
}

SurrogateResult train_surrogate_correlation(TrainerConfig cfg, SurrogateTask task) {
    if (cfg.mode != ObjectiveMode::Correlation) throw Error("train_surrogate_correlation needs correlation mode");
    return SurrogateTrainer(cfg, std::move(task)).run();
}

SurrogateResult train_surrogate_approximation(TrainerConfig cfg, SurrogateTask task) {
    if (cfg.mode != ObjectiveMode::Approximation) {
        throw Error("train_surrogate_approximation needs approximation mode");
    }
    return SurrogateTrainer(cfg, std::move(task)).run();
}

// ---- standalone losses -----------------------------------------------------

double gradient_penalty(const LossNetWeights& w, const BatchSample& batch) {
    if (batch.size == 0) throw Error("gradient_penalty: empty batch");
    ad::Graph<double> g;
    const auto net = ad::place_lossnet(g, w, true);
    const auto in = lossnet_inputs(batch);
    const NodeId x = g.input(Tensor<double>(in.shape(), std::vector<double>(in.data().begin(), in.data().end())));
    const NodeId loss = ad::grouped_loss(g, net, x, 1);
    const double value = g.value(ad::penalty_terms(g, loss, x, 1)).item();
    if (!std::isfinite(value)) throw DivergenceError("gradient penalty is non-finite");
    return value;
}

double rank_loss(const BatchSample& batch, double steepness) {
    if (batch.size == 0) throw Error("rank_loss: empty batch");
    if (!batch.is_classification()) throw Error("rank_loss needs a classification batch");
    const double k = static_cast<double>(batch.width);
    double acc = 0.0;
    for (std::size_t i = 0; i < batch.size; ++i) {
        const auto row = batch.row(i);
        const std::vector<double> probs(row.begin(), row.end());
        const auto ranks = soft_rank<double>(probs, steepness);
        acc += std::abs(ranks[batch.labels[i]] - k);
    }
    return acc / static_cast<double>(batch.size);
}

namespace ad {

template <typename T>
NodeId rank_loss_rows(Graph<T>& graph, NodeId probs, std::shared_ptr<const std::vector<std::uint32_t>> labels,
                      T steepness) {
    const T k = static_cast<T>(graph.shape(probs).cols);
    const NodeId ranks = soft_rank_rows(graph, probs, steepness);
    const NodeId picked = graph.select_cols(ranks, std::move(labels));
    return graph.mean(graph.abs(graph.scale_shift(picked, T(1), -k)));
}

template NodeId rank_loss_rows<float>(Graph<float>&, NodeId, std::shared_ptr<const std::vector<std::uint32_t>>,
                                      float);
template NodeId rank_loss_rows<double>(Graph<double>&, NodeId, std::shared_ptr<const std::vector<std::uint32_t>>,
                                       double);

}  // namespace ad

}  // namespace reloss
