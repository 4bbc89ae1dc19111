#include "reloss/toy.hpp"

#include <cmath>
#include <memory>
#include <numeric>

#include "reloss/trainer.hpp"

namespace reloss {

using ad::NodeId;

namespace {

constexpr std::uint64_t kCentersStream = 11;
constexpr std::uint64_t kTrainStream = 12;
constexpr std::uint64_t kValidationStream = 13;
constexpr std::uint64_t kInitStream = 14;
constexpr std::uint64_t kShuffleStream = 15;
constexpr std::uint64_t kPointsStream = 16;

Dataset sample_blobs(const std::vector<std::vector<double>>& centers, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t dim = centers.front().size();
    Dataset d;
    d.classes = centers.size();
    d.x = Tensor<float>({n, dim});
    d.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto label = static_cast<std::uint32_t>(rng.below(centers.size()));
        d.y[i] = label;
        for (std::size_t j = 0; j < dim; ++j) d.x(i, j) = static_cast<float>(centers[label][j] + rng.normal());
    }
    return d;
}

struct ClassifierNodes {
    std::vector<NodeId> weights;
    std::vector<NodeId> biases;
};

ClassifierNodes place(ad::Graph<float>& g, const Classifier& model, bool trainable) {
    ClassifierNodes nodes;
    for (const auto& layer : model.layers) {
        nodes.weights.push_back(trainable ? g.parameter(layer.weight) : g.constant(layer.weight));
        nodes.biases.push_back(trainable ? g.parameter(layer.bias) : g.constant(layer.bias));
    }
    return nodes;
}

NodeId logits(ad::Graph<float>& g, const ClassifierNodes& nodes, NodeId x) {
    NodeId h = x;
    for (std::size_t l = 0; l < nodes.weights.size(); ++l) {
        h = g.affine(h, nodes.weights[l], nodes.biases[l]);
        if (l + 1 < nodes.weights.size()) h = g.elu(h);
    }
    return h;
}

Tensor<float> gather_rows(const Tensor<float>& x, std::span<const std::size_t> idx) {
    Tensor<float> out({idx.size(), x.cols()});
    for (std::size_t r = 0; r < idx.size(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(idx[r], c);
    }
    return out;
}

}  // namespace

BlobsData make_blobs(const BlobsConfig& cfg) {
    if (cfg.classes < 2 || cfg.dim == 0 || cfg.train == 0 || cfg.validation == 0) {
        throw Error("blobs need >= 2 classes and non-empty splits");
    }
    Rng rng(derive_seed(cfg.seed, {kCentersStream}));
    std::vector<std::vector<double>> centers(cfg.classes, std::vector<double>(cfg.dim));
    for (auto& c : centers) {
        for (double& v : c) v = cfg.center_scale * rng.normal();
    }
    return {sample_blobs(centers, cfg.train, derive_seed(cfg.seed, {kTrainStream})),
            sample_blobs(centers, cfg.validation, derive_seed(cfg.seed, {kValidationStream}))};
}

Classifier build_classifier(std::size_t input, std::size_t hidden, std::size_t hidden_layers, std::size_t classes,
                            std::uint64_t seed) {
    LossNetSpec spec;
    spec.widths = {input};
    for (std::size_t i = 0; i < hidden_layers; ++i) spec.widths.push_back(hidden);
    spec.widths.push_back(classes);
    Rng rng(seed);
    Classifier model;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
        if (in == 0 || out == 0) throw Error("classifier widths must be positive");
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        LossNetLayer layer{Tensor<float>({out, in}), Tensor<float>({1, out})};
        for (std::size_t i = 0; i < layer.weight.numel(); ++i) layer.weight[i] = static_cast<float>(rng.uniform(-bound, bound));
        for (std::size_t i = 0; i < layer.bias.numel(); ++i) layer.bias[i] = static_cast<float>(rng.uniform(-bound, bound));
        model.layers.push_back(std::move(layer));
    }
    return model;
}

Tensor<float> predict_probs(const Classifier& model, const Tensor<float>& x) {
    ad::Graph<float> g;
    const auto nodes = place(g, model, false);
    return g.value(g.exp(g.log_softmax_rows(logits(g, nodes, g.input(x)))));
}

double dataset_accuracy(const Classifier& model, const Dataset& data) {
    const auto probs = predict_probs(model, data.x);
    BatchSample b{data.size(), probs.cols(), probs.storage(), data.y};
    return accuracy(b);
}

PredictionDump dump_predictions(const Classifier& model, const Dataset& data) {
    auto probs = predict_probs(model, data.x);
    // renormalize in float so rows sum to 1 after exp(log-softmax)
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        float total = 0.0f;
        for (std::size_t c = 0; c < probs.cols(); ++c) total += probs(r, c);
        for (std::size_t c = 0; c < probs.cols(); ++c) probs(r, c) /= total;
    }
    return PredictionDump{probs.cols(), data.y, probs.storage()};
}

std::string loss_mode_name(LossMode mode) {
    switch (mode) {
        case LossMode::CE: return "ce";
        case LossMode::ReLoss: return "reloss";
        case LossMode::CEPlusReLoss: return "ce+reloss";
        case LossMode::Approx: return "approx";
        case LossMode::RankLoss: return "rankloss";
    }
    return "?";
}

LossMode parse_loss_mode(const std::string& name) {
    for (LossMode m : {LossMode::CE, LossMode::ReLoss, LossMode::CEPlusReLoss, LossMode::Approx, LossMode::RankLoss}) {
        if (loss_mode_name(m) == name) return m;
    }
    throw UsageError("unknown loss mode '" + name + "' (ce, reloss, ce+reloss, approx, rankloss)");
}

PredictionModelResult train_prediction_model(LossMode mode, const BlobsData& data, const ToyTrainConfig& cfg,
                                             std::optional<LossNetWeights> surrogate, bool negate_surrogate,
                                             const EpochHook& hook) {
    const bool needs_surrogate = mode == LossMode::ReLoss || mode == LossMode::CEPlusReLoss || mode == LossMode::Approx;
    if (needs_surrogate && !surrogate) throw Error("loss mode " + loss_mode_name(mode) + " needs a trained loss");
    if (surrogate && surrogate->input_width() != 1) throw ShapeError("classification loss nets take width-1 inputs");
    if (cfg.batch_size == 0) throw Error("batch size must be positive");

    const Dataset& train = data.train;
    PredictionModelResult out;
    out.model = build_classifier(train.x.cols(), cfg.hidden, cfg.hidden_layers, train.classes,
                                 derive_seed(cfg.seed, {kInitStream}));
    Adam adam(cfg.adam);
    auto record = [&] {
        out.accuracy_trace.push_back(dataset_accuracy(out.model, data.validation));
        if (cfg.keep_dumps) out.dumps.push_back(dump_predictions(out.model, train));
    };
    record();

    std::vector<std::size_t> order(train.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(cfg.seed, {kShuffleStream, epoch}));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            auto labels = std::make_shared<std::vector<std::uint32_t>>();
            for (std::size_t i : idx) labels->push_back(train.y[i]);

            ad::Graph<float> g;
            const auto nodes = place(g, out.model, true);
            const NodeId logp = g.log_softmax_rows(logits(g, nodes, g.input(gather_rows(train.x, idx))));
            const NodeId picked = g.select_cols(logp, labels);  // [B, 1] log p_true
            NodeId loss = 0;
            auto learned = [&] {
                const auto net = ad::place_lossnet(g, *surrogate, false);
                const NodeId l = g.mean(ad::lossnet_forward(g, net, g.exp(picked)));
                return negate_surrogate ? g.neg(l) : l;
            };
            switch (mode) {
                case LossMode::CE: loss = g.neg(g.mean(picked)); break;
                case LossMode::ReLoss:
                case LossMode::Approx: loss = learned(); break;
                case LossMode::CEPlusReLoss:
                    loss = g.add(g.neg(g.mean(picked)), g.scale_shift(learned(), static_cast<float>(cfg.alpha)));
                    break;
                case LossMode::RankLoss:
                    loss = ad::rank_loss_rows(g, g.exp(logp), labels, static_cast<float>(cfg.steepness));
                    break;
            }
            if (!std::isfinite(g.value(loss).item())) throw DivergenceError("prediction-model loss became non-finite");

            std::vector<NodeId> wrt;
            std::vector<Tensor<float>*> params;
            for (std::size_t l = 0; l < out.model.layers.size(); ++l) {
                wrt.push_back(nodes.weights[l]);
                wrt.push_back(nodes.biases[l]);
                params.push_back(&out.model.layers[l].weight);
                params.push_back(&out.model.layers[l].bias);
            }
            const auto grad_ids = g.gradient(loss, wrt);
            std::vector<Tensor<float>> grads;
            for (NodeId id : grad_ids) grads.push_back(g.value(id));
            adam.step(params, grads);
        }
        record();
        if (hook) {
            LossNetWeights scratch;
            hook(epoch, out.model, surrogate ? *surrogate : scratch);
        }
    }
    out.accuracy = out.accuracy_trace.back();
    return out;
}

double ce_loss(const BatchSample& batch) {
    const auto p = batch.positive_scores();
    double acc = 0.0;
    for (float v : p) acc -= std::log(std::max(static_cast<double>(v), 1e-12));
    return acc / static_cast<double>(p.size());
}

DescentTrace descend_inputs(const LossNetWeights& objective, double sign, const SyntheticMetric& metric,
                            const DescentConfig& cfg) {
    const std::size_t d = metric.input_width();
    if (objective.input_width() != d) throw ShapeError("descent objective width does not match the metric");
    if (cfg.points == 0) throw Error("descent needs at least one point");
    Rng rng(derive_seed(cfg.seed, {kPointsStream}));
    Tensor<float> x({cfg.points, d});
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = static_cast<float>(cfg.input_scale * rng.normal());

    Adam adam(AdamConfig{cfg.learning_rate, 0.0});
    DescentTrace trace;
    auto record = [&](std::size_t step) {
        BatchSample b{cfg.points, d, x.storage(), {}};
        trace.steps.push_back(step);
        trace.metric.push_back(metric(b));
    };
    record(0);
    const std::size_t every = std::max<std::size_t>(1, cfg.record_every);
    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        ad::Graph<float> g;
        const auto net = ad::place_lossnet(g, objective, false);
        const NodeId xi = g.parameter(x);
        const NodeId total = g.scale_shift(g.sum(ad::lossnet_forward(g, net, xi)), static_cast<float>(sign));
        Tensor<float> grad = g.value(g.gradient(total, xi));
        Tensor<float>* params[] = {&x};
        adam.step(params, std::span<const Tensor<float>>(&grad, 1));
        if (step % every == 0 || step == cfg.steps) record(step);
    }
    return trace;
}

}  // namespace reloss
