#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "reloss/adam.hpp"
#include "reloss/generators.hpp"
#include "reloss/lossnet.hpp"
#include "reloss/metrics.hpp"

namespace reloss {

// ---- toy classification ----------------------------------------------------

struct BlobsConfig {
    std::size_t classes = 8;
    std::size_t dim = 16;
    std::size_t train = 2000;
    std::size_t validation = 1000;
    double center_scale = 0.6;  // class centres ~ N(0, scale^2 I), points ~ centre + N(0, I)
    std::uint64_t seed = 0;
};

struct Dataset {
    Tensor<float> x;                  // [n, dim]
    std::vector<std::uint32_t> y;
    std::size_t classes = 0;

    std::size_t size() const { return y.size(); }
};

struct BlobsData {
    Dataset train;
    Dataset validation;
};

BlobsData make_blobs(const BlobsConfig& cfg);

/// ELU MLP classifier; layers stored like the loss net ([out, in] weights).
struct Classifier {
    std::vector<LossNetLayer> layers;

    std::size_t classes() const { return layers.back().weight.rows(); }
    bool operator==(const Classifier&) const = default;
};

Classifier build_classifier(std::size_t input, std::size_t hidden, std::size_t hidden_layers, std::size_t classes,
                            std::uint64_t seed);

/// Softmax probabilities, [n, classes].
Tensor<float> predict_probs(const Classifier& model, const Tensor<float>& x);
double dataset_accuracy(const Classifier& model, const Dataset& data);
PredictionDump dump_predictions(const Classifier& model, const Dataset& data);

enum class LossMode { CE, ReLoss, CEPlusReLoss, Approx, RankLoss };

std::string loss_mode_name(LossMode mode);
LossMode parse_loss_mode(const std::string& name);

struct ToyTrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 128;
    std::size_t hidden = 64;
    std::size_t hidden_layers = 2;
    AdamConfig adam{0.005, 1e-4};
    double alpha = 1.0;       // weight of the learned loss in ce+reloss mode
    double steepness = 2.0;   // rank-loss relaxation
    bool keep_dumps = false;  // dump training-set predictions after every epoch (and before the first)
    std::uint64_t seed = 0;
};

struct PredictionModelResult {
    Classifier model;
    std::vector<double> accuracy_trace;  // validation accuracy before training and after each epoch
    double accuracy = 0.0;               // final validation accuracy
    std::vector<PredictionDump> dumps;
};

/// Called after every epoch; may update the surrogate used for later epochs.
using EpochHook = std::function<void(std::size_t epoch, const Classifier& model, LossNetWeights& surrogate)>;

/// Trains the toy classifier under the selected loss. `surrogate` is required
/// for the reloss, ce+reloss and approx modes; `negate_surrogate` flips its
/// sign (approximation-trained losses of higher-is-better metrics).
PredictionModelResult train_prediction_model(LossMode mode, const BlobsData& data, const ToyTrainConfig& cfg,
                                             std::optional<LossNetWeights> surrogate = std::nullopt,
                                             bool negate_surrogate = false, const EpochHook& hook = {});

/// Per-sample loss values of a trained-loss-free mode over a sub-batch, used
/// when measuring how a loss correlates with accuracy.
double ce_loss(const BatchSample& batch);

// ---- synthetic free-input descent --------------------------------------------

struct DescentConfig {
    std::size_t points = 64;
    std::size_t steps = 300;
    std::size_t record_every = 10;
    double learning_rate = 0.01;
    double input_scale = 1.0;
    std::uint64_t seed = 0;
};

struct DescentTrace {
    std::vector<std::size_t> steps;
    std::vector<double> metric;  // mean true metric over the points
};

/// Descends free inputs x (P points ~ N(0, scale^2 I)) on sign * net(x) with
/// Adam, recording the mean true metric.
DescentTrace descend_inputs(const LossNetWeights& objective, double sign, const SyntheticMetric& metric,
                            const DescentConfig& cfg);

}  // namespace reloss
