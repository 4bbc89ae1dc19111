#include "reloss/metrics.hpp"

#include <cmath>
#include <string>

#include "reloss/random.hpp"

namespace reloss {

std::vector<float> BatchSample::positive_scores() const {
    if (!is_classification()) throw Error("positive_scores: batch has no labels");
    std::vector<float> out(size);
    for (std::size_t i = 0; i < size; ++i) {
        if (labels[i] >= width) throw Error("label " + std::to_string(labels[i]) + " out of range");
        out[i] = predictions[i * width + labels[i]];
    }
    return out;
}

void BatchSample::validate() const {
    if (size == 0 || width == 0) throw Error("batch is empty");
    if (predictions.size() != size * width) throw ShapeError("batch predictions length mismatch");
    if (!is_classification()) return;
    if (labels.size() != size) throw ShapeError("batch labels length mismatch");
    for (std::size_t i = 0; i < size; ++i) {
        if (labels[i] >= width) throw Error("label " + std::to_string(labels[i]) + " out of range");
        double total = 0.0;
        for (float p : row(i)) {
            if (!(p >= 0.0f)) throw Error("negative or non-finite probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-5) throw Error("probabilities do not sum to 1");
    }
}

double accuracy(const BatchSample& batch) {
    if (batch.size == 0) throw Error("accuracy: empty batch");
    if (!batch.is_classification()) throw Error("accuracy: batch has no labels");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < batch.size; ++i) {
        const auto row = batch.row(i);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) best = c;
        }
        if (best == batch.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(batch.size);
}

SyntheticMetric::SyntheticMetric(std::size_t input_width, std::uint64_t seed, std::size_t hidden, double weight_scale)
    : net_(build_lossnet(LossNetSpec::generic(input_width, hidden, 3),
                         derive_seed(seed, {0x5157})))  // separate stream from surrogate init
{
    if (!(weight_scale > 0.0)) throw Error("synthetic metric weight scale must be positive");
    if (weight_scale != 1.0) {
        for (auto& layer : net_.layers) {
            for (float& v : layer.weight.storage()) v = static_cast<float>(v * weight_scale);
            for (float& v : layer.bias.storage()) v = static_cast<float>(v * weight_scale);
        }
    }
}

double SyntheticMetric::evaluate(std::span<const float> x) const {
    if (x.size() != input_width()) {
        throw ShapeError("synthetic metric expects width " + std::to_string(input_width()) +
                         ", got " + std::to_string(x.size()));
    }
    return forward_vector(net_, x);
}

double SyntheticMetric::operator()(const BatchSample& batch) const {
    if (batch.size == 0) throw Error("synthetic metric: empty batch");
    if (batch.width != input_width()) {
        throw ShapeError("synthetic metric expects width " + std::to_string(input_width()) +
                         ", got " + std::to_string(batch.width));
    }
    const auto out = lossnet_rows(net_, Tensor<float>({batch.size, batch.width}, batch.predictions));
    double acc = 0.0;
    for (float v : out) acc += v;
    return acc / static_cast<double>(out.size());
}

}  // namespace reloss
