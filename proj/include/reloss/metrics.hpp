#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "reloss/graph.hpp"
#include "reloss/lossnet.hpp"

namespace reloss {

/// One sub-batch: the unit over which a single loss value and a single metric
/// value are computed. Classification batches carry per-sample class
/// probabilities and labels; synthetic batches carry raw vectors and no labels.
struct BatchSample {
    std::size_t size = 0;
    std::size_t width = 0;
    std::vector<float> predictions;      // size x width, row-major
    std::vector<std::uint32_t> labels;   // empty for synthetic batches

    bool is_classification() const { return !labels.empty(); }
    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(predictions).subspan(i * width, width);
    }
    /// Probability assigned to the true class of every sample.
    std::vector<float> positive_scores() const;
    /// Throws unless probabilities are non-negative, sum to 1 within 1e-5 per
    /// sample and labels lie in [0, width).
    void validate() const;

    bool operator==(const BatchSample&) const = default;
};

class Metric {
public:
    virtual ~Metric() = default;
    virtual std::string_view name() const = 0;
    virtual bool higher_is_better() const = 0;
    virtual double operator()(const BatchSample& batch) const = 0;

    /// The metric oriented so that larger is better.
    double score(const BatchSample& batch) const {
        const double v = (*this)(batch);
        return higher_is_better() ? v : -v;
    }
};

/// Fraction of samples whose argmax (lowest index on ties) equals the label.
double accuracy(const BatchSample& batch);

class AccuracyMetric final : public Metric {
public:
    std::string_view name() const override { return "accuracy"; }
    bool higher_is_better() const override { return true; }
    double operator()(const BatchSample& batch) const override { return accuracy(batch); }
};

/// A frozen, randomly initialized MLP (d -> 32 -> 32 -> 1, ELU) used as an
/// opaque evaluation metric. Lower is better. Batch value is the mean output
/// over the batch's rows.
class SyntheticMetric final : public Metric {
public:
    /// `weight_scale` multiplies the default +-1/sqrt(fan_in) initialization.
    SyntheticMetric(std::size_t input_width, std::uint64_t seed, std::size_t hidden = 32, double weight_scale = 1.0);

    std::string_view name() const override { return "synthetic"; }
    bool higher_is_better() const override { return false; }
    double operator()(const BatchSample& batch) const override;
    double evaluate(std::span<const float> x) const;

    std::size_t input_width() const { return net_.input_width(); }
    const LossNetWeights& network() const { return net_; }

private:
    LossNetWeights net_;
};

}  // namespace reloss
