#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "reloss/graph.hpp"

namespace reloss {

struct BatchSample;

/// Layer widths of the surrogate MLP, input first. Hidden layers use ELU; the
/// last affine layer is linear.
struct LossNetSpec {
    std::vector<std::size_t> widths{1, 128, 128, 128, 1};

    static LossNetSpec classification(std::size_t hidden = 128, std::size_t affine_layers = 4);
    static LossNetSpec generic(std::size_t input_width, std::size_t hidden = 128,
                               std::size_t affine_layers = 4);

    std::size_t input_width() const { return widths.front(); }
    std::size_t parameter_count() const;
    void validate() const;
};

struct LossNetLayer {
    Tensor<float> weight;  // [out, in]
    Tensor<float> bias;    // [1, out]

    bool operator==(const LossNetLayer&) const = default;
};

struct LossNetWeights {
    std::vector<LossNetLayer> layers;

    LossNetSpec spec() const;
    std::size_t parameter_count() const;
    std::size_t input_width() const;
    bool operator==(const LossNetWeights&) const = default;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization for weights and biases.
LossNetWeights build_lossnet(const LossNetSpec& spec, std::uint64_t seed);
LossNetWeights zero_lossnet(const LossNetSpec& spec);

/// Per-row network outputs for an [m, input_width] matrix.
std::vector<float> lossnet_rows(const LossNetWeights& w, const Tensor<float>& inputs);

/// Mean of the per-sample network outputs over a batch of scalar inputs.
float forward_loss(const LossNetWeights& w, std::span<const float> y_pos);

/// Surrogate loss of a sub-batch. Classification samples are reduced to the
/// probability of their true class; synthetic rows are fed as whole vectors.
float forward_loss(const LossNetWeights& w, const BatchSample& batch);

/// Output for one generic input vector.
float forward_vector(const LossNetWeights& w, std::span<const float> x);

namespace ad {

struct LossNetNodes {
    std::vector<NodeId> weights;
    std::vector<NodeId> biases;

    std::vector<NodeId> all() const;
};

/// Places the weights on the tape, as trainable parameters or as constants.
template <typename T>
LossNetNodes place_lossnet(Graph<T>& graph, const LossNetWeights& w, bool trainable);

/// [m, in] -> [m, 1] per-row network output.
template <typename T>
NodeId lossnet_forward(Graph<T>& graph, const LossNetNodes& net, NodeId inputs);

}  // namespace ad

// Binary checkpoint: "RELOSS01", u32 layer count, then per layer u32 in_dim,
// u32 out_dim, out*in weights (row-major) and out biases as little-endian
// float32, then a little-endian u64 FNV-1a hash of every byte after the magic.
void save_checkpoint(const LossNetWeights& w, const std::filesystem::path& path);
LossNetWeights load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const LossNetWeights& w);
LossNetWeights decode_checkpoint(std::span<const std::uint8_t> bytes);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace reloss
