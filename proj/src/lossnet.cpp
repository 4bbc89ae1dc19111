#include "reloss/lossnet.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>

#include "reloss/metrics.hpp"
#include "reloss/random.hpp"

namespace reloss {

LossNetSpec LossNetSpec::classification(std::size_t hidden, std::size_t affine_layers) {
    return generic(1, hidden, affine_layers);
}

LossNetSpec LossNetSpec::generic(std::size_t input_width, std::size_t hidden,
                                 std::size_t affine_layers) {
    LossNetSpec spec;
    spec.widths.assign(1, input_width);
    for (std::size_t i = 0; i + 1 < affine_layers; ++i) spec.widths.push_back(hidden);
    spec.widths.push_back(1);
    spec.validate();
    return spec;
}

std::size_t LossNetSpec::parameter_count() const {
    std::size_t total = 0;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) total += widths[i] * widths[i + 1] + widths[i + 1];
    return total;
}

void LossNetSpec::validate() const {
    if (widths.size() < 3) throw Error("loss net needs at least 2 affine layers");
    if (widths.back() != 1) throw Error("loss net output width must be 1");
    for (std::size_t w : widths) {
        if (w == 0) throw Error("loss net widths must be positive");
    }
}

LossNetSpec LossNetWeights::spec() const {
    LossNetSpec s;
    s.widths.clear();
    if (layers.empty()) return s;
    s.widths.push_back(layers.front().weight.cols());
    for (const auto& l : layers) s.widths.push_back(l.weight.rows());
    return s;
}

std::size_t LossNetWeights::parameter_count() const {
    std::size_t total = 0;
    for (const auto& l : layers) total += l.weight.numel() + l.bias.numel();
    return total;
}

std::size_t LossNetWeights::input_width() const {
    if (layers.empty()) throw Error("empty loss net");
    return layers.front().weight.cols();
}

LossNetWeights build_lossnet(const LossNetSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    LossNetWeights w;
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        const std::size_t in = spec.widths[i];
        const std::size_t out = spec.widths[i + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        LossNetLayer layer{Tensor<float>({out, in}), Tensor<float>({1, out})};
        for (float& v : layer.weight.data()) v = static_cast<float>(rng.uniform(-bound, bound));
        for (float& v : layer.bias.data()) v = static_cast<float>(rng.uniform(-bound, bound));
        w.layers.push_back(std::move(layer));
    }
    return w;
}

LossNetWeights zero_lossnet(const LossNetSpec& spec) {
    spec.validate();
    LossNetWeights w;
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        w.layers.push_back({Tensor<float>({spec.widths[i + 1], spec.widths[i]}),
                            Tensor<float>({1, spec.widths[i + 1]})});
    }
    return w;
}

// Rows are evaluated one at a time so each output depends only on its own
// input row, never on its position in the batch.
std::vector<float> lossnet_rows(const LossNetWeights& w, const Tensor<float>& inputs) {
    if (inputs.cols() != w.input_width()) {
        throw ShapeError("loss net expects input width " + std::to_string(w.input_width()) +
                         ", got " + std::to_string(inputs.cols()));
    }
    using Vec = Eigen::Matrix<float, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    std::vector<Eigen::Map<const Mat>> weights;
    for (const auto& layer : w.layers) {
        weights.emplace_back(layer.weight.data().data(), static_cast<Eigen::Index>(layer.weight.rows()),
                             static_cast<Eigen::Index>(layer.weight.cols()));
    }
    std::vector<float> out(inputs.rows());
    Vec act, next;
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        act = Eigen::Map<const Vec>(inputs.data().data() + r * inputs.cols(),
                                    static_cast<Eigen::Index>(inputs.cols()));
        for (std::size_t l = 0; l < w.layers.size(); ++l) {
            next.noalias() = weights[l] * act;
            const auto& bias = w.layers[l].bias;
            const bool hidden = l + 1 < w.layers.size();
            for (Eigen::Index c = 0; c < next.size(); ++c) {
                const float v = next[c] + bias[static_cast<std::size_t>(c)];
                next[c] = hidden ? ad::elu_value(v) : v;
            }
            act.swap(next);
        }
        out[r] = act[0];
    }
    return out;
}

namespace {

// Summing in sorted order makes the mean independent of sample order.
float sorted_mean(std::vector<float> values) {
    std::sort(values.begin(), values.end());
    float acc = 0.0f;
    for (float v : values) acc += v;
    return acc / static_cast<float>(values.size());
}

}  // namespace

float forward_loss(const LossNetWeights& w, std::span<const float> y_pos) {
    if (y_pos.empty()) throw Error("forward_loss: empty batch");
    return sorted_mean(lossnet_rows(w, Tensor<float>::column(y_pos)));
}

float forward_loss(const LossNetWeights& w, const BatchSample& batch) {
    if (batch.size == 0) throw Error("forward_loss: empty batch");
    if (batch.is_classification()) return forward_loss(w, batch.positive_scores());
    return sorted_mean(lossnet_rows(w, Tensor<float>({batch.size, batch.width}, batch.predictions)));
}

float forward_vector(const LossNetWeights& w, std::span<const float> x) {
    return lossnet_rows(w, Tensor<float>::row(x))[0];
}

namespace ad {

std::vector<NodeId> LossNetNodes::all() const {
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        ids.push_back(weights[i]);
        ids.push_back(biases[i]);
    }
    return ids;
}

template <typename T>
LossNetNodes place_lossnet(Graph<T>& graph, const LossNetWeights& w, bool trainable) {
    LossNetNodes nodes;
    auto convert = [](const Tensor<float>& t) {
        if constexpr (std::is_same_v<T, float>) {
            return t;
        } else {
            return Tensor<T>(t.shape(), std::vector<T>(t.data().begin(), t.data().end()));
        }
    };
    for (const auto& layer : w.layers) {
        auto wt = convert(layer.weight);
        auto bt = convert(layer.bias);
        nodes.weights.push_back(trainable ? graph.parameter(std::move(wt)) : graph.constant(std::move(wt)));
        nodes.biases.push_back(trainable ? graph.parameter(std::move(bt)) : graph.constant(std::move(bt)));
    }
    return nodes;
}

template <typename T>
NodeId lossnet_forward(Graph<T>& graph, const LossNetNodes& net, NodeId inputs) {
    NodeId h = inputs;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        h = graph.affine(h, net.weights[l], net.biases[l]);
        if (l + 1 < net.weights.size()) h = graph.elu(h);
    }
    return h;
}

template LossNetNodes place_lossnet<float>(Graph<float>&, const LossNetWeights&, bool);
template LossNetNodes place_lossnet<double>(Graph<double>&, const LossNetWeights&, bool);
template NodeId lossnet_forward<float>(Graph<float>&, const LossNetNodes&, NodeId);
template NodeId lossnet_forward<double>(Graph<double>&, const LossNetNodes&, NodeId);

}  // namespace ad

// ---- checkpoint ------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'R', 'E', 'L', 'O', 'S', 'S', '0', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    void need(std::size_t n) const {
        if (remaining() < n) throw FormatError("checkpoint truncated: length does not match header");
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::uint8_t> encode_checkpoint(const LossNetWeights& w) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, static_cast<std::uint32_t>(w.layers.size()));
    for (const auto& layer : w.layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.weight.cols()));
        put_u32(out, static_cast<std::uint32_t>(layer.weight.rows()));
        for (float v : layer.weight.data()) put_f32(out, v);
        for (float v : layer.bias.data()) put_f32(out, v);
    }
    const auto payload = std::span<const std::uint8_t>(out).subspan(sizeof(kMagic));
    put_u64(out, fnv1a64(payload));
    return out;
}

LossNetWeights decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not a loss checkpoint: bad magic");
    }
    if (bytes.size() < sizeof(kMagic) + 4 + 8) throw FormatError("checkpoint truncated");
    const auto body = bytes.subspan(sizeof(kMagic), bytes.size() - sizeof(kMagic) - 8);
    const auto tail = bytes.subspan(bytes.size() - 8);
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) stored |= static_cast<std::uint64_t>(tail[i]) << (8 * i);

    Reader in(body);
    const std::uint32_t count = in.u32();
    LossNetWeights w;
    std::size_t prev_out = 0;
    for (std::uint32_t l = 0; l < count; ++l) {
        const std::uint32_t in_dim = in.u32();
        const std::uint32_t out_dim = in.u32();
        if (in_dim == 0 || out_dim == 0) throw FormatError("checkpoint layer has zero width");
        if (l > 0 && in_dim != prev_out) throw FormatError("checkpoint layer shapes do not chain");
        const std::size_t floats = static_cast<std::size_t>(in_dim) * out_dim + out_dim;
        in.need(floats * 4);
        LossNetLayer layer{Tensor<float>({out_dim, in_dim}), Tensor<float>({1, out_dim})};
        for (float& v : layer.weight.data()) v = in.f32();
        for (float& v : layer.bias.data()) v = in.f32();
        w.layers.push_back(std::move(layer));
        prev_out = out_dim;
    }
    if (in.remaining() != 0) throw FormatError("checkpoint length does not match header");
    if (fnv1a64(body) != stored) throw FormatError("checkpoint checksum mismatch");
    if (w.layers.empty()) throw FormatError("checkpoint has no layers");
    return w;
}

void save_checkpoint(const LossNetWeights& w, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(w);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

LossNetWeights load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace reloss
