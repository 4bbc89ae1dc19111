#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <cstring>
#include <fstream>

#include "reloss/gradcheck.hpp"
#include "reloss/lossnet.hpp"
#include "reloss/metrics.hpp"
#include "reloss/random.hpp"

using namespace reloss;

namespace {

constexpr float kSeed0LossAt07 = 0.28820488f;

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "reloss_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(LossNet, DefaultParameterCount) {
    const LossNetSpec spec;
    EXPECT_EQ(spec.parameter_count(), 33409u);
    // (1*128 + 128) + (128*128 + 128) * 2 + (128*1 + 1)
    EXPECT_EQ(spec.parameter_count(), (1u * 128 + 128) + (128u * 128 + 128) * 2 + (128u + 1));
    EXPECT_EQ(build_lossnet(spec, 0).parameter_count(), 33409u);
    EXPECT_EQ(LossNetSpec::classification().widths, spec.widths);
}

TEST(LossNet, InvalidSpecs) {
    EXPECT_THROW((LossNetSpec{{1, 1}}.validate()), Error);
    EXPECT_THROW((LossNetSpec{{1, 8, 2}}.validate()), Error);
    EXPECT_THROW((LossNetSpec{{1, 0, 1}}.validate()), Error);
    EXPECT_THROW(build_lossnet(LossNetSpec{{1, 4, 3}}, 0), Error);
}

TEST(LossNet, ZeroNetOutputsZero) {
    const auto net = zero_lossnet(LossNetSpec{});
    EXPECT_EQ(forward_loss(net, std::vector<float>{0.1f, 0.9f, 0.5f}), 0.0f);
}

TEST(LossNet, SameSeedSameWeights) {
    EXPECT_EQ(build_lossnet(LossNetSpec{}, 42), build_lossnet(LossNetSpec{}, 42));
    EXPECT_NE(build_lossnet(LossNetSpec{}, 42), build_lossnet(LossNetSpec{}, 43));
}

TEST(LossNet, InitializationBoundedByFanIn) {
    const auto net = build_lossnet(LossNetSpec{}, 7);
    for (const auto& layer : net.layers) {
        const float bound = 1.0f / std::sqrt(static_cast<float>(layer.weight.cols()));
        for (float v : layer.weight.data()) EXPECT_LE(std::abs(v), bound);
        for (float v : layer.bias.data()) EXPECT_LE(std::abs(v), bound);
    }
}

TEST(LossNet, SingleSampleMatchesScalarEvaluation) {
    const auto net = build_lossnet(LossNetSpec{}, 0);
    const float batch = forward_loss(net, std::vector<float>{0.7f});
    const float scalar = forward_vector(net, std::vector<float>{0.7f});
    EXPECT_EQ(batch, scalar);
    // regression value for the seed-0 default net
    EXPECT_FLOAT_EQ(batch, kSeed0LossAt07);
}

TEST(LossNet, BatchOrderInvariantExactly) {
    const auto net = build_lossnet(LossNetSpec{}, 3);
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        std::vector<float> y(1 + rng.below(64));
        for (float& v : y) v = static_cast<float>(rng.uniform());
        const float base = forward_loss(net, y);
        for (std::size_t i = y.size(); i > 1; --i) std::swap(y[i - 1], y[rng.below(i)]);
        EXPECT_EQ(forward_loss(net, y), base);
    }
}

TEST(LossNet, EmptyBatchAndBadLabel) {
    const auto net = build_lossnet(LossNetSpec{}, 0);
    EXPECT_THROW(forward_loss(net, std::vector<float>{}), Error);
    BatchSample b;
    b.size = 1;
    b.width = 2;
    b.predictions = {0.5f, 0.5f};
    b.labels = {3};
    EXPECT_THROW(forward_loss(net, b), Error);
}

TEST(LossNet, ClassificationBatchUsesTrueClassProbability) {
    const auto net = build_lossnet(LossNetSpec{}, 1);
    BatchSample b;
    b.size = 2;
    b.width = 3;
    b.predictions = {0.2f, 0.5f, 0.3f, 0.6f, 0.1f, 0.3f};
    b.labels = {1, 2};
    EXPECT_EQ(forward_loss(net, b), forward_loss(net, std::vector<float>{0.5f, 0.3f}));
}

TEST(LossNet, TapeForwardMatchesDirectPath) {
    const auto net = build_lossnet(LossNetSpec::generic(4, 16, 3), 2);
    Tensor<float> x({3, 4}, {0.1f, -0.2f, 0.3f, 1.0f, 2.0f, -1.0f, 0.0f, 0.5f, 0.7f, 0.7f, -0.7f, 0.1f});
    ad::Graph<float> g;
    const auto nodes = ad::place_lossnet(g, net, true);
    const auto& taped = g.value(ad::lossnet_forward(g, nodes, g.input(x)));
    const auto direct = lossnet_rows(net, x);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(taped[i], direct[i], 1e-6);
}

TEST(LossNet, InputGradientPassesFiniteDifferences) {
    GradCheckReport worst;
    for (std::uint64_t p = 0; p < 100; ++p) {
        const auto r = finite_diff_check(CheckKind::LossNetInput, check_point(CheckKind::LossNetInput, p), 1e-4, p);
        worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
    }
    EXPECT_LE(worst.max_rel_error, 1e-4);
}

TEST(Checkpoint, RoundTripDefaultNet) {
    const auto net = build_lossnet(LossNetSpec{}, 0);
    const auto path = temp_file("default.ckpt");
    save_checkpoint(net, path);
    const auto back = load_checkpoint(path);
    EXPECT_EQ(back, net);
    const auto bytes = encode_checkpoint(net);
    EXPECT_EQ(bytes.size(), 8u + 4u + 4u * 8u + 4u * 33409u + 8u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "RELOSS01");
}

TEST(Checkpoint, RoundTripBitExactForRandomNets) {
    Rng rng(99);
    for (int t = 0; t < 1000; ++t) {
        LossNetSpec spec;
        spec.widths = {1 + rng.below(4)};
        const std::size_t hidden_layers = 1 + rng.below(3);
        for (std::size_t h = 0; h < hidden_layers; ++h) spec.widths.push_back(1 + rng.below(9));
        spec.widths.push_back(1);
        auto net = build_lossnet(spec, rng.next());
        // include special float payloads
        net.layers[0].bias[0] = -0.0f;
        const auto back = decode_checkpoint(encode_checkpoint(net));
        ASSERT_EQ(back.layers.size(), net.layers.size());
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            ASSERT_EQ(std::memcmp(back.layers[l].weight.data().data(), net.layers[l].weight.data().data(),
                                  net.layers[l].weight.numel() * sizeof(float)), 0);
            ASSERT_EQ(std::memcmp(back.layers[l].bias.data().data(), net.layers[l].bias.data().data(),
                                  net.layers[l].bias.numel() * sizeof(float)), 0);
        }
    }
}

TEST(Checkpoint, TruncatedFileRejected) {
    auto bytes = encode_checkpoint(build_lossnet(LossNetSpec::classification(8, 3), 1));
    for (std::size_t cut : {bytes.size() - 1, bytes.size() - 9, std::size_t{20}, std::size_t{9}}) {
        std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_THROW(decode_checkpoint(part), FormatError) << cut;
    }
    const auto path = temp_file("truncated.ckpt");
    {
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), 100);
    }
    EXPECT_THROW(load_checkpoint(path), FormatError);
}

TEST(Checkpoint, BadMagicRejected) {
    auto bytes = encode_checkpoint(build_lossnet(LossNetSpec::classification(8, 3), 1));
    std::copy_n("XXXX", 4, bytes.begin());
    EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, CorruptedPayloadRejected) {
    auto bytes = encode_checkpoint(build_lossnet(LossNetSpec::classification(8, 3), 1));
    bytes[40] ^= 0x01;
    EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, MissingFileIsIoError) {
    EXPECT_THROW(load_checkpoint(temp_file("does_not_exist.ckpt")), IoError);
}
