#include <gtest/gtest.h>

#include <cmath>

#include "reloss/graph.hpp"

using reloss::Shape;
using reloss::Tensor;
using reloss::ad::Graph;
using reloss::ad::NodeId;

TEST(Graph, AffineIdentity) {
    Graph<float> g;
    const NodeId x = g.input(Tensor<float>::row({1.0f, 2.0f}));
    const NodeId w = g.parameter(Tensor<float>({2, 2}, {1, 0, 0, 1}));
    const NodeId b = g.parameter(Tensor<float>({1, 2}));
    const auto& out = g.value(g.affine(x, w, b));
    EXPECT_EQ(out, Tensor<float>::row({1.0f, 2.0f}));
}

TEST(Graph, MeanOfThree) {
    Graph<float> g;
    const NodeId x = g.input(Tensor<float>::row({2.0f, 4.0f, 6.0f}));
    EXPECT_FLOAT_EQ(g.value(g.mean(x)).item(), 4.0f);
}

TEST(Graph, EluComposedAtMinusOne) {
    Graph<double> g;
    const NodeId x = g.input(Tensor<double>::scalar(-1.0));
    const double expected = std::exp(std::exp(-1.0) - 1.0) - 1.0;
    EXPECT_NEAR(g.value(g.elu(g.elu(x))).item(), expected, 1e-12);
    EXPECT_NEAR(expected, -0.4685, 1e-4);
}

TEST(Graph, EluValues) {
    Graph<double> g;
    const NodeId x = g.input(Tensor<double>::row({0.0, 1.0, -1.0}));
    const auto& v = g.value(g.elu(x));
    EXPECT_EQ(v[0], 0.0);
    EXPECT_EQ(v[1], 1.0);
    EXPECT_NEAR(v[2], std::exp(-1.0) - 1.0, 1e-15);
    EXPECT_NEAR(v[2], -0.6321, 1e-4);
}

TEST(Graph, GradientOfMeanIsUniform) {
    Graph<double> g;
    const NodeId x = g.input(Tensor<double>::row({3.0, -7.0}));
    const auto& grad = g.value(g.gradient(g.mean(x), x));
    EXPECT_EQ(grad, Tensor<double>::row({0.5, 0.5}));
}

TEST(Graph, EluDerivativeAtMinusOne) {
    Graph<double> g;
    const NodeId x = g.input(Tensor<double>::scalar(-1.0));
    const auto& grad = g.value(g.gradient(g.sum(g.elu(x)), x));
    EXPECT_NEAR(grad.item(), std::exp(-1.0), 1e-15);
}

TEST(Graph, SecondOrderPenaltyShape) {
    // g(x) = (|d/dx (x^2/2)| - 1)^2, dg/dx at 3 = 2 (3 - 1) = 4
    Graph<double> g;
    const NodeId x = g.input(Tensor<double>::scalar(3.0));
    const NodeId half_sq = g.scale_shift(g.square(x), 0.5);
    const NodeId dx = g.gradient(g.sum(half_sq), x);
    const NodeId pen = g.square(g.scale_shift(g.row_l2norm(dx), 1.0, -1.0));
    EXPECT_DOUBLE_EQ(g.value(pen).item(), 4.0);
    const auto& d2 = g.value(g.gradient(g.sum(pen), x));
    EXPECT_DOUBLE_EQ(d2.item(), 4.0);
}

TEST(Graph, NonScalarGradientThrows) {
    Graph<double> g;
    const NodeId x = g.input(Tensor<double>::row({1.0, 2.0}));
    EXPECT_THROW(g.gradient(g.elu(x), x), reloss::ShapeError);
}

TEST(Graph, GradientWrtNonLeafThrows) {
    Graph<double> g;
    const NodeId x = g.input(Tensor<double>::row({1.0, 2.0}));
    const NodeId y = g.elu(x);
    EXPECT_THROW(g.gradient(g.sum(y), y), reloss::Error);
    EXPECT_THROW(g.gradient(g.sum(y), NodeId{999}), reloss::Error);
}

TEST(Graph, ShapeMismatchThrows) {
    Graph<float> g;
    const NodeId a = g.input(Tensor<float>({2, 3}));
    const NodeId b = g.input(Tensor<float>({2, 2}));
    EXPECT_THROW(g.add(a, b), reloss::ShapeError);
    EXPECT_THROW(g.matmul(a, b), reloss::ShapeError);
    EXPECT_THROW(g.add_bias(a, b), reloss::ShapeError);
}

TEST(Graph, EvaluateRebindsPlaceholders) {
    Graph<double> g;
    const NodeId x = g.placeholder({1, 2});
    const NodeId y = g.sum(g.square(x));
    EXPECT_THROW(g.evaluate(y), reloss::Error);  // unbound
    EXPECT_DOUBLE_EQ(g.evaluate(y, {{x, Tensor<double>::row({1.0, 2.0})}}).item(), 5.0);
    EXPECT_DOUBLE_EQ(g.evaluate(y, {{x, Tensor<double>::row({3.0, 0.0})}}).item(), 9.0);
    EXPECT_THROW(g.evaluate(y, {{x, Tensor<double>::row({1.0})}}), reloss::ShapeError);
}

TEST(Graph, EvaluateIsBitDeterministic) {
    auto run = [] {
        Graph<float> g;
        Tensor<float> x({16, 8});
        for (std::size_t i = 0; i < x.numel(); ++i) x[i] = std::sin(0.37f * static_cast<float>(i));
        Tensor<float> w({5, 8});
        for (std::size_t i = 0; i < w.numel(); ++i) w[i] = std::cos(0.11f * static_cast<float>(i));
        const NodeId xi = g.input(x);
        const NodeId wi = g.parameter(w);
        const NodeId b = g.parameter(Tensor<float>({1, 5}, 0.1f));
        const NodeId out = g.mean(g.sigmoid(g.elu(g.affine(xi, wi, b))));
        return std::pair{g.value(out).item(), g.value(g.gradient(out, wi))};
    };
    const auto first = run();
    const auto second = run();
    EXPECT_EQ(first.first, second.first);
    EXPECT_EQ(first.second, second.second);
}

TEST(Graph, LogSoftmaxSelectMatchesCrossEntropy) {
    Graph<double> g;
    const NodeId logits = g.input(Tensor<double>({2, 3}, {1.0, 2.0, 3.0, 0.5, 0.5, -1.0}));
    auto labels = std::make_shared<const std::vector<std::uint32_t>>(std::vector<std::uint32_t>{2, 0});
    const NodeId picked = g.select_cols(g.log_softmax_rows(logits), labels);
    const auto& v = g.value(picked);
    const double lse0 = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
    const double lse1 = std::log(2.0 * std::exp(0.5) + std::exp(-1.0));
    EXPECT_NEAR(v[0], 3.0 - lse0, 1e-12);
    EXPECT_NEAR(v[1], 0.5 - lse1, 1e-12);
    // d(-sum log p_label)/dlogits = softmax - onehot
    const auto& grad = g.value(g.gradient(g.neg(g.sum(picked)), logits));
    EXPECT_NEAR(grad(0, 2), std::exp(3.0 - lse0) - 1.0, 1e-12);
    EXPECT_NEAR(grad(1, 1), std::exp(0.5 - lse1), 1e-12);
}

TEST(Graph, ZeroNormHasFiniteGradient) {
    Graph<double> g;
    const NodeId x = g.input(Tensor<double>({1, 3}));
    const NodeId n = g.row_l2norm(x);
    const auto& grad = g.value(g.gradient(g.sum(n), x));
    for (double v : grad.data()) EXPECT_TRUE(std::isfinite(v));
}
