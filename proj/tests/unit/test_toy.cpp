#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "reloss/toy.hpp"

using namespace reloss;

namespace {

BlobsConfig small_blobs(std::uint64_t seed = 0) {
    BlobsConfig cfg;
    cfg.train = 300;
    cfg.validation = 200;
    cfg.seed = seed;
    return cfg;
}

ToyTrainConfig short_training(std::uint64_t seed = 0) {
    ToyTrainConfig cfg;
    cfg.epochs = 3;
    cfg.hidden = 16;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST(Blobs, ShapesAndDeterminism) {
    const auto a = make_blobs(small_blobs());
    EXPECT_EQ(a.train.x.shape(), (Shape{300, 16}));
    EXPECT_EQ(a.validation.size(), 200u);
    EXPECT_EQ(a.train.classes, 8u);
    for (auto y : a.train.y) EXPECT_LT(y, 8u);
    const auto b = make_blobs(small_blobs());
    EXPECT_EQ(a.train.x, b.train.x);
    EXPECT_EQ(a.validation.y, b.validation.y);
    EXPECT_NE(make_blobs(small_blobs(1)).train.x, a.train.x);
    auto bad = small_blobs();
    bad.classes = 1;
    EXPECT_THROW(make_blobs(bad), Error);
}

TEST(Classifier, ProbabilitiesAndDumps) {
    const auto data = make_blobs(small_blobs());
    const auto model = build_classifier(16, 8, 2, 8, 5);
    EXPECT_EQ(model.layers.size(), 3u);
    EXPECT_EQ(model.classes(), 8u);
    const auto probs = predict_probs(model, data.validation.x);
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < probs.cols(); ++c) total += probs(r, c);
        EXPECT_NEAR(total, 1.0, 1e-5);
    }
    const auto dump = dump_predictions(model, data.train);
    EXPECT_EQ(dump.rows(), 300u);
    EXPECT_NO_THROW((BatchSample{dump.rows(), dump.num_classes, dump.probs, dump.labels}.validate()));
}

TEST(LossModes, NamesRoundTrip) {
    for (auto m : {LossMode::CE, LossMode::ReLoss, LossMode::CEPlusReLoss, LossMode::Approx, LossMode::RankLoss}) {
        EXPECT_EQ(parse_loss_mode(loss_mode_name(m)), m);
    }
    EXPECT_EQ(loss_mode_name(LossMode::CEPlusReLoss), "ce+reloss");
    EXPECT_THROW(parse_loss_mode("mse"), UsageError);
}

TEST(PredictionModel, CrossEntropyLearnsAndIsDeterministic) {
    const auto data = make_blobs(small_blobs());
    auto cfg = short_training();
    cfg.keep_dumps = true;
    const auto a = train_prediction_model(LossMode::CE, data, cfg);
    ASSERT_EQ(a.accuracy_trace.size(), 4u);
    EXPECT_EQ(a.dumps.size(), 4u);
    EXPECT_GT(a.accuracy, a.accuracy_trace.front() + 0.2);
    EXPECT_EQ(a.accuracy, a.accuracy_trace.back());
    const auto b = train_prediction_model(LossMode::CE, data, cfg);
    EXPECT_EQ(a.model, b.model);
}

TEST(PredictionModel, LearnedLossModesNeedALoss) {
    const auto data = make_blobs(small_blobs());
    EXPECT_THROW(train_prediction_model(LossMode::ReLoss, data, short_training()), Error);
    EXPECT_THROW(train_prediction_model(LossMode::Approx, data, short_training()), Error);
    EXPECT_THROW(train_prediction_model(LossMode::ReLoss, data, short_training(), build_lossnet(LossNetSpec::generic(3), 0)),
                 ShapeError);
}

TEST(PredictionModel, MonotoneLearnedLossTrains) {
    // L(p) = -p is a valid (if crude) surrogate: descending it raises p_true.
    auto w = zero_lossnet(LossNetSpec{{1, 1, 1}});
    w.layers[0].weight[0] = 1.0f;
    w.layers[0].bias[0] = 1.0f;
    w.layers[1].weight[0] = -1.0f;
    const auto data = make_blobs(small_blobs());
    const auto r = train_prediction_model(LossMode::ReLoss, data, short_training(), w);
    EXPECT_GT(r.accuracy, r.accuracy_trace.front() + 0.2);
    const auto negated = train_prediction_model(LossMode::Approx, data, short_training(), w, true);
    EXPECT_LT(negated.accuracy, r.accuracy);
}

TEST(PredictionModel, RankLossAndHookRun) {
    const auto data = make_blobs(small_blobs());
    std::size_t calls = 0;
    const auto r = train_prediction_model(LossMode::RankLoss, data, short_training(), std::nullopt, false,
                                          [&](std::size_t epoch, const Classifier&, LossNetWeights&) {
                                              EXPECT_EQ(epoch, calls);
                                              ++calls;
                                          });
    EXPECT_EQ(calls, 3u);
    EXPECT_GT(r.accuracy, r.accuracy_trace.front());
}

TEST(CeLoss, Examples) {
    EXPECT_NEAR(ce_loss(BatchSample{1, 2, {0.5f, 0.5f}, {0}}), std::log(2.0), 1e-7);
    EXPECT_NEAR(ce_loss(BatchSample{2, 2, {1.0f, 0.0f, 0.25f, 0.75f}, {0, 1}}), -std::log(0.75) / 2, 1e-7);
}

TEST(Descent, DirectMetricImproves) {
    const SyntheticMetric metric(16, 0);
    DescentConfig cfg;
    cfg.steps = 50;
    const auto trace = descend_inputs(metric.network(), 1.0, metric, cfg);
    ASSERT_EQ(trace.steps.size(), 6u);
    EXPECT_EQ(trace.steps.back(), 50u);
    EXPECT_LT(*std::min_element(trace.metric.begin(), trace.metric.end()), trace.metric.front());
    EXPECT_LT(trace.metric.back(), trace.metric.front());
    // ascending instead makes it worse
    EXPECT_GT(descend_inputs(metric.network(), -1.0, metric, cfg).metric.back(), trace.metric.front());
}

TEST(Descent, ZeroStepsAndErrors) {
    const SyntheticMetric metric(16, 0);
    DescentConfig cfg;
    cfg.steps = 0;
    const auto trace = descend_inputs(metric.network(), 1.0, metric, cfg);
    EXPECT_EQ(trace.steps, std::vector<std::size_t>{0});
    EXPECT_THROW(descend_inputs(build_lossnet(LossNetSpec::generic(4), 0), 1.0, metric, cfg), ShapeError);
    cfg.points = 0;
    EXPECT_THROW(descend_inputs(metric.network(), 1.0, metric, cfg), Error);
}
