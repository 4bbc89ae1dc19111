#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "reloss/generators.hpp"
#include "reloss/metrics.hpp"

using namespace reloss;

namespace {

constexpr double kSeed0MetricAtZero = 0.014959439635276794;

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "reloss_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

BatchSample one_hot_batch(const std::vector<std::uint32_t>& labels, const std::vector<std::uint32_t>& argmax,
                          std::size_t k) {
    BatchSample b;
    b.size = labels.size();
    b.width = k;
    b.labels = labels;
    b.predictions.assign(b.size * k, 0.0f);
    for (std::size_t i = 0; i < b.size; ++i) b.predictions[i * k + argmax[i]] = 1.0f;
    return b;
}

PredictionDump counting_dump(std::size_t rows, std::size_t k, std::uint32_t offset) {
    PredictionDump d;
    d.num_classes = k;
    for (std::size_t r = 0; r < rows; ++r) {
        d.labels.push_back(static_cast<std::uint32_t>((r + offset) % k));
        for (std::size_t c = 0; c < k; ++c) d.probs.push_back(c == (r % k) ? 1.0f : 0.0f);
    }
    return d;
}

}  // namespace

TEST(Accuracy, Examples) {
    EXPECT_EQ(accuracy(one_hot_batch({0, 1, 2}, {0, 1, 2}, 3)), 1.0);
    EXPECT_EQ(accuracy(one_hot_batch({0, 1, 2}, {1, 2, 0}, 3)), 0.0);
    EXPECT_DOUBLE_EQ(accuracy(one_hot_batch({0, 1, 2}, {0, 1, 0}, 3)), 2.0 / 3.0);
}

TEST(Accuracy, TiesGoToLowestIndex) {
    BatchSample b;
    b.size = 2;
    b.width = 2;
    b.predictions = {0.5f, 0.5f, 0.5f, 0.5f};
    b.labels = {0, 1};
    EXPECT_DOUBLE_EQ(accuracy(b), 0.5);
}

TEST(Accuracy, EmptyBatchThrows) {
    BatchSample b;
    b.width = 2;
    EXPECT_THROW(accuracy(b), Error);
}

TEST(Accuracy, MetricIsHigherBetter) {
    AccuracyMetric m;
    EXPECT_TRUE(m.higher_is_better());
    const auto b = one_hot_batch({0, 1}, {0, 0}, 2);
    EXPECT_EQ(m.score(b), 0.5);
}

TEST(SyntheticMetricTest, DeterministicAndSeedDependent) {
    SyntheticMetric a(16, 0), b(16, 0), c(16, 1);
    std::vector<float> x(16);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1f * static_cast<float>(i) - 0.7f;
    EXPECT_EQ(a.evaluate(x), a.evaluate(x));
    EXPECT_EQ(a.evaluate(x), b.evaluate(x));
    EXPECT_NE(a.evaluate(x), c.evaluate(x));
    EXPECT_FALSE(a.higher_is_better());
    EXPECT_EQ(a.network().spec().widths, (std::vector<std::size_t>{16, 32, 32, 1}));
}

TEST(SyntheticMetricTest, PinnedValueAtOrigin) {
    SyntheticMetric m(16, 0);
    EXPECT_NEAR(m.evaluate(std::vector<float>(16, 0.0f)), kSeed0MetricAtZero, 1e-6);
}

TEST(SyntheticMetricTest, WidthMismatchThrows) {
    SyntheticMetric m(16, 0);
    EXPECT_THROW(m.evaluate(std::vector<float>(15, 0.0f)), ShapeError);
    BatchSample b;
    b.size = 1;
    b.width = 4;
    b.predictions.assign(4, 0.0f);
    EXPECT_THROW(m(b), ShapeError);
}

TEST(SyntheticMetricTest, BatchValueIsRowMean) {
    SyntheticMetric m(4, 3);
    BatchSample b;
    b.size = 2;
    b.width = 4;
    b.predictions = {0.1f, 0.2f, 0.3f, 0.4f, -1.0f, 0.0f, 1.0f, 2.0f};
    const double expected = (m.evaluate(b.row(0)) + m.evaluate(b.row(1))) / 2.0;
    EXPECT_NEAR(m(b), expected, 1e-6);
}

TEST(RandomGenerator, ProbabilitiesNormalized) {
    GeneratorConfig cfg;
    cfg.num_classes = 2;
    cfg.sub_batch = 4;
    Rng rng(1);
    const auto b = gen_random_batch(cfg, rng);
    ASSERT_EQ(b.size, 4u);
    ASSERT_EQ(b.width, 2u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(b.predictions[2 * i] + b.predictions[2 * i + 1], 1.0f, 1e-6);
    EXPECT_NO_THROW(b.validate());
}

TEST(RandomGenerator, AccuracyNearChance) {
    GeneratorConfig cfg;
    Rng rng(2);
    double total = 0.0;
    for (int t = 0; t < 10000; ++t) total += accuracy(gen_random_batch(cfg, rng));
    EXPECT_NEAR(total / 10000.0, 1.0 / 8.0, 0.02);
}

TEST(RandomGenerator, SameSeedSameBatch) {
    GeneratorConfig cfg;
    Rng a(5), b(5);
    EXPECT_EQ(gen_random_batch(cfg, a), gen_random_batch(cfg, b));
}

TEST(RandomGenerator, EveryBatchValid) {
    GeneratorConfig cfg;
    cfg.num_classes = 5;
    cfg.sub_batch = 3;
    Rng rng(6);
    for (int t = 0; t < 2000; ++t) ASSERT_NO_THROW(gen_random_batch(cfg, rng).validate());
}

TEST(RandomGenerator, SmallBatchesSpanAccuracyRange) {
    GeneratorConfig cfg;
    cfg.num_classes = 2;
    cfg.sub_batch = 4;
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const double a = accuracy(gen_random_batch(cfg, rng));
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    EXPECT_LE(lo, 0.1);
    EXPECT_GE(hi, 0.9);
}

TEST(RandomGenerator, SyntheticVectors) {
    GeneratorConfig cfg;
    cfg.task = TaskKind::Synthetic;
    cfg.sub_batch = 3;
    cfg.input_width = 16;
    Rng rng(8);
    const auto b = gen_random_batch(cfg, rng);
    EXPECT_EQ(b.size, 3u);
    EXPECT_EQ(b.width, 16u);
    EXPECT_TRUE(b.labels.empty());
}

TEST(ModelGenerator, WholeDumpWhenSizesMatch) {
    GeneratorConfig cfg;
    cfg.num_classes = 3;
    cfg.sub_batch = 10;
    const std::vector<PredictionDump> dumps{counting_dump(10, 3, 1)};
    Rng rng(9);
    const auto b = gen_model_batch(cfg, dumps, rng);
    EXPECT_EQ(b.labels, dumps[0].labels);
    EXPECT_EQ(b.predictions, dumps[0].probs);
}

TEST(ModelGenerator, FilesChosenUniformly) {
    GeneratorConfig cfg;
    cfg.num_classes = 3;
    cfg.sub_batch = 4;
    // dump 0 rows are all labelled correctly, dump 1 rows never are
    const std::vector<PredictionDump> dumps{counting_dump(20, 3, 0), counting_dump(20, 3, 1)};
    Rng rng(10);
    int first = 0;
    for (int t = 0; t < 10000; ++t) first += accuracy(gen_model_batch(cfg, dumps, rng)) == 1.0;
    EXPECT_NEAR(first / 10000.0, 0.5, 0.05);
}

TEST(ModelGenerator, SameSeedSameBatch) {
    GeneratorConfig cfg;
    cfg.num_classes = 3;
    cfg.sub_batch = 5;
    const std::vector<PredictionDump> dumps{counting_dump(30, 3, 0), counting_dump(12, 3, 2)};
    Rng a(11), b(11);
    for (int t = 0; t < 20; ++t) EXPECT_EQ(gen_model_batch(cfg, dumps, a), gen_model_batch(cfg, dumps, b));
}

TEST(ModelGenerator, ErrorsWithoutUsableDumps) {
    GeneratorConfig cfg;
    cfg.num_classes = 3;
    cfg.sub_batch = 5;
    Rng rng(12);
    EXPECT_THROW(gen_model_batch(cfg, {}, rng), Error);
    const std::vector<PredictionDump> small{counting_dump(4, 3, 0)};
    EXPECT_THROW(gen_model_batch(cfg, small, rng), Error);
}

TEST(Sampler, MixtureProbability) {
    GeneratorConfig cfg;
    cfg.num_classes = 3;
    cfg.sub_batch = 4;
    std::vector<PredictionDump> dumps{counting_dump(20, 3, 0)};
    for (double p : {0.0, 0.5, 1.0}) {
        cfg.p = p;
        BatchSampler sampler(cfg, dumps);
        Rng rng(13);
        int random = 0;
        for (int t = 0; t < 10000; ++t) {
            bool from_random = false;
            sampler.sample(rng, &from_random);
            random += from_random;
        }
        if (p == 0.0) EXPECT_EQ(random, 0);
        if (p == 1.0) EXPECT_EQ(random, 10000);
        if (p == 0.5) EXPECT_NEAR(random / 10000.0, 0.5, 0.02);
    }
}

TEST(Sampler, InvalidConfig) {
    GeneratorConfig cfg;
    cfg.p = 1.5;
    EXPECT_THROW(cfg.validate(), Error);
    cfg.p = 0.5;
    cfg.sub_batch = 0;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(Dump, RoundTrip) {
    PredictionDump d;
    d.num_classes = 3;
    d.labels = {2, 0};
    d.probs = {0.1f, 0.2f, 0.7f, 0.333333343f, 0.333333343f, 0.333333313f};
    const auto path = temp_path("dump.csv");
    write_dump(d, path);
    const auto back = read_dump(path);
    EXPECT_EQ(back.num_classes, 3u);
    EXPECT_EQ(back.labels, d.labels);
    EXPECT_EQ(back.probs, d.probs);  // 9 significant digits round-trip float32
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "label,p0,p1,p2");
}

TEST(Dump, MissingAndMalformed) {
    EXPECT_THROW(read_dump(temp_path("nope.csv")), IoError);
    const auto bad_header = temp_path("bad_header.csv");
    std::ofstream(bad_header) << "lbl,p0,p1\n0,0.5,0.5\n";
    EXPECT_THROW(read_dump(bad_header), FormatError);
    const auto bad_row = temp_path("bad_row.csv");
    std::ofstream(bad_row) << "label,p0,p1\n0,0.5\n";
    EXPECT_THROW(read_dump(bad_row), FormatError);
    const auto bad_label = temp_path("bad_label.csv");
    std::ofstream(bad_label) << "label,p0,p1\n2,0.5,0.5\n";
    EXPECT_THROW(read_dump(bad_label), FormatError);
}
