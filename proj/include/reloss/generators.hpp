#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "reloss/metrics.hpp"
#include "reloss/random.hpp"

namespace reloss {

enum class TaskKind { Classification, Synthetic };

struct GeneratorConfig {
    TaskKind task = TaskKind::Classification;
    double p = 0.5;                 // probability of drawing from the random generator
    std::size_t sub_batch = 32;
    std::size_t num_classes = 8;
    std::size_t input_width = 16;   // synthetic vectors
    double input_scale = 1.0;       // synthetic vectors ~ N(0, scale^2 I)
    std::vector<std::filesystem::path> dump_paths;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Stored predictions of one model checkpoint over a fixed set of samples.
struct PredictionDump {
    std::size_t num_classes = 0;
    std::vector<std::uint32_t> labels;
    std::vector<float> probs;  // rows x num_classes

    std::size_t rows() const { return labels.size(); }
};

// CSV with header "label,p0,...,p{k-1}", one row per sample, 9 significant digits.
void write_dump(const PredictionDump& dump, const std::filesystem::path& path);
PredictionDump read_dump(const std::filesystem::path& path);

/// G_R: labels uniform over classes, probabilities are normalized uniform
/// positives drawn independently of the labels. Synthetic tasks draw
/// Gaussian vectors instead.
BatchSample gen_random_batch(const GeneratorConfig& cfg, Rng& rng);

/// G_M: a sub-batch of stored rows from a uniformly chosen dump, sampled
/// without replacement and kept in file order.
BatchSample gen_model_batch(const GeneratorConfig& cfg, std::span<const PredictionDump> dumps,
                            Rng& rng);

/// Algorithm-level sampler: draws from G_R with probability p, else from G_M.
class BatchSampler {
public:
    explicit BatchSampler(GeneratorConfig cfg);
    BatchSampler(GeneratorConfig cfg, std::vector<PredictionDump> dumps);

    BatchSample sample(Rng& rng, bool* from_random = nullptr) const;

    const GeneratorConfig& config() const { return cfg_; }
    const std::vector<PredictionDump>& dumps() const { return dumps_; }
    void set_dumps(std::vector<PredictionDump> dumps) { dumps_ = std::move(dumps); }
    void add_dump(PredictionDump dump) { dumps_.push_back(std::move(dump)); }

private:
    GeneratorConfig cfg_;
    std::vector<PredictionDump> dumps_;
};

}  // namespace reloss
