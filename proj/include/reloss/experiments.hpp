#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reloss/config.hpp"
#include "reloss/gradcheck.hpp"
#include "reloss/toy.hpp"
#include "reloss/trainer.hpp"

namespace reloss {

/// Everything a harness command needs. Every field has a flat config key (see
/// apply()); command-line flags are applied on top of file values.
struct ExperimentConfig {
    TrainerConfig trainer;
    GeneratorConfig generator;
    BlobsConfig blobs;
    ToyTrainConfig toy;
    DescentConfig descent;

    std::size_t metric_hidden = 32;            // synthetic metric hidden width
    std::size_t loss_hidden = 128;             // synthetic loss-net hidden width
    std::size_t classification_steps = 500;    // surrogate budget on the toy task
    std::size_t eval_sub_batches = 200;        // held-out sub-batches for correlation reports
    std::size_t record_every = 10;             // fig2b cadence (steps)
    std::vector<LossMode> modes{LossMode::CE, LossMode::ReLoss, LossMode::CEPlusReLoss, LossMode::Approx,
                                LossMode::RankLoss};
    std::vector<double> levels{-0.5, -0.8, -0.95};
    std::vector<std::size_t> widths{32, 64, 128};
    std::vector<std::size_t> depths{3};        // hidden layers
    std::size_t sweep_every = 10;              // validation cadence while watching for levels
    std::string sweep = "both";                // levels | capacity | both
    std::string task = "classification";       // train-loss: classification | synthetic
    std::string loss = "ce";                   // corr-eval loss: ce | rankloss | negated-metric | constant | PATH
    std::size_t samples = 200;                 // corr-eval draws
    std::filesystem::path loss_checkpoint;     // train-model: reuse a trained loss instead of training one
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path out = "out";

    /// Applies `key = value` settings; unknown keys and malformed values are
    /// usage errors.
    void apply(const KeyValues& kv);
    void validate() const;
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// ---- synthetic study ---------------------------------------------------------

struct SyntheticArm {
    SurrogateResult result;
    double test_spearman = 0.0;  // hard Spearman on held-out draws
    DescentTrace descent;
};

struct SyntheticRun {
    std::uint64_t seed = 0;
    SyntheticArm correlation;
    SyntheticArm approximation;
    DescentTrace direct;
    CsvWriter fig2b{{"step", "direct", "approximation", "correlation"}};
    CsvWriter fig2c{{"step", "direct", "approximation", "correlation"}};
};

/// Figure-2 study for one seed: correlation- and approximation-trained losses
/// against a frozen random metric, then free-input descent on each and on the
/// metric itself.
SyntheticRun run_synthetic(const ExperimentConfig& cfg, std::uint64_t seed);

/// Writes fig2b/fig2c, train logs, checkpoints and a summary per seed.
std::vector<SyntheticRun> cmd_synthetic(const ExperimentConfig& cfg);

// ---- toy classification --------------------------------------------------------

struct ToyContext {
    BlobsData data;
    PredictionModelResult ce_run;  // CE pre-run whose per-epoch dumps feed G_M
    SurrogateTask task;
};

ToyContext make_toy_context(const ExperimentConfig& cfg, std::uint64_t seed);

/// Trains a classification surrogate on the toy context.
SurrogateResult train_toy_surrogate(const ExperimentConfig& cfg, const ToyContext& ctx, std::uint64_t seed,
                                    ObjectiveMode mode);

/// Writes checkpoint, train log and G_M dumps per seed.
std::vector<SurrogateResult> cmd_train_loss(const ExperimentConfig& cfg);

struct ToyReportRow {
    std::uint64_t seed = 0;
    std::string loss;
    double accuracy = 0.0;
    double spearman = 0.0;  // of loss value vs accuracy over evaluation sub-batches
    double kendall = 0.0;
};

std::vector<ToyReportRow> run_toy_classification(const ExperimentConfig& cfg, std::uint64_t seed);
/// Writes report.csv with columns seed,loss,accuracy,spearman,kendall.
std::vector<ToyReportRow> cmd_toy_classification(const ExperimentConfig& cfg);

// ---- correlation of a loss with accuracy --------------------------------------

struct CorrEvalRow {
    std::uint64_t seed = 0;
    std::string loss;
    std::size_t samples = 0;
    double spearman = 0.0;
    double kendall = 0.0;
};

CorrEvalRow run_corr_eval(const ExperimentConfig& cfg, std::uint64_t seed);
std::vector<CorrEvalRow> cmd_corr_eval(const ExperimentConfig& cfg);

// ---- sweeps -------------------------------------------------------------------

struct LevelRow {
    std::uint64_t seed = 0;
    double level = 0.0;
    bool reached = false;
    std::size_t step = 0;
    double validation_spearman = 0.0;
    double accuracy = 0.0;
};

struct CapacityRow {
    std::uint64_t seed = 0;
    std::size_t width = 0;
    std::size_t depth = 0;
    std::size_t parameters = 0;
    double validation_spearman = 0.0;
    double accuracy = 0.0;
};

std::vector<LevelRow> run_level_sweep(const ExperimentConfig& cfg, std::uint64_t seed);
std::vector<CapacityRow> run_capacity_sweep(const ExperimentConfig& cfg, std::uint64_t seed);

struct SweepResult {
    std::vector<LevelRow> levels;
    std::vector<CapacityRow> capacity;
};

/// Writes sweep_levels.csv and/or sweep_capacity.csv.
SweepResult cmd_sweeps(const ExperimentConfig& cfg);

// ---- gradcheck ------------------------------------------------------------------

/// Prints one line per op; returns false if any tolerance is exceeded.
bool cmd_gradcheck(const GradCheckOptions& options, std::ostream& out);

// ---- alternate training -----------------------------------------------------------

/// Prediction-model training in which the surrogate takes K correlation steps
/// after every epoch on dumps that include the current model.
PredictionModelResult train_alternate(const ExperimentConfig& cfg, const ToyContext& ctx, std::uint64_t seed,
                                      LossNetWeights initial);

}  // namespace reloss
