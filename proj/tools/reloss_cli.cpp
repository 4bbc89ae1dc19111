// reloss — command-line harness for the surrogate-loss experiments.
//
// Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reloss/experiments.hpp"

namespace {

using namespace reloss;

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

struct CommonFlags {
    std::string config;
    std::string seeds;
    std::string out;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config, "flat key=value config file");
    cmd->add_option("--seed", flags.seeds, "seed or comma-separated seed list");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--set", flags.sets, "override one config key (KEY=VALUE), repeatable");
}

/// Defaults, then the config file, then --set, then dedicated flags.
ExperimentConfig build_config(const CommonFlags& flags, const KeyValues& extra) {
    ExperimentConfig cfg;
    if (!flags.config.empty()) cfg.apply(read_config(flags.config));
    KeyValues sets;
    for (const auto& s : flags.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
        sets[s.substr(0, eq)] = s.substr(eq + 1);
    }
    cfg.apply(sets);
    cfg.apply(extra);
    if (!flags.seeds.empty()) cfg.seeds = parse_seed_list(flags.seeds);
    if (!flags.out.empty()) cfg.out = flags.out;
    cfg.validate();
    return cfg;
}

void print_synthetic(const std::vector<SyntheticRun>& runs) {
    for (const auto& r : runs) {
        std::printf("seed %llu: spearman correlation=%.4f approximation=%.4f | final metric direct=%.4f "
                    "approximation=%.4f correlation=%.4f\n",
                    static_cast<unsigned long long>(r.seed), r.correlation.test_spearman,
                    r.approximation.test_spearman, r.direct.metric.back(), r.approximation.descent.metric.back(),
                    r.correlation.descent.metric.back());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned surrogate losses trained for rank correlation with a metric"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string task, mode, loss_ckpt, modes, loss, kind, corrupt;
    std::size_t steps = 0, samples = 0, points = 100;

    auto* synthetic = app.add_subcommand("synthetic", "correlation vs approximation study on a random-DNN metric");
    add_common(synthetic, flags);
    synthetic->add_option("--steps", steps, "surrogate training steps");

    auto* train_loss = app.add_subcommand("train-loss", "train a surrogate loss and write its checkpoint");
    add_common(train_loss, flags);
    train_loss->add_option("--task", task, "classification | synthetic");
    train_loss->add_option("--mode", mode, "correlation | approximation");

    auto* train_model = app.add_subcommand("train-model", "train the toy classifier under each loss and report");
    add_common(train_model, flags);
    train_model->add_option("--loss", loss_ckpt, "reuse a RELOSS01 checkpoint instead of training one");
    train_model->add_option("--modes", modes, "comma list of ce, reloss, ce+reloss, approx, rankloss");

    auto* corr_eval = app.add_subcommand("corr-eval", "rank correlation of a loss with accuracy");
    add_common(corr_eval, flags);
    corr_eval->add_option("--loss", loss, "ce | rankloss | negated-metric | constant | checkpoint path");
    corr_eval->add_option("--samples", samples, "number of generator draws");

    auto* sweep = app.add_subcommand("sweep", "correlation-level and capacity sweeps");
    add_common(sweep, flags);
    sweep->add_option("--kind", kind, "levels | capacity | both");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference checks of every differentiable op");
    gradcheck->add_option("--seed", flags.seeds, "seed for check points");
    gradcheck->add_option("--points", points, "random points per op");
    gradcheck->add_option("--corrupt", corrupt, "negative control: corrupt an op's derivative (elu)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        KeyValues extra;
        if (synthetic->parsed()) {
            if (synthetic->count("--steps")) extra["max_steps"] = std::to_string(steps);
            print_synthetic(cmd_synthetic(build_config(flags, extra)));
        } else if (train_loss->parsed()) {
            if (!task.empty()) extra["task"] = task;
            if (!mode.empty()) extra["mode"] = mode;
            const auto cfg = build_config(flags, extra);
            const auto results = cmd_train_loss(cfg);
            for (std::size_t i = 0; i < results.size(); ++i) {
                std::printf("seed %llu: validation spearman %.4f after %zu steps (%s)\n",
                            static_cast<unsigned long long>(cfg.seeds[i]), results[i].validation_spearman,
                            results[i].log.rows().size(), results[i].stop_reason.c_str());
            }
        } else if (train_model->parsed()) {
            if (!loss_ckpt.empty()) extra["loss_checkpoint"] = loss_ckpt;
            if (!modes.empty()) extra["modes"] = modes;
            for (const auto& r : cmd_toy_classification(build_config(flags, extra))) {
                std::printf("seed %llu %-10s accuracy=%.4f spearman=%.4f kendall=%.4f\n",
                            static_cast<unsigned long long>(r.seed), r.loss.c_str(), r.accuracy, r.spearman,
                            r.kendall);
            }
        } else if (corr_eval->parsed()) {
            if (!loss.empty()) extra["loss"] = loss;
            if (corr_eval->count("--samples")) extra["samples"] = std::to_string(samples);
            for (const auto& r : cmd_corr_eval(build_config(flags, extra))) {
                std::printf("seed %llu %s: spearman=%.4f kendall=%.4f over %zu samples\n",
                            static_cast<unsigned long long>(r.seed), r.loss.c_str(), r.spearman, r.kendall,
                            r.samples);
            }
        } else if (sweep->parsed()) {
            if (!kind.empty()) extra["sweep"] = kind;
            const auto result = cmd_sweeps(build_config(flags, extra));
            for (const auto& r : result.levels) {
                if (r.reached) {
                    std::printf("seed %llu level %.2f: reached at step %zu (rho=%.4f), accuracy=%.4f\n",
                                static_cast<unsigned long long>(r.seed), r.level, r.step, r.validation_spearman,
                                r.accuracy);
                } else {
                    std::printf("seed %llu level %.2f: not reached\n", static_cast<unsigned long long>(r.seed),
                                r.level);
                }
            }
            for (const auto& r : result.capacity) {
                std::printf("seed %llu width %zu depth %zu (%zu params): rho=%.4f accuracy=%.4f\n",
                            static_cast<unsigned long long>(r.seed), r.width, r.depth, r.parameters,
                            r.validation_spearman, r.accuracy);
            }
        } else if (gradcheck->parsed()) {
            GradCheckOptions options;
            options.points = points;
            if (!flags.seeds.empty()) options.seed = parse_seed_list(flags.seeds).front();
            if (!corrupt.empty()) {
                if (corrupt != "elu") throw UsageError("--corrupt supports only 'elu'");
                options.corrupt_elu = true;
            }
            return cmd_gradcheck(options, std::cout) ? kOk : kVerifyFailed;
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kUsage;
    } catch (const IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kVerifyFailed;
    }
    return kOk;
}
