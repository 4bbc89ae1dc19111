#include "reloss/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "reloss/correlation.hpp"

namespace reloss {

namespace {

constexpr std::uint64_t kTestStream = 21;
constexpr std::uint64_t kEvalStream = 22;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long x = 0;
    try {
        if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
        x = std::stoull(v, &used);
    } catch (const std::exception&) {
        throw UsageError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    if (used != v.size()) throw UsageError(key + ": expected a non-negative integer, got '" + v + "'");
    return x;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw UsageError(key + ": expected a number, got '" + v + "'");
    }
    if (used != v.size() || !std::isfinite(x)) throw UsageError(key + ": expected a number, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw UsageError(key + ": expected a boolean, got '" + v + "'");
}

std::filesystem::path seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto dir = cfg.out / ("seed_" + std::to_string(seed));
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

void ensure_out(const ExperimentConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    if (ec) throw IoError("cannot create " + cfg.out.string() + ": " + ec.message());
}

ToyTrainConfig toy_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    ToyTrainConfig t = cfg.toy;
    t.seed = seed;
    t.keep_dumps = false;
    return t;
}

double reloss_accuracy(const ExperimentConfig& cfg, const ToyContext& ctx, std::uint64_t seed,
                       const LossNetWeights& w) {
    return train_prediction_model(LossMode::ReLoss, ctx.data, toy_config(cfg, seed), w).accuracy;
}

/// Steps at which a curve was recorded and the value seen there.
using Curve = std::map<std::size_t, double>;

double value_at(const Curve& c, std::size_t step) {
    auto it = c.upper_bound(step);
    return it == c.begin() ? c.begin()->second : std::prev(it)->second;
}

}  // namespace

// ---- config ------------------------------------------------------------------

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& item : split_list(text)) seeds.push_back(to_u64("seed", item));
    if (seeds.empty()) throw UsageError("seed list is empty");
    return seeds;
}

void ExperimentConfig::apply(const KeyValues& kv) {
    for (const auto& [key, v] : kv) {
        TrainerConfig& t = trainer;
        if (key == "sub_batches") t.sub_batches = to_size(key, v);
        else if (key == "penalty_weight" || key == "lambda") t.penalty_weight = to_double(key, v);
        else if (key == "steepness") t.steepness = to_double(key, v);
        else if (key == "learning_rate") t.adam.learning_rate = to_double(key, v);
        else if (key == "weight_decay") t.adam.weight_decay = to_double(key, v);
        else if (key == "beta1") t.adam.beta1 = to_double(key, v);
        else if (key == "beta2") t.adam.beta2 = to_double(key, v);
        else if (key == "eps") t.adam.eps = to_double(key, v);
        else if (key == "max_steps") t.max_steps = to_size(key, v);
        else if (key == "window") t.window = to_size(key, v);
        else if (key == "plateau_tolerance") t.plateau_tolerance = to_double(key, v);
        else if (key == "patience") t.patience = to_size(key, v);
        else if (key == "target_spearman") t.target_spearman = to_double(key, v);
        else if (key == "validation_sub_batches") t.validation_sub_batches = to_size(key, v);
        else if (key == "warmup_sub_batches") t.warmup_sub_batches = to_size(key, v);
        else if (key == "mode") {
            if (v == "correlation") t.mode = ObjectiveMode::Correlation;
            else if (v == "approximation") t.mode = ObjectiveMode::Approximation;
            else throw UsageError("mode: expected correlation or approximation, got '" + v + "'");
        }
        else if (key == "alternate_training") t.alternate_training = to_bool(key, v);
        else if (key == "alternate_steps") t.alternate_steps = to_size(key, v);
        else if (key == "record_wall_clock") t.record_wall_clock = to_bool(key, v);
        else if (key == "orient_init") t.orient_init = to_bool(key, v);
        else if (key == "p") generator.p = to_double(key, v);
        else if (key == "sub_batch") generator.sub_batch = to_size(key, v);
        else if (key == "num_classes") generator.num_classes = blobs.classes = to_size(key, v);
        else if (key == "input_width") generator.input_width = to_size(key, v);
        else if (key == "input_scale") generator.input_scale = descent.input_scale = to_double(key, v);
        else if (key == "dump_paths") {
            generator.dump_paths.clear();
            for (const auto& item : split_list(v)) generator.dump_paths.emplace_back(item);
        }
        else if (key == "dim") blobs.dim = to_size(key, v);
        else if (key == "train_size") blobs.train = to_size(key, v);
        else if (key == "validation_size") blobs.validation = to_size(key, v);
        else if (key == "center_scale") blobs.center_scale = to_double(key, v);
        else if (key == "epochs") toy.epochs = to_size(key, v);
        else if (key == "batch_size") toy.batch_size = to_size(key, v);
        else if (key == "hidden") toy.hidden = to_size(key, v);
        else if (key == "hidden_layers") toy.hidden_layers = to_size(key, v);
        else if (key == "model_learning_rate") toy.adam.learning_rate = to_double(key, v);
        else if (key == "model_weight_decay") toy.adam.weight_decay = to_double(key, v);
        else if (key == "alpha") toy.alpha = to_double(key, v);
        else if (key == "rank_steepness") toy.steepness = to_double(key, v);
        else if (key == "descent_points") descent.points = to_size(key, v);
        else if (key == "descent_steps") descent.steps = to_size(key, v);
        else if (key == "descent_learning_rate") descent.learning_rate = to_double(key, v);
        else if (key == "metric_hidden") metric_hidden = to_size(key, v);
        else if (key == "loss_hidden") loss_hidden = to_size(key, v);
        else if (key == "classification_steps") classification_steps = to_size(key, v);
        else if (key == "eval_sub_batches") eval_sub_batches = to_size(key, v);
        else if (key == "record_every") record_every = descent.record_every = to_size(key, v);
        else if (key == "modes") {
            modes.clear();
            for (const auto& item : split_list(v)) modes.push_back(parse_loss_mode(item));
        }
        else if (key == "levels") {
            levels.clear();
            for (const auto& item : split_list(v)) levels.push_back(to_double(key, item));
        }
        else if (key == "widths") {
            widths.clear();
            for (const auto& item : split_list(v)) widths.push_back(to_size(key, item));
        }
        else if (key == "depths") {
            depths.clear();
            for (const auto& item : split_list(v)) depths.push_back(to_size(key, item));
        }
        else if (key == "sweep_every") sweep_every = to_size(key, v);
        else if (key == "sweep") sweep = v;
        else if (key == "task") task = v;
        else if (key == "loss") loss = v;
        else if (key == "samples") samples = to_size(key, v);
        else if (key == "loss_checkpoint") loss_checkpoint = v;
        else if (key == "seed" || key == "seeds") seeds = parse_seed_list(v);
        else if (key == "out") out = v;
        else throw UsageError("unknown config key '" + key + "'");
    }
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw UsageError("at least one seed is required");
    try {
        trainer.validate();
        trainer.adam.validate();
        toy.adam.validate();
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (trainer.alternate_training && trainer.alternate_steps == 0) {
        throw UsageError("alternate training needs alternate_steps > 0");
    }
    if (eval_sub_batches < 3) throw UsageError("eval_sub_batches must be at least 3");
    if (record_every == 0 || sweep_every == 0) throw UsageError("record cadences must be positive");
    if (sweep != "levels" && sweep != "capacity" && sweep != "both") {
        throw UsageError("sweep: expected levels, capacity or both, got '" + sweep + "'");
    }
    if (task != "classification" && task != "synthetic") {
        throw UsageError("task: expected classification or synthetic, got '" + task + "'");
    }
}

// ---- synthetic ---------------------------------------------------------------

SyntheticRun run_synthetic(const ExperimentConfig& cfg, std::uint64_t seed) {
    const std::size_t d = cfg.generator.input_width;
    auto metric = std::make_shared<SyntheticMetric>(d, seed, cfg.metric_hidden);
    GeneratorConfig gen = cfg.generator;
    gen.task = TaskKind::Synthetic;
    gen.p = 1.0;
    gen.sub_batch = 1;
    gen.seed = seed;
    const SurrogateTask task{BatchSampler(gen), metric, LossNetSpec::generic(d, cfg.loss_hidden)};
    const StepBatch test = draw_step_batch(task, 1000, derive_seed(seed, {kTestStream}));

    DescentConfig dc = cfg.descent;
    dc.seed = seed;
    dc.input_scale = gen.input_scale;

    SyntheticRun run;
    run.seed = seed;
    std::map<ObjectiveMode, Curve> curves;
    for (ObjectiveMode mode : {ObjectiveMode::Approximation, ObjectiveMode::Correlation}) {
        TrainerConfig tc = cfg.trainer;
        tc.seed = seed;
        tc.mode = mode;
        SurrogateTrainer trainer(tc, task);
        Curve& curve = curves[mode];
        curve[0] = trainer.validation_spearman(trainer.weights());
        SyntheticArm arm;
        arm.result = trainer.run([&](const SurrogateTrainer& t) {
            if (t.steps_done() % cfg.record_every == 0) curve[t.steps_done()] = t.validation_spearman(t.weights());
            return true;
        });
        curve[trainer.steps_done()] = trainer.validation_spearman(trainer.weights());
        arm.test_spearman = spearman_hard(surrogate_values(arm.result.weights, test), test.score).value;
        arm.descent = descend_inputs(arm.result.weights, 1.0, *metric, dc);
        (mode == ObjectiveMode::Correlation ? run.correlation : run.approximation) = std::move(arm);
    }
    run.direct = descend_inputs(metric->network(), 1.0, *metric, dc);

    std::vector<std::size_t> steps;
    for (const auto& [mode, curve] : curves) {
        for (const auto& [s, v] : curve) steps.push_back(s);
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    for (std::size_t s : steps) {
        run.fig2b.add({std::to_string(s), csv_number(-1.0),
                       csv_number(value_at(curves[ObjectiveMode::Approximation], s)),
                       csv_number(value_at(curves[ObjectiveMode::Correlation], s))});
    }
    for (std::size_t i = 0; i < run.direct.steps.size(); ++i) {
        run.fig2c.add({std::to_string(run.direct.steps[i]), csv_number(run.direct.metric[i]),
                       csv_number(run.approximation.descent.metric[i]),
                       csv_number(run.correlation.descent.metric[i])});
    }
    return run;
}

std::vector<SyntheticRun> cmd_synthetic(const ExperimentConfig& cfg) {
    cfg.validate();
    ensure_out(cfg);
    CsvWriter summary({"seed", "arm", "steps", "stop_reason", "best_step", "validation_spearman", "test_spearman",
                       "final_metric"});
    std::vector<SyntheticRun> runs;
    for (std::uint64_t seed : cfg.seeds) {
        auto run = run_synthetic(cfg, seed);
        const auto dir = seed_dir(cfg, seed);
        run.fig2b.write(dir / "fig2b.csv");
        run.fig2c.write(dir / "fig2c.csv");
        const std::pair<const char*, const SyntheticArm*> arms[] = {{"approximation", &run.approximation},
                                                                    {"correlation", &run.correlation}};
        for (const auto& [name, arm] : arms) {
            arm->result.log.write(dir / (std::string("trainlog_") + name + ".csv"));
            save_checkpoint(arm->result.weights, dir / (std::string(name) + ".reloss"));
            summary.add({std::to_string(seed), name, std::to_string(arm->result.log.rows().size()),
                         arm->result.stop_reason, std::to_string(arm->result.best_step),
                         csv_number(arm->result.validation_spearman), csv_number(arm->test_spearman),
                         csv_number(arm->descent.metric.back())});
        }
        summary.add({std::to_string(seed), "direct", "0", "-", "0", csv_number(-1.0), csv_number(-1.0),
                     csv_number(run.direct.metric.back())});
        runs.push_back(std::move(run));
    }
    summary.write(cfg.out / "synthetic_summary.csv");
    return runs;
}

// ---- toy classification ---------------------------------------------------------

ToyContext make_toy_context(const ExperimentConfig& cfg, std::uint64_t seed) {
    BlobsConfig bc = cfg.blobs;
    bc.seed = seed;
    ToyTrainConfig tc = cfg.toy;
    tc.seed = seed;
    tc.keep_dumps = cfg.generator.dump_paths.empty();
    GeneratorConfig gen = cfg.generator;
    gen.task = TaskKind::Classification;
    gen.num_classes = bc.classes;
    gen.seed = seed;

    auto data = make_blobs(bc);
    auto ce_run = train_prediction_model(LossMode::CE, data, tc);
    BatchSampler sampler = gen.dump_paths.empty() ? BatchSampler(gen, ce_run.dumps) : BatchSampler(gen);
    for (const auto& dump : sampler.dumps()) {
        if (dump.num_classes != bc.classes) throw FormatError("prediction dump class count does not match the task");
    }
    return {std::move(data), std::move(ce_run),
            SurrogateTask{std::move(sampler), std::make_shared<AccuracyMetric>(), LossNetSpec::classification()}};
}

SurrogateResult train_toy_surrogate(const ExperimentConfig& cfg, const ToyContext& ctx, std::uint64_t seed,
                                    ObjectiveMode mode) {
    TrainerConfig tc = cfg.trainer;
    tc.seed = seed;
    tc.mode = mode;
    tc.max_steps = cfg.classification_steps;
    return SurrogateTrainer(tc, ctx.task).run();
}

std::vector<SurrogateResult> cmd_train_loss(const ExperimentConfig& cfg) {
    cfg.validate();
    ensure_out(cfg);
    std::vector<SurrogateResult> out;
    for (std::uint64_t seed : cfg.seeds) {
        const auto dir = seed_dir(cfg, seed);
        SurrogateResult result;
        if (cfg.task == "synthetic") {
            const std::size_t d = cfg.generator.input_width;
            GeneratorConfig gen = cfg.generator;
            gen.task = TaskKind::Synthetic;
            gen.p = 1.0;
            gen.sub_batch = 1;
            gen.seed = seed;
            TrainerConfig tc = cfg.trainer;
            tc.seed = seed;
            result = SurrogateTrainer(tc, SurrogateTask{BatchSampler(gen),
                                                        std::make_shared<SyntheticMetric>(d, seed, cfg.metric_hidden),
                                                        LossNetSpec::generic(d, cfg.loss_hidden)})
                         .run();
        } else {
            const auto ctx = make_toy_context(cfg, seed);
            if (cfg.generator.dump_paths.empty()) {
                std::filesystem::create_directories(dir / "dumps");
                for (std::size_t e = 0; e < ctx.ce_run.dumps.size(); ++e) {
                    char name[32];
                    std::snprintf(name, sizeof name, "epoch_%03zu.csv", e);
                    write_dump(ctx.ce_run.dumps[e], dir / "dumps" / name);
                }
            }
            result = train_toy_surrogate(cfg, ctx, seed, cfg.trainer.mode);
        }
        save_checkpoint(result.weights, dir / "loss.reloss");
        result.log.write(dir / "trainlog.csv");
        out.push_back(std::move(result));
    }
    return out;
}

std::vector<ToyReportRow> run_toy_classification(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto ctx = make_toy_context(cfg, seed);
    const auto uses = [&](std::initializer_list<LossMode> ms) {
        return std::any_of(cfg.modes.begin(), cfg.modes.end(),
                           [&](LossMode m) { return std::find(ms.begin(), ms.end(), m) != ms.end(); });
    };
    std::optional<LossNetWeights> reloss, approx;
    if (uses({LossMode::ReLoss, LossMode::CEPlusReLoss})) {
        reloss = cfg.loss_checkpoint.empty() ? train_toy_surrogate(cfg, ctx, seed, ObjectiveMode::Correlation).weights
                                             : load_checkpoint(cfg.loss_checkpoint);
        if (reloss->input_width() != 1) throw FormatError("loss checkpoint is not a classification loss");
    }
    if (uses({LossMode::Approx})) approx = train_toy_surrogate(cfg, ctx, seed, ObjectiveMode::Approximation).weights;

    Rng rng(derive_seed(seed, {kEvalStream}));
    std::vector<BatchSample> eval;
    std::vector<double> acc;
    for (std::size_t i = 0; i < cfg.eval_sub_batches; ++i) {
        eval.push_back(ctx.task.sampler.sample(rng));
        acc.push_back(accuracy(eval.back()));
    }

    std::vector<ToyReportRow> rows;
    for (LossMode mode : cfg.modes) {
        const ToyTrainConfig tc = toy_config(cfg, seed);
        PredictionModelResult model;
        switch (mode) {
            case LossMode::ReLoss:
                model = cfg.trainer.alternate_training ? train_alternate(cfg, ctx, seed, *reloss)
                                                       : train_prediction_model(mode, ctx.data, tc, reloss);
                break;
            case LossMode::CEPlusReLoss: model = train_prediction_model(mode, ctx.data, tc, reloss); break;
            case LossMode::Approx: model = train_prediction_model(mode, ctx.data, tc, approx, true); break;
            default: model = train_prediction_model(mode, ctx.data, tc); break;
        }
        std::vector<double> values;
        for (const auto& b : eval) {
            switch (mode) {
                case LossMode::CE: values.push_back(ce_loss(b)); break;
                case LossMode::ReLoss: values.push_back(forward_loss(*reloss, b)); break;
                case LossMode::CEPlusReLoss: values.push_back(ce_loss(b) + cfg.toy.alpha * forward_loss(*reloss, b)); break;
                case LossMode::Approx: values.push_back(-forward_loss(*approx, b)); break;
                case LossMode::RankLoss: values.push_back(rank_loss(b, cfg.toy.steepness)); break;
            }
        }
        rows.push_back({seed, loss_mode_name(mode), model.accuracy, spearman_hard(values, acc).value,
                        kendall_tau(values, acc).value});
    }
    return rows;
}

std::vector<ToyReportRow> cmd_toy_classification(const ExperimentConfig& cfg) {
    cfg.validate();
    ensure_out(cfg);
    CsvWriter report({"seed", "loss", "accuracy", "spearman", "kendall"});
    std::vector<ToyReportRow> all;
    for (std::uint64_t seed : cfg.seeds) {
        for (auto& r : run_toy_classification(cfg, seed)) {
            report.add({std::to_string(r.seed), r.loss, csv_number(r.accuracy), csv_number(r.spearman),
                        csv_number(r.kendall)});
            all.push_back(std::move(r));
        }
    }
    report.write(cfg.out / "report.csv");
    return all;
}

// ---- corr-eval --------------------------------------------------------------------

CorrEvalRow run_corr_eval(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.samples < 3) throw UsageError("corr-eval needs at least 3 samples");
    const auto ctx = make_toy_context(cfg, seed);
    std::optional<LossNetWeights> net;
    const bool builtin = cfg.loss == "ce" || cfg.loss == "rankloss" || cfg.loss == "negated-metric" ||
                         cfg.loss == "constant";
    if (!builtin) {
        net = load_checkpoint(cfg.loss);
        if (net->input_width() != 1) throw FormatError("loss checkpoint is not a classification loss");
    }
    Rng rng(derive_seed(seed, {kEvalStream}));
    std::vector<double> loss, acc;
    for (std::size_t i = 0; i < cfg.samples; ++i) {
        const auto b = ctx.task.sampler.sample(rng);
        const double a = accuracy(b);
        acc.push_back(a);
        if (net) loss.push_back(forward_loss(*net, b));
        else if (cfg.loss == "ce") loss.push_back(ce_loss(b));
        else if (cfg.loss == "rankloss") loss.push_back(rank_loss(b, cfg.toy.steepness));
        else if (cfg.loss == "negated-metric") loss.push_back(-a);
        else loss.push_back(0.0);
    }
    return {seed, cfg.loss, cfg.samples, spearman_hard(loss, acc).value, kendall_tau(loss, acc).value};
}

std::vector<CorrEvalRow> cmd_corr_eval(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.samples < 3) throw UsageError("corr-eval needs at least 3 samples");
    ensure_out(cfg);
    CsvWriter csv({"seed", "loss", "samples", "spearman", "kendall"});
    std::vector<CorrEvalRow> rows;
    for (std::uint64_t seed : cfg.seeds) {
        auto r = run_corr_eval(cfg, seed);
        csv.add({std::to_string(r.seed), r.loss, std::to_string(r.samples), csv_number(r.spearman),
                 csv_number(r.kendall)});
        rows.push_back(std::move(r));
    }
    csv.write(cfg.out / "corr_eval.csv");
    return rows;
}

// ---- sweeps -------------------------------------------------------------------------

std::vector<LevelRow> run_level_sweep(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.levels.empty()) throw UsageError("sweep needs at least one correlation level");
    const auto ctx = make_toy_context(cfg, seed);
    TrainerConfig tc = cfg.trainer;
    tc.seed = seed;
    tc.mode = ObjectiveMode::Correlation;
    tc.max_steps = cfg.classification_steps;
    SurrogateTrainer trainer(tc, ctx.task);

    std::vector<LevelRow> rows;
    for (double level : cfg.levels) rows.push_back({seed, level, false, 0, 0.0, 0.0});
    std::vector<LossNetWeights> snaps(rows.size());
    auto watch = [&](const SurrogateTrainer& t) {
        const double v = t.validation_spearman(t.weights());
        bool pending = false;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!rows[i].reached && v <= rows[i].level) {
                rows[i] = {seed, rows[i].level, true, t.steps_done(), v, 0.0};
                snaps[i] = t.weights();
            }
            pending = pending || !rows[i].reached;
        }
        return pending;
    };
    if (watch(trainer)) {
        trainer.run([&](const SurrogateTrainer& t) { return t.steps_done() % cfg.sweep_every != 0 || watch(t); });
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].reached) rows[i].accuracy = reloss_accuracy(cfg, ctx, seed, snaps[i]);
    }
    return rows;
}

std::vector<CapacityRow> run_capacity_sweep(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.widths.empty() || cfg.depths.empty()) throw UsageError("capacity sweep grid is empty");
    auto ctx = make_toy_context(cfg, seed);
    std::vector<CapacityRow> rows;
    for (std::size_t depth : cfg.depths) {
        for (std::size_t width : cfg.widths) {
            if (depth == 0 || width == 0) throw UsageError("capacity grid entries must be positive");
            ctx.task.spec = LossNetSpec::classification(width, depth + 1);
            const auto result = train_toy_surrogate(cfg, ctx, seed, ObjectiveMode::Correlation);
            rows.push_back({seed, width, depth, result.weights.parameter_count(), result.validation_spearman,
                            reloss_accuracy(cfg, ctx, seed, result.weights)});
        }
    }
    return rows;
}

SweepResult cmd_sweeps(const ExperimentConfig& cfg) {
    cfg.validate();
    const bool levels = cfg.sweep != "capacity", capacity = cfg.sweep != "levels";
    if (levels && cfg.levels.empty()) throw UsageError("sweep needs at least one correlation level");
    if (capacity && (cfg.widths.empty() || cfg.depths.empty())) throw UsageError("capacity sweep grid is empty");
    ensure_out(cfg);
    SweepResult out;
    for (std::uint64_t seed : cfg.seeds) {
        if (levels) {
            auto rows = run_level_sweep(cfg, seed);
            out.levels.insert(out.levels.end(), rows.begin(), rows.end());
        }
        if (capacity) {
            auto rows = run_capacity_sweep(cfg, seed);
            out.capacity.insert(out.capacity.end(), rows.begin(), rows.end());
        }
    }
    if (levels) {
        CsvWriter csv({"seed", "level", "reached", "step", "validation_spearman", "accuracy"});
        for (const auto& r : out.levels) {
            // unreached levels keep their row but carry no measurements
            csv.add({std::to_string(r.seed), csv_number(r.level), r.reached ? "1" : "0",
                     r.reached ? std::to_string(r.step) : "", r.reached ? csv_number(r.validation_spearman) : "",
                     r.reached ? csv_number(r.accuracy) : ""});
        }
        csv.write(cfg.out / "sweep_levels.csv");
    }
    if (capacity) {
        CsvWriter csv({"seed", "width", "depth", "parameters", "validation_spearman", "accuracy"});
        for (const auto& r : out.capacity) {
            csv.add({std::to_string(r.seed), std::to_string(r.width), std::to_string(r.depth),
                     std::to_string(r.parameters), csv_number(r.validation_spearman), csv_number(r.accuracy)});
        }
        csv.write(cfg.out / "sweep_capacity.csv");
    }
    return out;
}

// ---- gradcheck ------------------------------------------------------------------------

bool cmd_gradcheck(const GradCheckOptions& options, std::ostream& out) {
    bool ok = true;
    char line[160];
    for (const auto& r : run_gradcheck_suite(options)) {
        std::snprintf(line, sizeof line, "%-18s max_rel_error=%.3e tolerance=%.0e points=%zu %s\n", r.op.c_str(),
                      r.max_rel_error, r.tolerance, r.points, r.passed() ? "PASS" : "FAIL");
        out << line;
        ok = ok && r.passed();
    }
    return ok;
}

// ---- alternate training -------------------------------------------------------------

PredictionModelResult train_alternate(const ExperimentConfig& cfg, const ToyContext& ctx, std::uint64_t seed,
                                      LossNetWeights initial) {
    if (cfg.trainer.alternate_steps == 0) throw UsageError("alternate training needs alternate_steps > 0");
    TrainerConfig tc = cfg.trainer;
    tc.seed = seed;
    tc.mode = ObjectiveMode::Correlation;
    SurrogateTrainer trainer(tc, ctx.task, std::move(initial));
    auto dumps = ctx.task.sampler.dumps();
    const auto hook = [&](std::size_t, const Classifier& model, LossNetWeights& surrogate) {
        dumps.push_back(dump_predictions(model, ctx.data.train));
        trainer.set_dumps(dumps);
        trainer.run_steps(cfg.trainer.alternate_steps);
        surrogate = trainer.weights();
    };
    return train_prediction_model(LossMode::ReLoss, ctx.data, toy_config(cfg, seed), trainer.weights(), false, hook);
}

}  // namespace reloss
