// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
// criterion fails; nothing here is tuned to make a criterion pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "reloss/correlation.hpp"
#include "reloss/csv.hpp"
#include "reloss/gradcheck.hpp"
#include "reloss/random.hpp"
#include "reloss/experiments.hpp"
#include "reloss/softrank.hpp"

using namespace reloss;

namespace {

struct Outcome {
    int id;
    std::string title;
    bool pass;
    std::string detail;
};

std::vector<Outcome> outcomes;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
    std::printf("%s %2d. %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
    std::fflush(stdout);
    outcomes.push_back({id, title, pass, detail});
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%.4f") {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
    return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- synthetic study: criteria 1, 2, 3, 5, 10 ------------------------------------

void synthetic_criteria(const std::filesystem::path& out) {
    ExperimentConfig cfg;
    cfg.out = out / "synthetic";
    std::vector<double> corr, approx, secs, penalty, corr_final, approx_final, direct_final;
    std::vector<SyntheticRun> runs;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto t0 = std::chrono::steady_clock::now();
        runs.push_back(run_synthetic(cfg, seed));
        secs.push_back(seconds_since(t0));
        const auto& r = runs.back();
        corr.push_back(r.correlation.test_spearman);
        approx.push_back(r.approximation.test_spearman);
        penalty.push_back(r.correlation.result.log.trailing_mean_penalty(100));
        corr_final.push_back(r.correlation.descent.metric.back());
        approx_final.push_back(r.approximation.descent.metric.back());
        direct_final.push_back(r.direct.metric.back());
    }

    bool c1 = true, c2 = true, c3 = true;
    for (std::size_t s = 0; s < 3; ++s) {
        c1 = c1 && corr[s] <= -0.95 && runs[s].correlation.result.log.back().step <= 2000 && secs[s] <= 120.0;
        c2 = c2 && std::abs(corr[s]) > std::abs(approx[s]);
        c3 = c3 && corr_final[s] < approx_final[s] && direct_final[s] < corr_final[s] &&
             direct_final[s] < approx_final[s];
    }
    const std::vector<double> first3(corr.begin(), corr.begin() + 3);
    report(1, "correlation attainment", c1,
           "held-out hard Spearman " + join(first3) + " (need <= -0.95), seconds per seed " +
               join({secs[0], secs[1], secs[2]}, "%.1f"));
    report(2, "correlation beats approximation", c2,
           "held-out rho correlation " + join(first3) + " vs approximation " +
               join({approx[0], approx[1], approx[2]}));
    report(3, "downstream descent", c3,
           "final metric correlation " + join({corr_final[0], corr_final[1], corr_final[2]}) + ", approximation " +
               join({approx_final[0], approx_final[1], approx_final[2]}) + ", direct " +
               join({direct_final[0], direct_final[1], direct_final[2]}));

    // gradient penalty: lambda = 10 runs above, plus a lambda = 0 run that must still train
    auto free_cfg = cfg;
    free_cfg.trainer.penalty_weight = 0.0;
    free_cfg.trainer.max_steps = 300;
    const auto free_run = run_synthetic(free_cfg, 0);
    const bool free_ok = free_run.correlation.test_spearman < -0.5;
    const bool c5 = std::all_of(penalty.begin(), penalty.begin() + 3, [](double p) { return p <= 1e-2; }) && free_ok;
    report(5, "gradient-penalty efficacy", c5,
           "trailing-100 penalty " + join({penalty[0], penalty[1], penalty[2]}, "%.2e") +
               " (need <= 1e-2); lambda=0 run trains to rho " + fmt("%.4f", free_run.correlation.test_spearman) +
               ", penalty " + fmt("%.2e", free_run.correlation.result.log.trailing_mean_penalty(100)));

    // determinism: rerun seed 0 through the command and compare bytes; spread over 5 seeds
    auto a = cfg, b = cfg;
    a.seeds = b.seeds = {0};
    a.trainer.max_steps = b.trainer.max_steps = 300;
    a.out = out / "determinism_a";
    b.out = out / "determinism_b";
    cmd_synthetic(a);
    cmd_synthetic(b);
    bool identical = true;
    for (const char* f : {"fig2b.csv", "fig2c.csv", "trainlog_correlation.csv", "trainlog_approximation.csv",
                          "correlation.reloss", "approximation.reloss"}) {
        const auto x = slurp(a.out / "seed_0" / f);
        identical = identical && !x.empty() && x == slurp(b.out / "seed_0" / f);
    }
    const double mean = std::accumulate(corr.begin(), corr.end(), 0.0) / corr.size();
    double var = 0.0;
    for (double v : corr) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / (corr.size() - 1));
    report(10, "determinism and robustness", identical && sd <= 0.03,
           std::string(identical ? "repeat run byte-identical" : "repeat run DIFFERS") +
               "; final hard Spearman over 5 seeds " + join(corr) + ", sample sd " + fmt("%.4f", sd) +
               " (need <= 0.03)");
}

// ---- toy classification: criteria 4, 6, 11 ---------------------------------------------

void classification_criteria(const std::filesystem::path& out) {
    ExperimentConfig cfg;
    cfg.out = out / "toy";
    cfg.modes = {LossMode::CE, LossMode::ReLoss, LossMode::RankLoss};
    bool c4 = true, c6 = true;
    std::string d4, d6;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto rows = run_toy_classification(cfg, seed);
        auto find = [&](const char* name) {
            return *std::find_if(rows.begin(), rows.end(), [&](const ToyReportRow& r) { return r.loss == name; });
        };
        const auto ce = find("ce"), rl = find("reloss"), rk = find("rankloss");
        c4 = c4 && std::abs(rl.spearman) >= std::abs(ce.spearman) && std::abs(rl.kendall) >= std::abs(ce.kendall);
        c6 = c6 && rk.accuracy < ce.accuracy;
        d4 += "seed " + std::to_string(seed) + ": reloss " + fmt("%.4f", rl.spearman) + "/" + fmt("%.4f", rl.kendall) +
              " vs ce " + fmt("%.4f", ce.spearman) + "/" + fmt("%.4f", ce.kendall) + "; ";
        d6 += "seed " + std::to_string(seed) + ": rankloss " + fmt("%.3f", rk.accuracy) + " vs ce " +
              fmt("%.3f", ce.accuracy) + "; ";
    }
    report(4, "classification correlation direction", c4, d4 + "(Spearman/Kendall vs accuracy)");
    report(6, "rank-loss baseline direction", c6, d6);

    // correlation-vs-performance sweep
    std::vector<std::vector<LevelRow>> per_seed;
    for (std::uint64_t seed = 0; seed < 3; ++seed) per_seed.push_back(run_level_sweep(cfg, seed));
    bool all_reached = true;
    std::vector<double> means;
    std::string detail;
    for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
        double acc = 0.0;
        std::size_t reached = 0;
        for (const auto& rows : per_seed) {
            if (rows[l].reached) {
                acc += rows[l].accuracy;
                ++reached;
            }
        }
        all_reached = all_reached && reached == per_seed.size();
        means.push_back(reached ? acc / reached : 0.0);
        detail += "level " + fmt("%.2f", cfg.levels[l]) + ": reached " + std::to_string(reached) + "/3";
        if (reached) detail += ", mean accuracy " + fmt("%.4f", means.back());
        detail += "; ";
    }
    bool monotone = all_reached;
    for (std::size_t l = 1; l < means.size() && monotone; ++l) monotone = means[l] >= means[l - 1];
    report(11, "correlation-vs-performance monotonicity", monotone,
           detail + (all_reached ? "" : "a level was never reached within the step budget"));
}

// ---- property suites: criteria 7, 8, 9 ---------------------------------------------------

void property_criteria(const char* cli) {
    // 7: soft-rank fidelity
    Rng rng(7);
    double worst_rank = 0.0, worst_sum = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 2 + rng.below(31);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = 0.1 * static_cast<double>(i) + 0.05 * rng.uniform();  // gaps >= 0.05
        for (std::size_t i = 0; i < n; ++i) v[i] *= 2.0;  // gaps >= 0.1
        for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
        const auto soft = soft_rank<double>(v, 1000.0);
        const auto hard = hard_rank(v);
        for (std::size_t i = 0; i < n; ++i) worst_rank = std::max(worst_rank, std::abs(soft[i] - hard[i]));
        std::vector<double> u(n);
        for (double& x : u) x = rng.normal();
        const auto p = relaxed_permutation<double>(u, 2.0);
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0, col = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row += p(i, j);
                col += p(j, i);
            }
            worst_sum = std::max({worst_sum, std::abs(row - 1.0), std::abs(col - 1.0)});
        }
    }
    report(7, "soft-rank fidelity", worst_rank <= 1e-3 && worst_sum <= 1e-6,
           "max |soft - hard| at steepness 1e3 " + fmt("%.2e", worst_rank) + " (need <= 1e-3); max row/column sum error " +
               fmt("%.2e", worst_sum) + " (need <= 1e-6)");

    // 8: correlation oracles
    double worst_spearman = 0.0;
    bool kendall_exact = true;
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 2 + rng.below(5);
        std::vector<double> pool{1, 2, 3, 4, 5, 6}, a, b;
        for (std::size_t i = 6; i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
        a.assign(pool.begin(), pool.begin() + n);
        for (std::size_t i = 6; i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
        b.assign(pool.begin(), pool.begin() + n);
        const auto ra = hard_rank(a), rb = hard_rank(b);
        double d2 = 0.0;
        int conc = 0, disc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
            for (std::size_t j = i + 1; j < n; ++j) {
                const double s = (a[i] - a[j]) * (b[i] - b[j]);
                conc += s > 0;
                disc += s < 0;
            }
        }
        const double nn = static_cast<double>(n);
        const double closed = 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
        worst_spearman = std::max(worst_spearman, std::abs(spearman_hard(a, b).value - closed));
        kendall_exact = kendall_exact && kendall_tau(a, b).value == (conc - disc) / (nn * (nn - 1.0) / 2.0);
    }
    // The 1e-8 standard-deviation guard moves the value by at most ~1e-8.
    report(8, "correlation oracle", worst_spearman <= 1e-7 && kendall_exact,
           "max |spearman - closed form| " + fmt("%.2e", worst_spearman) +
               " (exact up to the 1e-8 std guard); Kendall " + (kendall_exact ? "bit-exact" : "MISMATCH") +
               " on 500 cases");

    // 9: differentiation correctness, through the library and through the CLI
    std::ostringstream lines;
    const bool suite = cmd_gradcheck(GradCheckOptions{}, lines);
    double worst_first = 0.0, worst_second = 0.0;
    for (const auto& r : run_gradcheck_suite(GradCheckOptions{})) {
        double& slot = r.tolerance > 1e-4 ? worst_second : worst_first;
        slot = std::max(slot, r.max_rel_error);
    }
    int status = std::system((std::string(cli) + " gradcheck > /dev/null 2>&1").c_str());
    const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    report(9, "differentiation correctness", suite && exit_code == 0 && worst_first <= 1e-4 && worst_second <= 1e-3,
           "worst first-order " + fmt("%.2e", worst_first) + " (<= 1e-4), worst soft-Spearman/second-order " +
               fmt("%.2e", worst_second) + " (<= 1e-3); gradcheck command exit " + std::to_string(exit_code));
}

}  // namespace

int main(int argc, char** argv) {
    std::filesystem::path out = "acceptance_out";
    std::string cli = RELOSS_CLI_PATH;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--out") out = argv[i + 1];
        else if (flag == "--cli") cli = argv[i + 1];
        else {
            std::fprintf(stderr, "usage: %s [--out DIR] [--cli PATH]\n", argv[0]);
            return 2;
        }
    }
    std::filesystem::create_directories(out);

    try {
        property_criteria(cli.c_str());
        synthetic_criteria(out);
        classification_criteria(out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
        return 1;
    }

    std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
    CsvWriter csv({"criterion", "title", "result", "detail"});
    std::size_t passed = 0;
    std::printf("\nsummary\n");
    for (const auto& o : outcomes) {
        std::printf("%s %2d. %s\n", o.pass ? "PASS" : "FAIL", o.id, o.title.c_str());
        std::string detail = o.detail;
        std::replace(detail.begin(), detail.end(), ',', ' ');
        csv.add({std::to_string(o.id), o.title, o.pass ? "PASS" : "FAIL", detail});
        passed += o.pass;
    }
    csv.write(out / "acceptance.csv");
    std::printf("%zu/%zu criteria pass\n", passed, outcomes.size());
    return passed == outcomes.size() ? 0 : 1;
}
