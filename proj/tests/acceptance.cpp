// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one pass/fail line each. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "chr/experiments.hpp"
#include "chr/selfcheck.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const Outcome& out, double seconds,
            double limit_seconds = 0.0) {
    bool pass = out.pass;
    std::string detail = out.detail;
    if (limit_seconds > 0.0 && seconds > limit_seconds) {
        pass = false;
        detail += " [exceeded " + std::to_string(limit_seconds) + " s budget]";
    }
    std::printf("[%s] criterion %d: %s — %s (%.1f s)\n", pass ? "PASS" : "FAIL", id,
                name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

template <typename Fn>
void run(int id, const std::string& name, double limit_seconds, Fn&& fn) {
    const auto t0 = Clock::now();
    Outcome out;
    try {
        out = fn();
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    report(id, name, out, secs, limit_seconds);
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

chr::ExperimentConfig oracle_experiment(const std::string& method, double flip, int reps,
                                        std::size_t n_train, std::size_t n_cal,
                                        std::size_t n_test, int bins, std::uint64_t seed) {
    chr::ExperimentConfig cfg;
    cfg.method = method;
    cfg.model.type = "oracle";
    cfg.data.flip_prob = flip;
    cfg.alpha = 0.1;
    cfg.bins = bins;
    cfg.n_train = n_train;
    cfg.n_cal = n_cal;
    cfg.n_test = n_test;
    cfg.repetitions = reps;
    cfg.seed = seed;
    cfg.compute_wsc = false;
    return cfg;
}

}  // namespace

int main() {
    std::printf("acceptance suite (alpha = 0.1 unless stated)\n");

    run(1, "shortest-interval kernel matches exhaustive enumeration", 10.0, [] {
        const auto r = chr::selfcheck::kernel_vs_bruteforce(1000, 0xACCE5501ULL);
        return Outcome{r.pass, r.detail};
    });

    run(2, "nested sequences: S_{t-1} within S_t on 10k fuzz cases", 60.0, [] {
        const auto r = chr::selfcheck::nesting_fuzz(10000, 0xACCE5502ULL);
        return Outcome{r.pass, r.detail};
    });

    run(3, "split-conformal marginal coverage in [0.89, 0.91] (k-NN, 100 reps)", 600.0, [] {
        chr::ExperimentConfig cfg;
        cfg.method = "chr";
        cfg.model.type = "knn";
        cfg.data.flip_prob = 0.0;
        cfg.alpha = 0.1;
        cfg.bins = 100;
        cfg.n_train = 1000;
        cfg.n_cal = 1000;
        cfg.n_test = 2000;
        cfg.repetitions = 100;
        cfg.seed = 0xC0FE03ULL;
        const auto rep = chr::run_experiment(cfg);
        const bool ok = rep.mean_coverage >= 0.89 && rep.mean_coverage <= 0.91;
        return Outcome{ok, "mean coverage " + fmt(rep.mean_coverage) + " (se " +
                               fmt(rep.se_coverage) + "), wsc " + fmt(rep.mean_wsc) +
                               ", width " + fmt(rep.mean_width, 2)};
    });

    run(4, "randomized trim: mean trimmed mass equals tau (1e5 draws)", 60.0, [] {
        const auto r = chr::selfcheck::trim_mean_mass(100000, 0xACCE5504ULL);
        return Outcome{r.pass, r.detail};
    });

    run(5, "skewed data: CHR width at most 0.8x CQR width (oracle model)", 300.0, [] {
        const auto chr_rep = chr::run_experiment(
            oracle_experiment("chr", 0.0, 100, 1000, 1000, 1000, 100, 0xC0FE05ULL));
        const auto cqr_rep = chr::run_experiment(
            oracle_experiment("cqr", 0.0, 100, 1000, 1000, 1000, 100, 0xC0FE05ULL));
        const double ratio = chr_rep.mean_width / cqr_rep.mean_width;
        return Outcome{ratio <= 0.8, "CHR " + fmt(chr_rep.mean_width, 3) + " vs CQR " +
                                         fmt(cqr_rep.mean_width, 3) + ", ratio " + fmt(ratio)};
    });

    run(6, "symmetric data: CHR and CQR widths within 10% (oracle model)", 300.0, [] {
        const auto chr_rep = chr::run_experiment(
            oracle_experiment("chr", 0.5, 100, 1000, 1000, 1000, 100, 0xC0FE06ULL));
        const auto cqr_rep = chr::run_experiment(
            oracle_experiment("cqr", 0.5, 100, 1000, 1000, 1000, 100, 0xC0FE06ULL));
        const double rel = std::abs(chr_rep.mean_width - cqr_rep.mean_width) /
                           cqr_rep.mean_width;
        return Outcome{rel <= 0.10, "CHR " + fmt(chr_rep.mean_width, 3) + " vs CQR " +
                                        fmt(cqr_rep.mean_width, 3) + ", gap " +
                                        fmt(100.0 * rel, 2) + "%"};
    });

    run(7, "oracle convergence: width gap positive, shrinking, <= 5% at n=5000", 900.0, [] {
        // Bin count scales with the calibration size, matching the regime in
        // which the estimator approaches the oracle.
        const std::vector<std::size_t> sizes{500, 2000, 5000};
        chr::SyntheticConfig law;  // defaults, flip 0
        const double oracle_w = chr::oracle_mean_width(law, 0.9);
        std::vector<double> gaps;
        std::string detail = "oracle width " + fmt(oracle_w, 3) + ";";
        for (std::size_t n : sizes) {
            const int bins = static_cast<int>(n / 25);
            const auto rep = chr::run_experiment(oracle_experiment(
                "chr", 0.0, 80, n, n, 1000, bins, 0xC0FE07ULL));
            gaps.push_back(rep.mean_width - oracle_w);
            detail += " n=" + std::to_string(n) + " gap " + fmt(gaps.back(), 4) + " (se " +
                      fmt(rep.se_width, 4) + ")";
        }
        const bool positive = gaps[0] > 0.0 && gaps[1] > 0.0 && gaps[2] > 0.0;
        const bool decreasing = gaps[0] > gaps[1] && gaps[1] > gaps[2];
        const bool tight = gaps[2] <= 0.05 * oracle_w;
        return Outcome{positive && decreasing && tight, detail};
    });

    run(8, "CV+ marginal coverage at least 0.80 (K=10, 100 reps)", 600.0, [] {
        chr::ExperimentConfig cfg;
        cfg.method = "chr-cvplus";
        cfg.model.type = "knn";
        cfg.model.knn_k = 40;
        cfg.data.flip_prob = 0.0;
        cfg.alpha = 0.1;
        cfg.bins = 100;
        cfg.folds = 10;
        cfg.n_train = 200;
        cfg.n_cal = 200;  // merged into the CV+ training pool
        cfg.n_test = 200;
        cfg.repetitions = 100;
        cfg.seed = 0xC0FE08ULL;
        cfg.compute_wsc = false;
        const auto rep = chr::run_experiment(cfg);
        return Outcome{rep.mean_coverage >= 0.80,
                       "mean coverage " + fmt(rep.mean_coverage) + " (se " +
                           fmt(rep.se_coverage) + "), width " + fmt(rep.mean_width, 2)};
    });

    run(9, "distribution estimation invariants on 10k fuzz grids", 120.0, [] {
        const auto r = chr::selfcheck::density_fuzz(10000, 0xACCE5509ULL);
        return Outcome{r.pass, r.detail};
    });

    run(10, "bundled CSV smoke run: coverage in [0.85, 0.95]", 300.0, [] {
        chr::ExperimentConfig cfg;
        cfg.method = "chr";
        cfg.model.type = "knn";
        cfg.csv_path = "data/sample_500.csv";
        cfg.target_column = "y";
        cfg.alpha = 0.1;
        cfg.bins = 100;
        cfg.n_train = 200;
        cfg.n_cal = 150;
        cfg.n_test = 150;
        cfg.repetitions = 5;
        cfg.seed = 0xC0FE10ULL;
        cfg.compute_wsc = false;
        const auto rep = chr::run_experiment(cfg);
        const bool ok = rep.mean_coverage >= 0.85 && rep.mean_coverage <= 0.95;
        return Outcome{ok, "mean coverage " + fmt(rep.mean_coverage) + " over 5 splits, width " +
                               fmt(rep.mean_width, 2)};
    });

    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures;
}
