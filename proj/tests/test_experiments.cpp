#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "chr/experiments.hpp"
#include "chr/rng.hpp"

using namespace chr;

namespace {

// Independent reference for the oracle interval: dense grid over the
// support, two-pointer over the exact CDF.
double grid_oracle_width(const SyntheticConfig& law, double x, double tau, int grid = 10000) {
    const double b = law.scale(x);
    const double lo = -law.outlier_hi * b, hi = law.outlier_hi * b;
    std::vector<double> ys(static_cast<std::size_t>(grid) + 1), cdf(ys.size());
    for (int i = 0; i <= grid; ++i) {
        ys[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / grid;
        cdf[static_cast<std::size_t>(i)] = oracle_conditional_cdf(law, x, ys[static_cast<std::size_t>(i)]);
    }
    double best = hi - lo;
    std::size_t j = 0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        if (j < i) j = i;
        while (j + 1 < ys.size() && cdf[j] - cdf[i] < tau) ++j;
        if (cdf[j] - cdf[i] >= tau) best = std::min(best, ys[j] - ys[i]);
    }
    return best;
}

}  // namespace

TEST_CASE("generator: determinism and shape") {
    SyntheticConfig cfg;
    cfg.n_samples = 500;
    cfg.seed = 42;
    const Dataset a = generate_synthetic(cfg);
    const Dataset b = generate_synthetic(cfg);
    CHECK(a.y == b.y);
    CHECK(a.x.data == b.x.data);
    cfg.seed = 43;
    const Dataset c = generate_synthetic(cfg);
    CHECK(a.y != c.y);
}

TEST_CASE("conditional skewness: closed form and Monte Carlo") {
    SyntheticConfig cfg;
    const double closed = synthetic_conditional_skewness(cfg);
    CHECK(closed == doctest::Approx(2.9).epsilon(0.02));

    SUBCASE("flip 0.5 symmetrizes") {
        SyntheticConfig sym = cfg;
        sym.flip_prob = 0.5;
        CHECK(std::abs(synthetic_conditional_skewness(sym)) <= 1e-12);
    }
    SUBCASE("Monte Carlo agrees") {
        // standardized third moment of (Y - mu(x)) / sigma(x) over many draws
        SyntheticConfig gen = cfg;
        gen.n_samples = 200000;
        gen.seed = 7;
        const Dataset d = generate_synthetic(gen);
        const double ez = cfg.outlier_prob * 0.5 * (cfg.outlier_lo + cfg.outlier_hi);
        double m2 = 0.0;
        for (std::size_t i = 0; i < d.n(); ++i) {
            const double z = d.y[i] / cfg.scale(d.x.at(i, 0));
            m2 += (z - ez) * (z - ez);
        }
        m2 /= static_cast<double>(d.n());
        double m3 = 0.0;
        for (std::size_t i = 0; i < d.n(); ++i) {
            const double z = d.y[i] / cfg.scale(d.x.at(i, 0));
            m3 += std::pow(z - ez, 3.0);
        }
        m3 /= static_cast<double>(d.n());
        CHECK(m3 / std::pow(m2, 1.5) == doctest::Approx(closed).epsilon(0.1));
    }
    SUBCASE("flip_prob_for_skewness inverts the map") {
        for (double target : {2.5, 1.5, 0.5}) {
            SyntheticConfig c = cfg;
            c.flip_prob = flip_prob_for_skewness(cfg, target);
            CHECK(synthetic_conditional_skewness(c) == doctest::Approx(target).epsilon(1e-6));
        }
        CHECK(flip_prob_for_skewness(cfg, 10.0) == 0.0);
        CHECK(flip_prob_for_skewness(cfg, -1.0) == 0.5);
    }
}

TEST_CASE("oracle shortest width: closed form vs dense grid search") {
    for (double p : {0.0, 0.2, 0.5}) {
        SyntheticConfig law;
        law.flip_prob = p;
        for (double x : {0.0, 0.5, 1.0}) {
            for (double tau : {0.5, 0.9, 0.97}) {
                const double closed = oracle_shortest_width(law, x, tau);
                const double grid = grid_oracle_width(law, x, tau);
                const double resolution = 2.0 * law.outlier_hi * law.scale(x) / 10000.0;
                CHECK(std::abs(closed - grid) <= 3.0 * resolution);
            }
        }
    }
}

TEST_CASE("oracle mean width integrates the scale") {
    SyntheticConfig law;
    const double unit = oracle_shortest_width(law, 0.0, 0.9) / law.scale(0.0);
    CHECK(oracle_mean_width(law, 0.9) == doctest::Approx(unit * 1.5));
}

TEST_CASE("marginal coverage counting") {
    std::vector<std::pair<double, double>> iv{{0, 1}, {0, 1}, {0, 1}, {0, 1}};
    CHECK(marginal_coverage(iv, {0.5, 0.2, 0.9, 1.0}) == 1.0);
    CHECK(marginal_coverage(iv, {2.0, -1.0, 5.0, 1.5}) == 0.0);
    CHECK(marginal_coverage(iv, {0.5, 2.0, 0.1, -3.0}) == 0.5);
}

TEST_CASE("worst-slab coverage behaviors") {
    auto rng = make_rng(2718);
    const std::size_t n = 600;
    Matrix x(n, 1);
    for (std::size_t i = 0; i < n; ++i) x.at(i, 0) = uniform01(rng);

    SUBCASE("all-covered field reports 1") {
        std::vector<std::uint8_t> flags(n, 1);
        CHECK(worst_slab_coverage(x, flags, WscConfig{0.1, 100, 1}) == 1.0);
    }
    SUBCASE("planted empty slab is found") {
        std::vector<std::uint8_t> flags(n, 1);
        for (std::size_t i = 0; i < n; ++i)
            if (x.at(i, 0) <= 0.15) flags[i] = 0;
        CHECK(worst_slab_coverage(x, flags, WscConfig{0.1, 100, 2}) <= 0.2);
    }
    SUBCASE("independent flags stay near the marginal rate") {
        std::vector<std::uint8_t> flags(n);
        double marg = 0.0;
        for (auto& f : flags) {
            f = uniform01(rng) < 0.9;
            marg += f;
        }
        marg /= static_cast<double>(n);
        const double wsc = worst_slab_coverage(x, flags, WscConfig{0.1, 100, 3});
        CHECK(wsc >= marg - 0.12);
        CHECK(wsc <= marg + 0.12);
    }
    SUBCASE("too few points refused") {
        Matrix tiny(5, 1);
        std::vector<std::uint8_t> flags(5, 1);
        CHECK_THROWS_AS(worst_slab_coverage(tiny, flags, WscConfig{0.1, 10, 4}),
                        TooFewTestPointsError);
    }
}

TEST_CASE("run_experiment: single repetition and aggregation invariance") {
    ExperimentConfig cfg;
    cfg.method = "chr";
    cfg.model.type = "oracle";
    cfg.n_train = 200;
    cfg.n_cal = 200;
    cfg.n_test = 300;
    cfg.bins = 50;
    cfg.repetitions = 1;
    cfg.seed = 77;
    EvaluationReport rep = run_experiment(cfg);
    REQUIRE(rep.records.size() == 1);
    CHECK(rep.mean_coverage == rep.records[0].coverage);
    CHECK(rep.mean_width == rep.records[0].mean_width);
    CHECK(rep.records[0].coverage >= 0.0);
    CHECK(rep.records[0].coverage <= 1.0);
    CHECK(rep.records[0].mean_width >= 0.0);

    SUBCASE("permuting records leaves the aggregate unchanged") {
        ExperimentConfig multi = cfg;
        multi.repetitions = 6;
        EvaluationReport r6 = run_experiment(multi);
        EvaluationReport shuffled = r6;
        auto rng = make_rng(5);
        std::shuffle(shuffled.records.begin(), shuffled.records.end(), rng);
        shuffled.aggregate();
        CHECK(shuffled.mean_coverage == r6.mean_coverage);
        CHECK(shuffled.se_width == r6.se_width);
        CHECK(shuffled.mean_wsc == r6.mean_wsc);
    }
}

TEST_CASE("per-repetition WSC stays below marginal coverage plus slack") {
    ExperimentConfig cfg;
    cfg.method = "chr";
    cfg.model.type = "oracle";
    cfg.n_train = 300;
    cfg.n_cal = 300;
    cfg.n_test = 600;
    cfg.bins = 60;
    cfg.repetitions = 5;
    cfg.seed = 2025;
    const EvaluationReport rep = run_experiment(cfg);
    for (const auto& rec : rep.records) CHECK(rec.wsc <= rec.coverage + 0.1);
}

TEST_CASE("run_experiment: every method produces sane output on a small run") {
    for (const std::string method : {"chr", "chr-cvplus", "cqr", "dcp", "distsplit", "dcp-cqr"}) {
        ExperimentConfig cfg;
        cfg.method = method;
        cfg.model.type = "oracle";
        cfg.n_train = 150;
        cfg.n_cal = 150;
        cfg.n_test = 200;
        cfg.bins = 40;
        cfg.folds = 5;
        cfg.repetitions = 2;
        cfg.seed = 99;
        cfg.compute_wsc = false;
        const EvaluationReport rep = run_experiment(cfg);
        INFO(method);
        CHECK(rep.records.size() == 2);
        CHECK(rep.mean_coverage > 0.75);
        CHECK(rep.mean_width > 0.0);
    }
}
