#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "chr/baselines.hpp"
#include "chr/calibration.hpp"
#include "chr/experiments.hpp"
#include "chr/rng.hpp"

using namespace chr;

namespace {

Dataset head_rows(const Dataset& d, std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return take_rows(d, idx);
}

double marginal_coverage_helper(const std::vector<std::pair<double, double>>& iv,
                                const std::vector<double>& y) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (iv[i].first <= y[i] && y[i] <= iv[i].second) ++hit;
    return static_cast<double>(hit) / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("cqr: n_cal = 9 uses the maximum score") {
    SyntheticConfig law;
    law.n_samples = 209;
    law.seed = 5;
    const Dataset all = generate_synthetic(law);
    const Dataset train = head_rows(all, 200);
    std::vector<std::size_t> idx;
    for (std::size_t i = 200; i < 209; ++i) idx.push_back(i);
    const Dataset cal = take_rows(all, idx);

    KnnQuantileModel model(50);
    model.fit(train);
    const auto res = cqr(model, cal, cal.x, 0.1);

    double max_score = -1e300;
    const std::vector<double> levels{0.05, 0.95};
    for (std::size_t i = 0; i < cal.n(); ++i) {
        const auto q = model.quantiles(cal.x.row(i), levels);
        max_score = std::max(max_score, std::max(q[0] - cal.y[i], cal.y[i] - q[1]));
    }
    REQUIRE(res.calibration_constants.size() == 1);
    CHECK(res.calibration_constants[0] == doctest::Approx(max_score));
}

TEST_CASE("cqr with the oracle model: shift vanishes, width matches the quantile gap") {
    SyntheticConfig law;
    law.n_samples = 4000;
    law.seed = 8;
    const Dataset all = generate_synthetic(law);
    const Dataset train = head_rows(all, 1000);
    std::vector<std::size_t> idx;
    for (std::size_t i = 1000; i < 3000; ++i) idx.push_back(i);
    const Dataset cal = take_rows(all, idx);
    std::vector<std::size_t> tidx;
    for (std::size_t i = 3000; i < 4000; ++i) tidx.push_back(i);
    const Dataset test = take_rows(all, tidx);

    OracleQuantileModel model(law);
    model.fit(train);
    const auto res = cqr(model, cal, test.x, 0.1);
    CHECK(std::abs(res.calibration_constants[0]) < 0.15);
    // coverage on an exchangeable test set
    CHECK(marginal_coverage_helper(res.intervals, test.y) >= 0.87);
}

TEST_CASE("dcp: threshold Q >= 1/2 clamps to the full estimated support") {
    SyntheticConfig law;
    law.n_samples = 150;
    law.seed = 10;
    const Dataset all = generate_synthetic(law);
    const Dataset train = head_rows(all, 100);
    std::vector<std::size_t> idx;
    for (std::size_t i = 100; i < 150; ++i) idx.push_back(i);
    Dataset cal = take_rows(all, idx);
    for (double& y : cal.y) y += 1000.0;  // PIT hits 1, so Q = 1/2 exactly

    KnnQuantileModel model(20);
    model.fit(train);
    const auto res = dcp(model, cal, cal.x, 0.1);
    REQUIRE(res.calibration_constants[0] == doctest::Approx(0.5));
    for (const auto& [lo, hi] : res.intervals) {
        CHECK(lo <= model.support().lo + 1e-6);
        CHECK(hi >= model.support().hi - 1e-6);
    }
}

TEST_CASE("dcp and distsplit: constant response degenerates but still covers") {
    Dataset d;
    d.x = Matrix(60, 1);
    d.y.assign(60, 2.5);
    for (std::size_t i = 0; i < 60; ++i) d.x.at(i, 0) = static_cast<double>(i) / 59.0;
    const Dataset train = head_rows(d, 40);
    std::vector<std::size_t> idx;
    for (std::size_t i = 40; i < 60; ++i) idx.push_back(i);
    const Dataset cal = take_rows(d, idx);

    KnnQuantileModel model(10);
    model.fit(train);
    for (const auto& res : {dcp(model, cal, cal.x, 0.1), distsplit(model, cal, cal.x, 0.1)}) {
        for (const auto& [lo, hi] : res.intervals) {
            CHECK(lo <= 2.5);
            CHECK(hi >= 2.5);
            CHECK(hi - lo < 1.0);  // tight around the point mass
        }
    }
}

TEST_CASE("distsplit with the oracle model covers near 1 - alpha") {
    SyntheticConfig law;
    law.flip_prob = 0.3;
    law.n_samples = 3000;
    law.seed = 12;
    const Dataset all = generate_synthetic(law);
    const Dataset train = head_rows(all, 1000);
    std::vector<std::size_t> idx;
    for (std::size_t i = 1000; i < 2000; ++i) idx.push_back(i);
    const Dataset cal = take_rows(all, idx);
    std::vector<std::size_t> tidx;
    for (std::size_t i = 2000; i < 3000; ++i) tidx.push_back(i);
    const Dataset test = take_rows(all, tidx);

    OracleQuantileModel model(law);
    model.fit(train);
    const auto res = distsplit(model, cal, test.x, 0.1);
    CHECK(marginal_coverage_helper(res.intervals, test.y) >= 0.87);
}

TEST_CASE("dcp-cqr: grid pair exists for alpha = 0.1 and no shift is applied") {
    SyntheticConfig law;
    law.n_samples = 2000;
    law.seed = 14;
    const Dataset all = generate_synthetic(law);
    const Dataset train = head_rows(all, 1000);
    std::vector<std::size_t> idx;
    for (std::size_t i = 1000; i < 2000; ++i) idx.push_back(i);
    const Dataset cal = take_rows(all, idx);

    OracleQuantileModel model(law);
    model.fit(train);
    const auto res = dcp_cqr(model, cal, cal.x, 0.1);
    REQUIRE(res.calibration_constants.size() == 3);
    CHECK(res.calibration_constants[2] == 0.0);  // no fallback shift
    CHECK(res.calibration_constants[0] < res.calibration_constants[1]);
    // calibration-set coverage reaches the conformal count
    std::size_t covered = 0;
    for (std::size_t i = 0; i < cal.n(); ++i)
        if (res.intervals.size() == cal.n() && res.intervals[i].first <= cal.y[i] &&
            cal.y[i] <= res.intervals[i].second)
            ++covered;
    // res.intervals correspond to cal.x here by construction
    CHECK(static_cast<int>(covered) >=
          std::min(conformal_rank(0.1, static_cast<int>(cal.n())), static_cast<int>(cal.n())));
}

TEST_CASE("all four baselines reach marginal coverage on exchangeable data") {
    for (const std::string method : {"cqr", "dcp", "distsplit", "dcp-cqr"}) {
        ExperimentConfig cfg;
        cfg.method = method;
        cfg.model.type = "oracle";
        cfg.data.flip_prob = 0.2;
        cfg.alpha = 0.1;
        cfg.n_train = 400;
        cfg.n_cal = 400;
        cfg.n_test = 500;
        cfg.bins = 60;
        cfg.repetitions = 10;
        cfg.seed = 31415;
        cfg.compute_wsc = false;
        const EvaluationReport rep = run_experiment(cfg);
        INFO(method, " coverage ", rep.mean_coverage);
        CHECK(rep.mean_coverage >= 0.875);  // 1 - alpha minus Monte Carlo slack
    }
}

TEST_CASE("dcp-cqr: impossible grid falls back to a CQR shift") {
    // Model believes in a law far below the actual responses.
    SyntheticConfig law;
    law.n_samples = 400;
    law.seed = 16;
    Dataset cal = generate_synthetic(law);
    for (double& y : cal.y) y += 100.0;  // nothing in the grid can cover this

    OracleQuantileModel model(law);
    Dataset train = generate_synthetic([&] {
        SyntheticConfig g = law;
        g.seed = 17;
        return g;
    }());
    model.fit(train);
    const auto res = dcp_cqr(model, cal, cal.x, 0.1);
    CHECK(res.calibration_constants[2] > 50.0);  // large positive correction
    std::size_t covered = 0;
    for (std::size_t i = 0; i < cal.n(); ++i)
        if (res.intervals[i].first <= cal.y[i] && cal.y[i] <= res.intervals[i].second) ++covered;
    CHECK(static_cast<int>(covered) >=
          std::min(conformal_rank(0.1, static_cast<int>(cal.n())), static_cast<int>(cal.n())));
}
