#include "chr/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "chr/calibration.hpp"

namespace chr {

namespace {

double rank_stat(std::vector<double> v, int rank) {
    // rank is 1-based; callers clamp it to [1, n]
    std::nth_element(v.begin(), v.begin() + (rank - 1), v.end());
    return v[static_cast<std::size_t>(rank) - 1];
}

}  // namespace

BaselineResult cqr(const QuantileModel& model, const Dataset& cal, const Matrix& x_test,
                   double alpha) {
    const int n = static_cast<int>(cal.n());
    if (n == 0) throw EmptyCalibrationSetError("cqr: empty calibration set");
    const std::vector<double> levels{alpha / 2.0, 1.0 - alpha / 2.0};

    std::vector<double> scores(cal.n());
    for (std::size_t i = 0; i < cal.n(); ++i) {
        const auto q = model.quantiles(cal.x.row(i), levels);
        scores[i] = std::max(q[0] - cal.y[i], cal.y[i] - q[1]);
    }
    const int rank = std::min(conformal_rank(alpha, n), n);
    const double shift = rank_stat(std::move(scores), rank);

    BaselineResult out;
    out.method = "cqr";
    out.calibration_constants = {shift};
    out.intervals.resize(x_test.rows);
    for (std::size_t i = 0; i < x_test.rows; ++i) {
        const auto q = model.quantiles(x_test.row(i), levels);
        out.intervals[i] = {q[0] - shift, q[1] + shift};
    }
    return out;
}

BaselineResult dcp(const QuantileModel& model, const Dataset& cal, const Matrix& x_test,
                   double alpha) {
    const int n = static_cast<int>(cal.n());
    if (n == 0) throw EmptyCalibrationSetError("dcp: empty calibration set");

    std::vector<double> scores(cal.n());
    for (std::size_t i = 0; i < cal.n(); ++i) {
        const PiecewiseDensity d = conditional_density(model, cal.x.row(i));
        scores[i] = std::abs(d.cdf(cal.y[i]) - 0.5);
    }
    const int rank = std::min(conformal_rank(alpha, n), n);
    const double q = rank_stat(std::move(scores), rank);
    const double lo_level = std::max(0.0, 0.5 - q);
    const double hi_level = std::min(1.0, 0.5 + q);

    BaselineResult out;
    out.method = "dcp";
    out.calibration_constants = {q};
    out.intervals.resize(x_test.rows);
    for (std::size_t i = 0; i < x_test.rows; ++i) {
        const PiecewiseDensity d = conditional_density(model, x_test.row(i));
        out.intervals[i] = {d.inverse_cdf(lo_level), d.inverse_cdf(hi_level)};
    }
    return out;
}

BaselineResult distsplit(const QuantileModel& model, const Dataset& cal, const Matrix& x_test,
                         double alpha) {
    const int n = static_cast<int>(cal.n());
    if (n == 0) throw EmptyCalibrationSetError("distsplit: empty calibration set");

    std::vector<double> pit(cal.n());
    for (std::size_t i = 0; i < cal.n(); ++i) {
        const PiecewiseDensity d = conditional_density(model, cal.x.row(i));
        pit[i] = d.cdf(cal.y[i]);
    }
    std::sort(pit.begin(), pit.end());
    // Conservative rank adjustment: floor for the lower level, ceil for the
    // upper, clamping to the full PIT range outside [1, n].
    const int lo_rank = static_cast<int>(std::floor((alpha / 2.0) * (n + 1) + 1e-9));
    const int hi_rank = static_cast<int>(std::ceil((1.0 - alpha / 2.0) * (n + 1) - 1e-9));
    const double lo_level = lo_rank < 1 ? 0.0 : pit[static_cast<std::size_t>(lo_rank) - 1];
    const double hi_level = hi_rank > n ? 1.0 : pit[static_cast<std::size_t>(hi_rank) - 1];

    BaselineResult out;
    out.method = "distsplit";
    out.calibration_constants = {lo_level, hi_level};
    out.intervals.resize(x_test.rows);
    for (std::size_t i = 0; i < x_test.rows; ++i) {
        const PiecewiseDensity d = conditional_density(model, x_test.row(i));
        out.intervals[i] = {d.inverse_cdf(lo_level), d.inverse_cdf(hi_level)};
    }
    return out;
}

BaselineResult dcp_cqr(const QuantileModel& model, const Dataset& cal, const Matrix& x_test,
                       double alpha) {
    const int n = static_cast<int>(cal.n());
    if (n == 0) throw EmptyCalibrationSetError("dcp_cqr: empty calibration set");
    const auto& grid = QuantileModel::standard_levels();
    const std::size_t K = grid.size() - 1;

    // Cache per-sample grids once; every candidate pair reads from them.
    std::vector<std::vector<double>> cal_grids(cal.n());
    for (std::size_t i = 0; i < cal.n(); ++i)
        cal_grids[i] = model.quantiles(cal.x.row(i), grid);

    struct Candidate {
        std::size_t lo_idx, hi_idx;
        double mean_width;
        int covered;
    };
    std::vector<Candidate> cands;
    for (std::size_t j = 1; 2 * j < K; ++j) {  // symmetric-in-rank pairs (a_j, a_{K-j})
        Candidate c{j, K - j, 0.0, 0};
        for (std::size_t i = 0; i < cal.n(); ++i) {
            const double lo = cal_grids[i][c.lo_idx];
            const double hi = cal_grids[i][c.hi_idx];
            c.mean_width += hi - lo;
            if (lo <= cal.y[i] && cal.y[i] <= hi) ++c.covered;
        }
        c.mean_width /= static_cast<double>(cal.n());
        cands.push_back(c);
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.mean_width != b.mean_width) return a.mean_width < b.mean_width;
        return a.lo_idx > b.lo_idx;
    });

    const int need = std::min(conformal_rank(alpha, n), n);
    const Candidate* chosen = nullptr;
    for (const Candidate& c : cands) {
        if (c.covered >= need) {
            chosen = &c;
            break;
        }
    }

    BaselineResult out;
    out.method = "dcp-cqr";
    std::size_t lo_idx = 1, hi_idx = K - 1;  // widest grid pair for the fallback
    double shift = 0.0;
    if (chosen) {
        lo_idx = chosen->lo_idx;
        hi_idx = chosen->hi_idx;
    } else {
        // Grid insufficient: CQR constant shift on the widest pair.
        std::vector<double> scores(cal.n());
        for (std::size_t i = 0; i < cal.n(); ++i)
            scores[i] = std::max(cal_grids[i][lo_idx] - cal.y[i],
                                 cal.y[i] - cal_grids[i][hi_idx]);
        shift = rank_stat(std::move(scores), need);
    }
    out.calibration_constants = {grid[lo_idx], grid[hi_idx], shift};
    out.intervals.resize(x_test.rows);
    for (std::size_t i = 0; i < x_test.rows; ++i) {
        const auto q = model.quantiles(x_test.row(i), grid);
        out.intervals[i] = {q[lo_idx] - shift, q[hi_idx] + shift};
    }
    return out;
}

}  // namespace chr
