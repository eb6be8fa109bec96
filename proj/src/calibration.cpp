#include "chr/calibration.hpp"

#include <algorithm>
#include <cmath>

namespace chr {

int conformal_rank(double alpha, int n) {
    const double raw = (1.0 - alpha) * (n + 1);
    int rank = static_cast<int>(std::ceil(raw - 1e-9));
    return std::max(rank, 1);
}

int conformity_score(const ConditionalHistogram& h, const Partition& p, double y,
                     const SequenceConfig& cfg, double eps) {
    const int j = p.bin_index(y);
    if (j < 1 || j > p.m()) return cfg.resolution;  // out of range: maximal score
    return smallest_containing_index(h, cfg, eps, j);
}

CalibrationResult split_calibrate(const ConformityScoreSet& scores, double alpha) {
    if (scores.scores.empty())
        throw EmptyCalibrationSetError("split_calibrate: no calibration scores");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("split_calibrate: alpha outside (0, 1)");
    const int n = static_cast<int>(scores.scores.size());
    const int rank = conformal_rank(alpha, n);
    CalibrationResult out;
    out.alpha = alpha;
    out.n_cal = n;
    if (rank > n) {
        out.t_hat = scores.resolution;
        return out;
    }
    std::vector<int> tmp = scores.scores;
    std::nth_element(tmp.begin(), tmp.begin() + (rank - 1), tmp.end());
    out.t_hat = tmp[static_cast<std::size_t>(rank) - 1];
    return out;
}

std::pair<double, double> predict_interval(const ConditionalHistogram& h, const Partition& p,
                                           const CalibrationResult& cal,
                                           const SequenceConfig& cfg, double eps) {
    const auto [pre, post] = set_at_level_with_pre(h, cfg, eps, cal.t_hat);
    if (post.is_empty()) {
        const double mid = p.bin_midpoint(pre.lo);
        return {mid, mid};
    }
    return interval_to_response_range(post, p);
}

}  // namespace chr
