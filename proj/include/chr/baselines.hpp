#pragma once

#include <string>
#include <vector>

#include "chr/dataset.hpp"
#include "chr/models.hpp"

namespace chr {

/// Output of a comparator method: one interval per test row plus whatever
/// calibration constants the method computed.
struct BaselineResult {
    std::string method;
    std::vector<std::pair<double, double>> intervals;
    std::vector<double> calibration_constants;
};

/// Conformalized quantile regression on the (alpha/2, 1-alpha/2) pair:
/// scores max(q_lo - y, y - q_hi), constant shift at the conformal rank.
BaselineResult cqr(const QuantileModel& model, const Dataset& cal, const Matrix& x_test,
                   double alpha);

/// Distributional conformal prediction: PIT scores |F(y|x) - 1/2|, rank
/// threshold Q, interval between the (1/2 -+ Q) conditional quantiles.
BaselineResult dcp(const QuantileModel& model, const Dataset& cal, const Matrix& x_test,
                   double alpha);

/// DistSplit: conformally adjusted empirical alpha/2 and 1-alpha/2 quantiles
/// of the PIT values, mapped through each test point's inverse CDF.
BaselineResult distsplit(const QuantileModel& model, const Dataset& cal, const Matrix& x_test,
                         double alpha);

/// Hybrid: picks, among symmetric-in-rank grid-level pairs ordered by
/// increasing average calibration width, the tightest pair covering the
/// conformal count of calibration points; when no grid pair suffices it
/// falls back to the widest pair plus a CQR constant shift.
BaselineResult dcp_cqr(const QuantileModel& model, const Dataset& cal, const Matrix& x_test,
                       double alpha);

}  // namespace chr
