#pragma once

#include <vector>

#include "chr/nested_sequence.hpp"
#include "chr/partition.hpp"

namespace chr {

struct EmptyCalibrationSetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Conformity scores of a calibration set: one integer in {0..T} per sample.
struct ConformityScoreSet {
    std::vector<int> scores;
    int resolution = 0;  // shared T
};

struct CalibrationResult {
    int t_hat = 0;
    double alpha = 0.1;
    int n_cal = 0;
};

/// ceil((1 - alpha) * (n + 1)) with a guard against float round-up at exact
/// integer boundaries.
int conformal_rank(double alpha, int n);

/// Smallest level whose set contains y's bin; responses outside the
/// partition score the maximal value T.
int conformity_score(const ConditionalHistogram& h, const Partition& p, double y,
                     const SequenceConfig& cfg, double eps);

/// t_hat = the conformal_rank-th smallest score, or T when the rank exceeds
/// the sample size.
CalibrationResult split_calibrate(const ConformityScoreSet& scores, double alpha);

/// Response-unit interval at the calibrated level. An EMPTY set (possible
/// only at t_hat = 0 after a trim) degenerates to the midpoint of the
/// minimal-mass bin the trim removed.
std::pair<double, double> predict_interval(const ConditionalHistogram& h, const Partition& p,
                                           const CalibrationResult& cal,
                                           const SequenceConfig& cfg, double eps);

}  // namespace chr
