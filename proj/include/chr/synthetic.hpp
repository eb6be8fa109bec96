#pragma once

#include <cstdint>

#include "chr/dataset.hpp"

namespace chr {

/// Synthetic law with controllable skewness.
///
/// X ~ Uniform(0, 1). Given X = x, let scale(x) = scale_base + scale_slope*x
/// and draw Z from a two-part mixture: with probability 1 - outlier_prob a
/// uniform core on [-1, 1], otherwise a uniform band on
/// [outlier_lo, outlier_hi] far to the right. Y = scale(x) * Z, then Y is
/// negated with probability flip_prob (per sample). flip_prob = 0 keeps the
/// full right skew (conditional skewness about 2.9); flip_prob = 0.5 makes
/// Y | X symmetric. All conditional quantities below are exact.
struct SyntheticConfig {
    std::size_t n_samples = 1000;
    double flip_prob = 0.0;
    std::uint64_t seed = 1;

    double outlier_prob = 0.06;
    double outlier_lo = 5.8;
    double outlier_hi = 6.2;
    double scale_base = 1.0;
    double scale_slope = 1.0;

    double scale(double x) const { return scale_base + scale_slope * x; }
};

Dataset generate_synthetic(const SyntheticConfig& cfg);

/// Exact conditional quantile of Y | X = x at the given level.
double oracle_conditional_quantile(const SyntheticConfig& cfg, double x, double level);

/// Exact conditional CDF of Y | X = x.
double oracle_conditional_cdf(const SyntheticConfig& cfg, double x, double y);

/// Width of the shortest interval with conditional mass >= tau, exact.
double oracle_shortest_width(const SyntheticConfig& cfg, double x, double tau);

/// E over X ~ U(0,1) of oracle_shortest_width; the law is scale-linear so
/// this is the unit width times the mean scale.
double oracle_mean_width(const SyntheticConfig& cfg, double tau);

/// E[(Y - mu(X))^3 / sigma(X)^3], exact (constant in x).
double synthetic_conditional_skewness(const SyntheticConfig& cfg);

/// Flip probability in [0, 0.5] whose conditional skewness matches the
/// target (clamped to the attainable range).
double flip_prob_for_skewness(const SyntheticConfig& cfg, double target);

}  // namespace chr
