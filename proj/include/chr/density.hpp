#pragma once

#include <vector>

#include "chr/partition.hpp"

namespace chr {

/// Conditional quantile grid: levels a_0 = 0 < ... < a_K = 1 with
/// non-decreasing values (ties encode point masses). values.front() and
/// values.back() are conservative support bounds.
struct QuantileGrid {
    std::vector<double> levels;
    std::vector<double> values;

    void validate() const;
};

/// Piecewise-constant density on strictly increasing knots c_0 < ... < c_M
/// with per-segment masses summing to one. CDF evaluation is exact
/// (piecewise linear); inverse_cdf is the left-continuous generalized
/// inverse.
class PiecewiseDensity {
  public:
    PiecewiseDensity(std::vector<double> knots, std::vector<double> masses);

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& masses() const { return masses_; }
    double support_lo() const { return knots_.front(); }
    double support_hi() const { return knots_.back(); }

    double cdf(double y) const;
    double inverse_cdf(double u) const;

  private:
    std::vector<double> knots_;
    std::vector<double> masses_;
    std::vector<double> cum_;  // cum_[i] = CDF at knots_[i]; cum_[0] = 0, cum_.back() = 1
};

/// Converts a quantile grid into a piecewise-constant density. The segment
/// ending at each unique quantile value absorbs the total level increment of
/// the grid entries equal to that value, so the result integrates to one
/// exactly and duplicated values become concentrated mass. A fully
/// degenerate grid (all values equal) yields a single near-point segment.
PiecewiseDensity quantiles_to_density(const QuantileGrid& g);

/// Flattens the tails: all mass below lower_q is spread uniformly over
/// [support_lo, lower_q], all mass above upper_q over [upper_q, support_hi].
/// Interior structure is unchanged; zero-width tails are a no-op.
PiecewiseDensity tail_smooth(const PiecewiseDensity& d, double lower_q, double upper_q);

/// Exact integration of the density over each partition bin. Mass outside
/// the partition (if any) folds into the outermost bins, so the result sums
/// to one.
ConditionalHistogram density_to_histogram(const PiecewiseDensity& d, const Partition& p);

}  // namespace chr
