#pragma once

#include "chr/partition.hpp"

namespace chr {

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Absolute slack used in every mass-vs-threshold comparison of the interval
/// kernels. Exact-boundary cases (tidy hand-built histograms, tau on a grid,
/// renormalized sums) would otherwise flip on float rounding; 1e-12 is far
/// below any mass scale that matters statistically.
inline constexpr double kMassSlack = 1e-12;

/// Shortest contiguous run of bins with mass >= tau, subject to nesting
/// constraints: the result must contain s_minus (if non-EMPTY) and be
/// contained in s_plus.
///
/// Among feasible runs of minimal length the one with minimal mass is
/// returned; remaining ties go to the leftmost. Cost is linear in the size
/// of s_plus (unconstrained) or of s_plus minus s_minus (constrained).
///
/// Throws InfeasibleError when s_minus is not inside s_plus or when
/// mass(s_plus) < tau - kMassSlack.
BinInterval shortest_mass_interval(const ConditionalHistogram& h, double tau,
                                   const BinInterval& s_minus, const BinInterval& s_plus);

/// (mass(interval) - tau) / min(pi_lo, pi_hi). A zero-mass boundary bin
/// yields +infinity so that randomized_trim always removes it.
double mass_excess(const BinInterval& interval, const ConditionalHistogram& h, double tau);

/// Keeps the interval when eps > mass_excess; otherwise drops the boundary
/// bin with the smaller mass (left on ties). A single bin trims to EMPTY.
BinInterval randomized_trim(const BinInterval& interval, const ConditionalHistogram& h,
                            double tau, double eps);

}  // namespace chr
