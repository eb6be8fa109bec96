#pragma once

#include <cstdint>
#include <string>

#include "chr/partition.hpp"

namespace chr::selfcheck {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Exhaustive-enumeration reference for the shortest-mass kernel: direct
/// per-interval summation, same tie rules (minimal length, then minimal
/// mass, then leftmost) and the same documented mass slack. Independent of
/// the two-pointer implementation.
BinInterval brute_force_shortest(const ConditionalHistogram& h, double tau,
                                 const BinInterval& s_minus, const BinInterval& s_plus);

/// Random histograms (m <= 12) times a tau grid, constrained and
/// unconstrained, compared against brute_force_shortest exactly.
CheckResult kernel_vs_bruteforce(int n_histograms, std::uint64_t seed);

/// Random (histogram, T, t_bar, eps, randomize) cases; checks the nesting
/// chain, monotone mass, full top level, determinism, and the
/// deterministic-variant mass lower bound.
CheckResult nesting_fuzz(int n_cases, std::uint64_t seed);

/// Random quantile grids and partitions; checks unit sums, CDF monotonicity,
/// the generalized-inverse inequalities, and the refinement round trip.
CheckResult density_fuzz(int n_cases, std::uint64_t seed);

/// Monte Carlo check that the trimmed interval's expected mass equals tau
/// (within 3 standard errors) for optimal intervals with excess <= 1.
CheckResult trim_mean_mass(int n_draws, std::uint64_t seed);

}  // namespace chr::selfcheck
