#pragma once

#include <vector>

#include "chr/interval_core.hpp"
#include "chr/partition.hpp"

namespace chr {

/// Resolution and starting index for the nested interval family.
/// Level t corresponds to the mass threshold tau_t = t / resolution.
struct SequenceConfig {
    int resolution = 1;   // T
    int start_index = 0;  // t_bar in {0..T}
    bool randomize = true;

    /// start_index = round((1 - alpha) * T).
    static SequenceConfig for_alpha(int resolution, double alpha, bool randomize = true);

    double tau(int t) const { return static_cast<double>(t) / resolution; }
    void validate() const;
};

/// Fully materialized nested family S_0 <= S_1 <= ... <= S_T for one
/// histogram, plus the uniform draw that produced it.
struct NestedSequence {
    std::vector<BinInterval> sets;  // size T+1
    double eps = 0.0;
};

/// Builds the whole family. The start level is solved unconstrained and
/// trimmed; levels above it are solved containing the previous set, with the
/// trim applied only when it preserves that containment; levels below are
/// solved inside the previous pre-trim set and trimmed. With
/// cfg.randomize == false every trim is skipped.
NestedSequence build_sequence(const ConditionalHistogram& h, const SequenceConfig& cfg,
                              double eps);

/// min { t : target_bin in S_t }, or cfg.resolution when no level contains
/// the bin. Early-exits without materializing the rest of the family.
int smallest_containing_index(const ConditionalHistogram& h, const SequenceConfig& cfg,
                              double eps, int target_bin);

/// S_t for a single level t, without materializing the others.
BinInterval set_at_level(const ConditionalHistogram& h, const SequenceConfig& cfg, double eps,
                         int t);

/// Like set_at_level but also reports the pre-trim set at that level
/// (used to localize a degenerate point prediction when S_t is EMPTY).
std::pair<BinInterval, BinInterval> set_at_level_with_pre(const ConditionalHistogram& h,
                                                          const SequenceConfig& cfg, double eps,
                                                          int t);

/// Entry level per bin: entry[j-1] = min { t : bin j in S_t }, resolution if
/// never contained. One sweep over the family.
std::vector<int> bin_entry_levels(const ConditionalHistogram& h, const SequenceConfig& cfg,
                                  double eps);

}  // namespace chr
