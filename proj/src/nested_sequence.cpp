#include "chr/nested_sequence.hpp"

#include <cmath>
#include <stdexcept>

namespace chr {

SequenceConfig SequenceConfig::for_alpha(int resolution, double alpha, bool randomize) {
    SequenceConfig cfg;
    cfg.resolution = resolution;
    cfg.start_index = static_cast<int>(std::lround((1.0 - alpha) * resolution));
    if (cfg.start_index < 0) cfg.start_index = 0;
    if (cfg.start_index > resolution) cfg.start_index = resolution;
    cfg.randomize = randomize;
    return cfg;
}

void SequenceConfig::validate() const {
    if (resolution < 1) throw std::invalid_argument("SequenceConfig: resolution must be >= 1");
    if (start_index < 0 || start_index > resolution)
        throw std::invalid_argument("SequenceConfig: start_index outside {0..T}");
}

namespace {

BinInterval full_range(const ConditionalHistogram& h) { return BinInterval{1, h.m()}; }

BinInterval maybe_trim(const ConditionalHistogram& h, const SequenceConfig& cfg,
                       const BinInterval& pre, double tau, double eps) {
    if (!cfg.randomize) return pre;
    return randomized_trim(pre, h, tau, eps);
}

// One step up from S_{t-1}: pre-trim solve containing it; the trim is kept
// only when the previous set survives inside the trimmed one.
BinInterval step_up(const ConditionalHistogram& h, const SequenceConfig& cfg,
                    const BinInterval& prev, double tau, double eps) {
    const BinInterval pre = shortest_mass_interval(h, tau, prev, full_range(h));
    if (!cfg.randomize) return pre;
    const BinInterval trimmed = randomized_trim(pre, h, tau, eps);
    return trimmed.contains(prev) ? trimmed : pre;
}

BinInterval intersect(const BinInterval& a, const BinInterval& b) {
    if (a.is_empty() || b.is_empty()) return BinInterval::empty();
    const BinInterval c{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
    return c.lo <= c.hi ? c : BinInterval::empty();
}

// One step down: solve inside the previous level's pre-trim set, then trim.
// The minimal-mass tie rule can select an interval that still contains the
// boundary bin the level above trimmed away, which would break the nesting
// chain; clipping to the previous post-trim set restores it and changes
// nothing otherwise. Returns {pre, post}.
std::pair<BinInterval, BinInterval> step_down(const ConditionalHistogram& h,
                                              const SequenceConfig& cfg,
                                              const BinInterval& prev_pre,
                                              const BinInterval& prev_post, double tau,
                                              double eps) {
    const BinInterval pre = shortest_mass_interval(h, tau, BinInterval::empty(), prev_pre);
    BinInterval post = maybe_trim(h, cfg, pre, tau, eps);
    if (!prev_post.contains(post)) post = intersect(post, prev_post);
    return {pre, post};
}

}  // namespace

NestedSequence build_sequence(const ConditionalHistogram& h, const SequenceConfig& cfg,
                              double eps) {
    cfg.validate();
    const int T = cfg.resolution;
    const int tb = cfg.start_index;
    NestedSequence seq;
    seq.eps = eps;
    seq.sets.assign(static_cast<std::size_t>(T) + 1, BinInterval::empty());

    const BinInterval start_pre =
        shortest_mass_interval(h, cfg.tau(tb), BinInterval::empty(), full_range(h));
    seq.sets[static_cast<std::size_t>(tb)] = maybe_trim(h, cfg, start_pre, cfg.tau(tb), eps);

    for (int t = tb + 1; t <= T; ++t) {
        seq.sets[static_cast<std::size_t>(t)] =
            step_up(h, cfg, seq.sets[static_cast<std::size_t>(t) - 1], cfg.tau(t), eps);
    }
    BinInterval prev_pre = start_pre;
    BinInterval prev_post = seq.sets[static_cast<std::size_t>(tb)];
    for (int t = tb - 1; t >= 0; --t) {
        auto [pre, post] = step_down(h, cfg, prev_pre, prev_post, cfg.tau(t), eps);
        seq.sets[static_cast<std::size_t>(t)] = post;
        prev_pre = pre;
        prev_post = post;
    }
    return seq;
}

int smallest_containing_index(const ConditionalHistogram& h, const SequenceConfig& cfg,
                              double eps, int target_bin) {
    cfg.validate();
    const int T = cfg.resolution;
    const int tb = cfg.start_index;

    const BinInterval start_pre =
        shortest_mass_interval(h, cfg.tau(tb), BinInterval::empty(), full_range(h));
    const BinInterval start = maybe_trim(h, cfg, start_pre, cfg.tau(tb), eps);

    if (start.contains_bin(target_bin)) {
        // Walk down while the bin stays covered; membership is monotone in t.
        int answer = tb;
        BinInterval prev_pre = start_pre;
        BinInterval prev_post = start;
        for (int t = tb - 1; t >= 0; --t) {
            auto [pre, post] = step_down(h, cfg, prev_pre, prev_post, cfg.tau(t), eps);
            if (!post.contains_bin(target_bin)) return answer;
            answer = t;
            prev_pre = pre;
            prev_post = post;
        }
        return answer;
    }
    BinInterval prev = start;
    for (int t = tb + 1; t <= T; ++t) {
        prev = step_up(h, cfg, prev, cfg.tau(t), eps);
        if (prev.contains_bin(target_bin)) return t;
    }
    return T;  // never contained (zero-mass bin): maximal score
}

std::pair<BinInterval, BinInterval> set_at_level_with_pre(const ConditionalHistogram& h,
                                                          const SequenceConfig& cfg, double eps,
                                                          int t) {
    cfg.validate();
    if (t < 0 || t > cfg.resolution)
        throw std::invalid_argument("set_at_level: level outside {0..T}");
    const int tb = cfg.start_index;

    BinInterval pre =
        shortest_mass_interval(h, cfg.tau(tb), BinInterval::empty(), full_range(h));
    BinInterval post = maybe_trim(h, cfg, pre, cfg.tau(tb), eps);
    if (t == tb) return {pre, post};

    if (t > tb) {
        BinInterval prev = post;
        for (int s = tb + 1; s <= t; ++s) {
            pre = shortest_mass_interval(h, cfg.tau(s), prev, full_range(h));
            if (cfg.randomize) {
                const BinInterval trimmed = randomized_trim(pre, h, cfg.tau(s), eps);
                prev = trimmed.contains(prev) ? trimmed : pre;
            } else {
                prev = pre;
            }
        }
        return {pre, prev};
    }
    BinInterval prev_pre = pre;
    BinInterval prev_post = post;
    for (int s = tb - 1; s >= t; --s) {
        auto [p, q] = step_down(h, cfg, prev_pre, prev_post, cfg.tau(s), eps);
        prev_pre = p;
        prev_post = q;
    }
    return {prev_pre, prev_post};
}

BinInterval set_at_level(const ConditionalHistogram& h, const SequenceConfig& cfg, double eps,
                         int t) {
    return set_at_level_with_pre(h, cfg, eps, t).second;
}

std::vector<int> bin_entry_levels(const ConditionalHistogram& h, const SequenceConfig& cfg,
                                  double eps) {
    const NestedSequence seq = build_sequence(h, cfg, eps);
    const int T = cfg.resolution;
    std::vector<int> entry(static_cast<std::size_t>(h.m()), T);
    BinInterval prev = BinInterval::empty();
    for (int t = 0; t <= T; ++t) {
        const BinInterval& s = seq.sets[static_cast<std::size_t>(t)];
        if (s.is_empty()) continue;
        // Newly covered bins relative to the previous (nested) level.
        const int lo_new = s.lo;
        const int hi_new = s.hi;
        if (prev.is_empty()) {
            for (int j = lo_new; j <= hi_new; ++j) entry[static_cast<std::size_t>(j) - 1] = t;
        } else {
            for (int j = lo_new; j < prev.lo; ++j) entry[static_cast<std::size_t>(j) - 1] = t;
            for (int j = prev.hi + 1; j <= hi_new; ++j) entry[static_cast<std::size_t>(j) - 1] = t;
        }
        prev = s;
    }
    return entry;
}

}  // namespace chr
