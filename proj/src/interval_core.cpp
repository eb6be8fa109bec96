#include "chr/interval_core.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace chr {

BinInterval shortest_mass_interval(const ConditionalHistogram& h, double tau,
                                   const BinInterval& s_minus, const BinInterval& s_plus) {
    const int m = h.m();
    if (s_plus.is_empty() || s_plus.lo < 1 || s_plus.hi > m)
        throw InfeasibleError("shortest_mass_interval: s_plus must be a non-empty bin range");
    if (!s_plus.contains(s_minus))
        throw InfeasibleError("shortest_mass_interval: s_minus not contained in s_plus");
    if (h.mass(s_plus) < tau - kMassSlack)
        throw InfeasibleError("shortest_mass_interval: s_plus carries less mass than tau");

    const double need = tau - kMassSlack;
    const int L = s_plus.lo;
    const int U = s_plus.hi;
    const int l_max = s_minus.is_empty() ? U : s_minus.lo;  // l in [L, min(l_max, u)]
    const int u_min = s_minus.is_empty() ? L : s_minus.hi;  // u in [max(u_min, L), U]

    // Pass 1: minimal length. For each admissible u the largest admissible l
    // with mass(l..u) >= tau is non-decreasing in u, so one moving pointer
    // suffices.
    int best_w = -1;
    {
        int l = L;
        for (int u = std::max(u_min, L); u <= U; ++u) {
            const int cap = std::min(l_max, u);
            while (l < cap && h.mass_range(l + 1, u) >= need) ++l;
            if (h.mass_range(l, u) >= need) {
                const int w = u - l;
                if (best_w < 0 || w < best_w) best_w = w;
            }
        }
    }
    if (best_w < 0)
        throw InfeasibleError("shortest_mass_interval: no feasible interval");

    // Pass 2: among runs of length best_w, minimal mass, then leftmost.
    BinInterval best = BinInterval::empty();
    double best_mass = std::numeric_limits<double>::infinity();
    for (int u = std::max({u_min, L + best_w}); u <= U; ++u) {
        const int l = u - best_w;
        if (l < L || l > std::min(l_max, u)) continue;
        const double mass = h.mass_range(l, u);
        if (mass < need) continue;
        if (mass < best_mass) {
            best_mass = mass;
            best = BinInterval{l, u};
        }
    }
    assert(!best.is_empty());
    assert(s_plus.contains(best) && best.contains(s_minus));
    assert(h.mass(best) >= need);
    return best;
}

double mass_excess(const BinInterval& interval, const ConditionalHistogram& h, double tau) {
    if (interval.is_empty()) throw EmptyIntervalError("mass_excess: empty interval");
    const double p_min = std::min(h.mass_at(interval.lo), h.mass_at(interval.hi));
    if (p_min <= 0.0) return std::numeric_limits<double>::infinity();
    return (h.mass(interval) - tau) / p_min;
}

BinInterval randomized_trim(const BinInterval& interval, const ConditionalHistogram& h,
                            double tau, double eps) {
    const double v = mass_excess(interval, h, tau);
    if (eps > v) return interval;
    if (interval.lo == interval.hi) return BinInterval::empty();
    if (h.mass_at(interval.lo) <= h.mass_at(interval.hi))
        return BinInterval{interval.lo + 1, interval.hi};
    return BinInterval{interval.lo, interval.hi - 1};
}

}  // namespace chr
