#include "chr/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "chr/density.hpp"
#include "chr/interval_core.hpp"
#include "chr/nested_sequence.hpp"
#include "chr/rng.hpp"

namespace chr::selfcheck {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const auto start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

ConditionalHistogram random_histogram(std::mt19937_64& rng, int m, double zero_prob) {
    std::vector<double> v(static_cast<std::size_t>(m));
    double sum = 0.0;
    for (double& x : v) {
        x = uniform01(rng) < zero_prob ? 0.0 : uniform01(rng);
        sum += x;
    }
    if (sum <= 0.0) {
        v[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(m))] = 1.0;
        sum = 1.0;
    }
    for (double& x : v) x /= sum;
    return ConditionalHistogram(std::move(v));
}

double direct_sum(const ConditionalHistogram& h, int l, int u) {
    double s = 0.0;
    for (int j = l; j <= u; ++j) s += h.mass_at(j);
    return s;
}

std::string describe(const BinInterval& s) {
    if (s.is_empty()) return "EMPTY";
    return "[" + std::to_string(s.lo) + "," + std::to_string(s.hi) + "]";
}

}  // namespace

BinInterval brute_force_shortest(const ConditionalHistogram& h, double tau,
                                 const BinInterval& s_minus, const BinInterval& s_plus) {
    const int L = s_plus.lo;
    const int U = s_plus.hi;
    const int l_max = s_minus.is_empty() ? U : s_minus.lo;
    const int u_min = s_minus.is_empty() ? L : s_minus.hi;
    BinInterval best = BinInterval::empty();
    double best_mass = std::numeric_limits<double>::infinity();
    int best_w = std::numeric_limits<int>::max();
    for (int l = L; l <= std::min(l_max, U); ++l) {
        for (int u = std::max(l, u_min); u <= U; ++u) {
            const double mass = direct_sum(h, l, u);
            if (mass < tau - kMassSlack) continue;
            const int w = u - l;
            if (w < best_w || (w == best_w && mass < best_mass)) {
                best_w = w;
                best_mass = mass;
                best = BinInterval{l, u};
            }
        }
    }
    return best;
}

CheckResult kernel_vs_bruteforce(int n_histograms, std::uint64_t seed) {
    const double t0 = now_seconds();
    auto rng = make_rng(seed);
    int checked = 0;
    for (int i = 0; i < n_histograms; ++i) {
        const int m = 1 + static_cast<int>(rng() % 12);
        const ConditionalHistogram h = random_histogram(rng, m, i % 3 == 0 ? 0.3 : 0.0);
        for (int k = 1; k <= 20; ++k) {
            const double tau = 0.05 * k;
            // unconstrained
            const BinInterval full{1, m};
            const BinInterval got = shortest_mass_interval(h, tau, BinInterval::empty(), full);
            const BinInterval want = brute_force_shortest(h, tau, BinInterval::empty(), full);
            if (!(got == want))
                return {"kernel_vs_bruteforce", false,
                        "unconstrained mismatch: got " + describe(got) + " want " +
                            describe(want),
                        now_seconds() - t0};
            ++checked;
            // constrained variant around a random window
            if (m >= 3) {
                const int a = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(m));
                const int b = a + static_cast<int>(rng() % static_cast<std::uint64_t>(m - a + 1));
                const BinInterval inner{a, b};
                const BinInterval outer{1, m};
                if (direct_sum(h, 1, m) < tau - kMassSlack) continue;
                const BinInterval got2 = shortest_mass_interval(h, tau, inner, outer);
                const BinInterval want2 = brute_force_shortest(h, tau, inner, outer);
                if (!(got2 == want2))
                    return {"kernel_vs_bruteforce", false,
                            "constrained mismatch: got " + describe(got2) + " want " +
                                describe(want2),
                            now_seconds() - t0};
                ++checked;
            }
        }
    }
    return {"kernel_vs_bruteforce", true, std::to_string(checked) + " cases matched",
            now_seconds() - t0};
}

CheckResult nesting_fuzz(int n_cases, std::uint64_t seed) {
    const double t0 = now_seconds();
    auto rng = make_rng(seed);
    for (int c = 0; c < n_cases; ++c) {
        const int m = 1 + static_cast<int>(rng() % 50);
        const ConditionalHistogram h = random_histogram(rng, m, c % 4 == 0 ? 0.4 : 0.0);
        SequenceConfig cfg;
        cfg.resolution = 1 + static_cast<int>(rng() % 100);
        cfg.start_index = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.resolution + 1));
        cfg.randomize = (c % 2 == 0);
        const double eps = uniform01(rng);

        const NestedSequence seq = build_sequence(h, cfg, eps);
        double prev_mass = -1.0;
        for (int t = 0; t <= cfg.resolution; ++t) {
            const auto& s = seq.sets[static_cast<std::size_t>(t)];
            if (t > 0 && !s.contains(seq.sets[static_cast<std::size_t>(t) - 1]))
                return {"nesting_fuzz", false,
                        "nesting violated at t=" + std::to_string(t) + " case " +
                            std::to_string(c),
                        now_seconds() - t0};
            const double mass = h.mass(s);
            if (mass < prev_mass - 1e-12)
                return {"nesting_fuzz", false, "mass not monotone at t=" + std::to_string(t),
                        now_seconds() - t0};
            prev_mass = mass;
            if (!cfg.randomize && mass < cfg.tau(t) - 1e-9)
                return {"nesting_fuzz", false,
                        "deterministic mass below tau at t=" + std::to_string(t),
                        now_seconds() - t0};
        }
        if (h.mass(seq.sets.back()) < h.total_mass() - 1e-9)
            return {"nesting_fuzz", false, "top level misses mass", now_seconds() - t0};

        const NestedSequence again = build_sequence(h, cfg, eps);
        for (int t = 0; t <= cfg.resolution; ++t)
            if (!(again.sets[static_cast<std::size_t>(t)] ==
                  seq.sets[static_cast<std::size_t>(t)]))
                return {"nesting_fuzz", false, "not deterministic", now_seconds() - t0};
    }
    return {"nesting_fuzz", true, std::to_string(n_cases) + " cases nested", now_seconds() - t0};
}

CheckResult density_fuzz(int n_cases, std::uint64_t seed) {
    const double t0 = now_seconds();
    auto rng = make_rng(seed);
    for (int c = 0; c < n_cases; ++c) {
        // Random grid with ties to exercise point masses.
        const int k = 2 + static_cast<int>(rng() % 29);
        QuantileGrid g;
        g.levels.resize(static_cast<std::size_t>(k) + 1);
        g.levels.front() = 0.0;
        g.levels.back() = 1.0;
        for (int i = 1; i < k; ++i)
            g.levels[static_cast<std::size_t>(i)] = uniform01(rng);
        std::sort(g.levels.begin(), g.levels.end());
        bool distinct = true;
        for (std::size_t i = 1; i < g.levels.size(); ++i)
            if (!(g.levels[i] > g.levels[i - 1])) distinct = false;
        if (!distinct) continue;

        g.values.resize(g.levels.size());
        double v = -5.0 * uniform01(rng);
        for (auto& gv : g.values) {
            gv = v;
            const double step = uniform01(rng) < 0.25 ? 0.0 : uniform01(rng);
            v += step;
        }
        if (!(g.values.back() > g.values.front())) continue;

        const PiecewiseDensity raw = quantiles_to_density(g);
        const double lo_q = g.values[1];
        const double hi_q = g.values[g.values.size() - 2];
        const PiecewiseDensity d = tail_smooth(raw, lo_q, hi_q);

        double total = 0.0;
        for (double mi : d.masses()) total += mi;
        if (std::abs(total - 1.0) > 1e-9)
            return {"density_fuzz", false, "density mass sum off by " + std::to_string(total - 1),
                    now_seconds() - t0};
        if (std::abs(d.cdf(d.support_lo())) > 1e-12 || std::abs(d.cdf(d.support_hi()) - 1.0) > 1e-12)
            return {"density_fuzz", false, "cdf endpoints wrong", now_seconds() - t0};

        double prev = -1.0;
        for (int probe = 0; probe < 20; ++probe) {
            const double y = d.support_lo() +
                             (d.support_hi() - d.support_lo()) * probe / 19.0;
            const double f = d.cdf(y);
            if (f < prev - 1e-12)
                return {"density_fuzz", false, "cdf not monotone", now_seconds() - t0};
            prev = f;
            // generalized-inverse inequalities
            if (d.inverse_cdf(d.cdf(y)) > y + 1e-9)
                return {"density_fuzz", false, "inverse_cdf(cdf(y)) above y", now_seconds() - t0};
            const double u = uniform01(rng);
            if (d.cdf(d.inverse_cdf(u)) < u - 1e-9)
                return {"density_fuzz", false, "cdf(inverse_cdf(u)) below u", now_seconds() - t0};
        }

        // Histogram over a refinement of the knots: per-segment sums must
        // recover the segment masses.
        std::vector<double> edges;
        for (std::size_t i = 0; i < d.knots().size(); ++i) {
            edges.push_back(d.knots()[i]);
            if (i + 1 < d.knots().size())
                edges.push_back(0.5 * (d.knots()[i] + d.knots()[i + 1]));
        }
        const Partition part(std::move(edges));
        const ConditionalHistogram h = density_to_histogram(d, part);
        double sum = 0.0;
        for (double mi : h.masses()) sum += mi;
        if (std::abs(sum - 1.0) > 1e-9)
            return {"density_fuzz", false, "histogram sum off", now_seconds() - t0};
        for (std::size_t s = 0; s < d.masses().size(); ++s) {
            const double got = h.mass_at(static_cast<int>(2 * s) + 1) +
                               h.mass_at(static_cast<int>(2 * s) + 2);
            if (std::abs(got - d.masses()[s]) > 1e-9)
                return {"density_fuzz", false, "refinement round trip off", now_seconds() - t0};
        }
    }
    return {"density_fuzz", true, std::to_string(n_cases) + " grids verified",
            now_seconds() - t0};
}

CheckResult trim_mean_mass(int n_draws, std::uint64_t seed) {
    const double t0 = now_seconds();
    auto rng = make_rng(seed);
    for (int rep = 0; rep < 10; ++rep) {
        const int m = 5 + static_cast<int>(rng() % 20);
        const ConditionalHistogram h = random_histogram(rng, m, 0.0);
        const double tau = 0.3 + 0.6 * uniform01(rng);
        const BinInterval s =
            shortest_mass_interval(h, tau, BinInterval::empty(), BinInterval{1, m});
        const double v = mass_excess(s, h, tau);
        if (!(v >= 0.0 && v <= 1.0)) continue;  // optimality should keep v in [0, 1)
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n_draws; ++i) {
            const double eps = uniform01(rng);
            const double mass = h.mass(randomized_trim(s, h, tau, eps));
            sum += mass;
            sumsq += mass * mass;
        }
        const double n = n_draws;
        const double mean = sum / n;
        const double var = std::max(0.0, sumsq / n - mean * mean);
        const double se = std::sqrt(var / n);
        if (std::abs(mean - tau) > 3.0 * se + 1e-12) {
            std::ostringstream os;
            os << "mean trimmed mass " << mean << " vs tau " << tau << " (se " << se << ")";
            return {"trim_mean_mass", false, os.str(), now_seconds() - t0};
        }
    }
    return {"trim_mean_mass", true, "mean trimmed mass matches tau", now_seconds() - t0};
}

}  // namespace chr::selfcheck
