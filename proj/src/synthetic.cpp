#include "chr/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chr/rng.hpp"

namespace chr {

namespace {

struct Piece {
    double lo, hi, mass;
    double density() const { return mass > 0.0 ? mass / (hi - lo) : 0.0; }
};

// Conditional density pieces for Y | X = x, left to right. The core is
// symmetric so sign flips leave it unchanged; the outlier band splits
// between the two sides according to flip_prob.
std::array<Piece, 3> pieces_at(const SyntheticConfig& cfg, double x) {
    const double b = cfg.scale(x);
    const double w = cfg.outlier_prob;
    const double p = cfg.flip_prob;
    return {Piece{-cfg.outlier_hi * b, -cfg.outlier_lo * b, w * p},
            Piece{-b, b, 1.0 - w},
            Piece{cfg.outlier_lo * b, cfg.outlier_hi * b, w * (1.0 - p)}};
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.flip_prob < 0.0 || cfg.flip_prob > 1.0)
        throw std::invalid_argument("generate_synthetic: flip_prob outside [0, 1]");
    if (!(cfg.outlier_lo > 1.0) || !(cfg.outlier_hi > cfg.outlier_lo))
        throw std::invalid_argument("generate_synthetic: outlier band must sit beyond the core");
    auto rng = make_rng(cfg.seed);
    Dataset d;
    d.feature_names = {"x"};
    d.x = Matrix(cfg.n_samples, 1);
    d.y.resize(cfg.n_samples);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        const double x = uniform01(rng);
        const bool outlier = uniform01(rng) < cfg.outlier_prob;
        const double u = uniform01(rng);
        const double z =
            outlier ? cfg.outlier_lo + (cfg.outlier_hi - cfg.outlier_lo) * u : -1.0 + 2.0 * u;
        const bool flip = uniform01(rng) < cfg.flip_prob;
        d.x.at(i, 0) = x;
        d.y[i] = (flip ? -1.0 : 1.0) * cfg.scale(x) * z;
    }
    return d;
}

double oracle_conditional_cdf(const SyntheticConfig& cfg, double x, double y) {
    double cum = 0.0;
    for (const Piece& pc : pieces_at(cfg, x)) {
        if (y >= pc.hi) {
            cum += pc.mass;
        } else if (y > pc.lo) {
            cum += pc.mass * (y - pc.lo) / (pc.hi - pc.lo);
        }
    }
    return std::clamp(cum, 0.0, 1.0);
}

double oracle_conditional_quantile(const SyntheticConfig& cfg, double x, double level) {
    const auto pcs = pieces_at(cfg, x);
    if (level <= 0.0) {
        for (const Piece& pc : pcs)
            if (pc.mass > 0.0) return pc.lo;
    }
    if (level >= 1.0) {
        for (auto it = pcs.rbegin(); it != pcs.rend(); ++it)
            if (it->mass > 0.0) return it->hi;
    }
    double cum = 0.0;
    for (const Piece& pc : pcs) {
        if (pc.mass <= 0.0) continue;
        if (level <= cum + pc.mass)
            return pc.lo + (pc.hi - pc.lo) * (level - cum) / pc.mass;
        cum += pc.mass;
    }
    for (auto it = pcs.rbegin(); it != pcs.rend(); ++it)
        if (it->mass > 0.0) return it->hi;
    throw std::logic_error("oracle_conditional_quantile: degenerate law");
}

double oracle_shortest_width(const SyntheticConfig& cfg, double x, double tau) {
    if (tau <= 0.0) return 0.0;
    const auto pcs = pieces_at(cfg, x);
    double best = std::numeric_limits<double>::infinity();
    const int np = static_cast<int>(pcs.size());
    for (int i = 0; i < np; ++i) {
        if (pcs[static_cast<std::size_t>(i)].mass <= 0.0) continue;
        for (int j = i; j < np; ++j) {
            const Piece& pi = pcs[static_cast<std::size_t>(i)];
            const Piece& pj = pcs[static_cast<std::size_t>(j)];
            if (pj.mass <= 0.0) continue;
            if (i == j) {
                if (tau <= pi.mass + 1e-15) best = std::min(best, tau / pi.density());
                continue;
            }
            double inner_mass = 0.0;
            for (int k = i + 1; k < j; ++k) inner_mass += pcs[static_cast<std::size_t>(k)].mass;
            const double inner_width = pj.lo - pi.hi;  // gaps included
            double need = tau - inner_mass;
            if (need <= 0.0) {
                best = std::min(best, inner_width);
                continue;
            }
            if (need > pi.mass + pj.mass + 1e-15) continue;
            // Fill from the denser end piece first.
            const Piece& dense = pi.density() >= pj.density() ? pi : pj;
            const Piece& thin = pi.density() >= pj.density() ? pj : pi;
            const double from_dense = std::min(need, dense.mass);
            const double from_thin = std::min(need - from_dense, thin.mass);
            double width = inner_width + from_dense / dense.density();
            if (from_thin > 0.0) width += from_thin / thin.density();
            best = std::min(best, width);
        }
    }
    if (!std::isfinite(best))
        throw std::invalid_argument("oracle_shortest_width: tau exceeds total mass");
    return best;
}

double oracle_mean_width(const SyntheticConfig& cfg, double tau) {
    SyntheticConfig unit = cfg;
    unit.scale_base = 1.0;
    unit.scale_slope = 0.0;
    const double unit_width = oracle_shortest_width(unit, 0.0, tau);
    return unit_width * (cfg.scale_base + 0.5 * cfg.scale_slope);
}

double synthetic_conditional_skewness(const SyntheticConfig& cfg) {
    const double w = cfg.outlier_prob;
    const double a = cfg.outlier_lo;
    const double b = cfg.outlier_hi;
    const double m1o = 0.5 * (a + b);
    const double m2o = m1o * m1o + (b - a) * (b - a) / 12.0;
    const double m3o = (b * b * b * b - a * a * a * a) / (4.0 * (b - a));
    const double ez = w * m1o;
    const double ez2 = (1.0 - w) / 3.0 + w * m2o;
    const double ez3 = w * m3o;
    const double q = 1.0 - 2.0 * cfg.flip_prob;  // sign-flip factor for odd moments
    const double e1 = q * ez;
    const double e3 = q * ez3;
    const double var = ez2 - e1 * e1;
    const double third = e3 - 3.0 * e1 * ez2 + 2.0 * e1 * e1 * e1;
    return third / std::pow(var, 1.5);
}

double flip_prob_for_skewness(const SyntheticConfig& cfg, double target) {
    SyntheticConfig c = cfg;
    c.flip_prob = 0.0;
    const double top = synthetic_conditional_skewness(c);
    if (target >= top) return 0.0;
    if (target <= 0.0) return 0.5;
    double lo = 0.0, hi = 0.5;  // skewness decreases in flip_prob on [0, 0.5]
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        c.flip_prob = mid;
        if (synthetic_conditional_skewness(c) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace chr
