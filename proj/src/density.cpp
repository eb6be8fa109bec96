#include "chr/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chr {

void QuantileGrid::validate() const {
    if (levels.size() != values.size() || levels.size() < 2)
        throw std::invalid_argument("QuantileGrid: levels/values size mismatch");
    if (std::abs(levels.front()) > 1e-12 || std::abs(levels.back() - 1.0) > 1e-12)
        throw std::invalid_argument("QuantileGrid: levels must span [0, 1]");
    for (std::size_t k = 1; k < levels.size(); ++k) {
        if (!(levels[k] > levels[k - 1]))
            throw std::invalid_argument("QuantileGrid: levels must be strictly increasing");
        if (values[k] < values[k - 1])
            throw std::invalid_argument("QuantileGrid: values must be non-decreasing");
    }
}

PiecewiseDensity::PiecewiseDensity(std::vector<double> knots, std::vector<double> masses)
    : knots_(std::move(knots)), masses_(std::move(masses)) {
    if (knots_.size() < 2 || masses_.size() != knots_.size() - 1)
        throw std::invalid_argument("PiecewiseDensity: need one mass per segment");
    double sum = 0.0;
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (!(knots_[i - 1] < knots_[i]))
            throw std::invalid_argument("PiecewiseDensity: knots must be strictly increasing");
    }
    for (double& v : masses_) {
        if (v < 0.0) {
            if (v < -1e-12) throw std::invalid_argument("PiecewiseDensity: negative mass");
            v = 0.0;
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("PiecewiseDensity: masses must sum to one");
    if (sum != 1.0) {
        for (double& v : masses_) v /= sum;
    }
    cum_.resize(knots_.size());
    cum_[0] = 0.0;
    for (std::size_t i = 0; i < masses_.size(); ++i) cum_[i + 1] = cum_[i] + masses_[i];
    cum_.back() = 1.0;
}

double PiecewiseDensity::cdf(double y) const {
    if (y <= knots_.front()) return 0.0;
    if (y >= knots_.back()) return 1.0;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin());  // y in (knots[i-1], knots[i])
    const double w = knots_[i] - knots_[i - 1];
    const double frac = (y - knots_[i - 1]) / w;
    double v = cum_[i - 1] + masses_[i - 1] * frac;
    return std::clamp(v, 0.0, 1.0);
}

double PiecewiseDensity::inverse_cdf(double u) const {
    if (u <= 0.0) return knots_.front();
    // First knot index with cum >= u; interpolate inside that segment.
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cum_.begin());
    if (i == 0) return knots_.front();
    if (i >= cum_.size()) return knots_.back();
    const double lo_c = cum_[i - 1];
    const double seg = cum_[i] - lo_c;
    if (seg <= 0.0) return knots_[i];  // lower_bound landed past a flat stretch
    const double frac = (u - lo_c) / seg;
    return knots_[i - 1] + frac * (knots_[i] - knots_[i - 1]);
}

PiecewiseDensity quantiles_to_density(const QuantileGrid& g) {
    g.validate();
    std::vector<double> knots;
    std::vector<double> masses;
    knots.push_back(g.values.front());
    double pending = 0.0;  // increments stuck at the left support bound
    for (std::size_t k = 1; k < g.values.size(); ++k) {
        const double inc = g.levels[k] - g.levels[k - 1];
        const double v = g.values[k];
        if (v > knots.back()) {
            knots.push_back(v);
            masses.push_back(inc + pending);
            pending = 0.0;
        } else {
            // duplicate value: concentrate on the segment ending here
            if (masses.empty())
                pending += inc;
            else
                masses.back() += inc;
        }
    }
    if (masses.empty()) {
        // Degenerate support: all quantiles equal. Near-point segment.
        const double v = g.values.front();
        const double w = std::max(1e-9, std::abs(v) * 1e-12);
        return PiecewiseDensity({v, v + w}, {1.0});
    }
    return PiecewiseDensity(std::move(knots), std::move(masses));
}

PiecewiseDensity tail_smooth(const PiecewiseDensity& d, double lower_q, double upper_q) {
    lower_q = std::clamp(lower_q, d.support_lo(), d.support_hi());
    upper_q = std::clamp(upper_q, lower_q, d.support_hi());

    std::vector<double> knots;
    knots.push_back(d.support_lo());
    auto push = [&knots](double v) {
        if (v > knots.back()) knots.push_back(v);
    };
    push(lower_q);
    for (double c : d.knots()) {
        if (c > lower_q && c < upper_q) push(c);
    }
    push(upper_q);
    push(d.support_hi());
    if (knots.size() < 2) return d;  // fully degenerate, nothing to spread

    std::vector<double> masses(knots.size() - 1);
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        masses[i] = d.cdf(knots[i + 1]) - d.cdf(knots[i]);
    return PiecewiseDensity(std::move(knots), std::move(masses));
}

ConditionalHistogram density_to_histogram(const PiecewiseDensity& d, const Partition& p) {
    const int m = p.m();
    const auto& e = p.edges();
    std::vector<double> pi(static_cast<std::size_t>(m));
    double prev = 0.0;  // mass below the left edge folds into bin 1
    for (int j = 1; j <= m; ++j) {
        const double cur = (j == m) ? 1.0 : d.cdf(e[static_cast<std::size_t>(j)]);
        pi[static_cast<std::size_t>(j) - 1] = cur - prev;
        prev = cur;
    }
    return ConditionalHistogram(std::move(pi));
}

}  // namespace chr
