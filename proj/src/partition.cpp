#include "chr/partition.hpp"

#include <algorithm>
#include <cmath>

#include "chr/rng.hpp"

namespace chr {

Partition::Partition(std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 2) throw std::invalid_argument("Partition: need at least 2 edges");
    for (std::size_t i = 1; i < edges_.size(); ++i) {
        if (!(edges_[i - 1] < edges_[i]))
            throw std::invalid_argument("Partition: edges must be strictly increasing");
    }
}

Partition Partition::equal_width(double lo, double hi, int m) {
    if (m < 1) throw std::invalid_argument("Partition: bin count must be positive");
    if (!(lo < hi)) throw std::invalid_argument("Partition: lo must be below hi");
    std::vector<double> e(static_cast<std::size_t>(m) + 1);
    const double w = (hi - lo) / m;
    for (int j = 0; j <= m; ++j) e[static_cast<std::size_t>(j)] = lo + w * j;
    e.front() = lo;
    e.back() = hi;
    return Partition(std::move(e));
}

int Partition::bin_index(double y) const {
    if (y < edges_.front()) return 0;
    if (y >= edges_.back()) return m() + 1;
    // first edge strictly greater than y; bin j covers [b_{j-1}, b_j)
    auto it = std::upper_bound(edges_.begin(), edges_.end(), y);
    return static_cast<int>(it - edges_.begin());
}

ConditionalHistogram::ConditionalHistogram(std::vector<double> masses)
    : masses_(std::move(masses)) {
    if (masses_.empty()) throw NonUnitSumError("ConditionalHistogram: no bins");
    double sum = 0.0;
    for (double& v : masses_) {
        if (v < 0.0) {
            if (v < -1e-12) throw NonUnitSumError("ConditionalHistogram: negative mass");
            v = 0.0;
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw NonUnitSumError("ConditionalHistogram: masses sum to " + std::to_string(sum));
    if (sum != 1.0) {
        for (double& v : masses_) v /= sum;
    }
    prefix_.resize(masses_.size() + 1);
    prefix_[0] = 0.0;
    for (std::size_t j = 0; j < masses_.size(); ++j) prefix_[j + 1] = prefix_[j] + masses_[j];
}

ConditionalHistogram jitter_masses(const ConditionalHistogram& h, std::uint64_t seed,
                                   double scale) {
    auto rng = make_rng(seed);
    std::vector<double> v = h.masses();
    for (double& x : v) x += scale * uniform01(rng);
    double sum = 0.0;
    for (double x : v) sum += x;
    for (double& x : v) x /= sum;
    return ConditionalHistogram(std::move(v));
}

std::pair<double, double> interval_to_response_range(const BinInterval& s, const Partition& p) {
    if (s.is_empty()) throw EmptyIntervalError("interval_to_response_range: empty interval");
    const auto& e = p.edges();
    return {e[static_cast<std::size_t>(s.lo) - 1], e[static_cast<std::size_t>(s.hi)]};
}

}  // namespace chr
