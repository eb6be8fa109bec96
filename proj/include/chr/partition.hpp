#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chr {

struct NonUnitSumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyIntervalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bin grid b_0 < b_1 < ... < b_m over the response domain.
/// Bin j (1-based) covers [b_{j-1}, b_j).
class Partition {
  public:
    explicit Partition(std::vector<double> edges);

    /// Equal-width grid with m bins spanning [lo, hi].
    static Partition equal_width(double lo, double hi, int m);

    int m() const { return static_cast<int>(edges_.size()) - 1; }
    const std::vector<double>& edges() const { return edges_; }
    double lo() const { return edges_.front(); }
    double hi() const { return edges_.back(); }

    /// 1-based bin index for y in [b_0, b_m); 0 if y < b_0, m+1 if y >= b_m.
    int bin_index(double y) const;

    /// Midpoint of bin j (1-based).
    double bin_midpoint(int j) const { return 0.5 * (edges_[j - 1] + edges_[j]); }

  private:
    std::vector<double> edges_;
};

/// Contiguous run of bins [lo, hi] with 1-based inclusive endpoints, or EMPTY.
struct BinInterval {
    int lo = 1;
    int hi = 0;  // lo > hi encodes EMPTY

    static BinInterval empty() { return BinInterval{1, 0}; }
    bool is_empty() const { return lo > hi; }
    int count() const { return is_empty() ? 0 : hi - lo + 1; }

    bool contains_bin(int j) const { return !is_empty() && lo <= j && j <= hi; }
    /// EMPTY is contained in everything.
    bool contains(const BinInterval& other) const {
        if (other.is_empty()) return true;
        return !is_empty() && lo <= other.lo && other.hi <= hi;
    }
    bool operator==(const BinInterval& o) const {
        if (is_empty() && o.is_empty()) return true;
        return !is_empty() && !o.is_empty() && lo == o.lo && hi == o.hi;
    }
};

/// Unit-sum non-negative masses pi_1..pi_m for one feature point.
///
/// The constructor renormalizes when |sum - 1| <= 1e-6 and rejects larger
/// deviations; after construction the sum is 1 within 1e-9. Negative inputs
/// above -1e-12 are clamped to zero.
class ConditionalHistogram {
  public:
    explicit ConditionalHistogram(std::vector<double> masses);

    int m() const { return static_cast<int>(masses_.size()); }
    const std::vector<double>& masses() const { return masses_; }

    /// Mass of bin j, 1-based.
    double mass_at(int j) const { return masses_[static_cast<std::size_t>(j) - 1]; }

    /// Sum of masses over bins l..u (1-based inclusive), via prefix sums.
    double mass_range(int l, int u) const { return prefix_[u] - prefix_[l - 1]; }

    double mass(const BinInterval& s) const { return s.is_empty() ? 0.0 : mass_range(s.lo, s.hi); }

    double total_mass() const { return prefix_.back(); }

  private:
    std::vector<double> masses_;
    std::vector<double> prefix_;  // prefix_[j] = sum of first j masses, prefix_[0] = 0
};

/// Optional tie-breaking aid: adds seeded uniform noise of the given scale to
/// every mass and renormalizes. Off by default everywhere.
ConditionalHistogram jitter_masses(const ConditionalHistogram& h, std::uint64_t seed,
                                   double scale = 1e-12);

/// Maps bin indices back to response units: [lo, hi] -> (b_{lo-1}, b_hi).
std::pair<double, double> interval_to_response_range(const BinInterval& s, const Partition& p);

}  // namespace chr
