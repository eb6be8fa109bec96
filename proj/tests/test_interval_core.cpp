#include <doctest.h>

#include <cmath>
#include <limits>

#include "chr/interval_core.hpp"
#include "chr/rng.hpp"
#include "chr/selfcheck.hpp"

using namespace chr;

namespace {
ConditionalHistogram hist(std::vector<double> v) { return ConditionalHistogram(std::move(v)); }
const BinInterval kEmpty = BinInterval::empty();
}  // namespace

TEST_CASE("histogram invariants") {
    const auto h = hist({0.1, 0.5, 0.3, 0.1});
    CHECK(h.m() == 4);
    CHECK(h.mass_range(1, 4) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.mass_at(2) == doctest::Approx(0.5));

    // mild deviation renormalizes
    const auto h2 = hist({0.25, 0.25, 0.25, 0.25 + 5e-7});
    double sum = 0.0;
    for (double v : h2.masses()) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);

    CHECK_THROWS_AS(hist({0.5, 0.6}), NonUnitSumError);
    CHECK_THROWS_AS(hist({1.2, -0.2}), NonUnitSumError);
}

TEST_CASE("shortest_mass_interval: spec examples") {
    const auto h = hist({0.1, 0.5, 0.3, 0.1});
    const BinInterval full{1, 4};

    SUBCASE("width-1 winner at tau=0.7") {
        const auto s = shortest_mass_interval(h, 0.7, kEmpty, full);
        CHECK(s == BinInterval{2, 3});
        CHECK(h.mass(s) == doctest::Approx(0.8));
    }
    SUBCASE("minimal-mass tie rule") {
        // raw sums: [1,2]=0.7, [2,3]=0.6, [3,4]=0.7; renormalized variant
        std::vector<double> v{0.4 / 1.4, 0.3 / 1.4, 0.3 / 1.4, 0.4 / 1.4};
        const auto h2 = hist(std::move(v));
        const double tau = 0.6 / 1.4;
        const auto s = shortest_mass_interval(h2, tau, kEmpty, full);
        CHECK(s == BinInterval{2, 3});
        CHECK(s == selfcheck::brute_force_shortest(h2, tau, kEmpty, full));
    }
    SUBCASE("containment constraint flips the winner") {
        const auto h3 = hist({0.5, 0.2, 0.2, 0.1});
        const auto s = shortest_mass_interval(h3, 0.5, BinInterval{3, 3}, full);
        CHECK(s == BinInterval{2, 4});  // [1,3] has mass 0.9, [2,4] only 0.5
    }
    SUBCASE("tau=1 returns the full range when boundary bins carry mass") {
        const auto s = shortest_mass_interval(h, 1.0, kEmpty, full);
        CHECK(s == BinInterval{1, 4});
    }
    SUBCASE("tau=1 drops zero-mass boundary bins") {
        const auto h4 = hist({0.0, 0.5, 0.5, 0.0});
        const auto s = shortest_mass_interval(h4, 1.0, kEmpty, full);
        CHECK(s == BinInterval{2, 3});
    }
    SUBCASE("tau=0 picks the minimal-mass single bin, leftmost on ties") {
        const auto s = shortest_mass_interval(h, 0.0, kEmpty, full);
        CHECK(s == BinInterval{1, 1});  // 0.1 ties with bin 4; leftmost wins
    }
}

TEST_CASE("shortest_mass_interval: errors") {
    const auto h = hist({0.1, 0.5, 0.3, 0.1});
    CHECK_THROWS_AS(shortest_mass_interval(h, 0.5, BinInterval{1, 3}, BinInterval{2, 4}),
                    InfeasibleError);
    CHECK_THROWS_AS(shortest_mass_interval(h, 0.9, kEmpty, BinInterval{2, 3}), InfeasibleError);
}

TEST_CASE("mass_excess: spec examples") {
    const auto h = hist({0.1, 0.5, 0.3, 0.1});
    CHECK(mass_excess(BinInterval{2, 3}, h, 0.7) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(mass_excess(BinInterval{2, 2}, h, 0.3) == doctest::Approx(0.4).epsilon(1e-9));
    // mass exactly tau
    CHECK(mass_excess(BinInterval{2, 3}, h, h.mass_range(2, 3)) == doctest::Approx(0.0));
    // zero-mass boundary: +infinity sentinel
    const auto hz = hist({0.0, 0.6, 0.4});
    CHECK(std::isinf(mass_excess(BinInterval{1, 2}, hz, 0.5)));
    CHECK_THROWS_AS(mass_excess(kEmpty, h, 0.5), EmptyIntervalError);
}

TEST_CASE("randomized_trim: spec examples") {
    const auto h = hist({0.1, 0.5, 0.3, 0.1});
    CHECK(randomized_trim(BinInterval{2, 3}, h, 0.7, 0.5) == BinInterval{2, 3});  // eps > V
    CHECK(randomized_trim(BinInterval{2, 3}, h, 0.7, 0.2) == BinInterval{2, 2});  // drop right
    // mass exactly tau: unchanged for any eps > 0
    CHECK(randomized_trim(BinInterval{2, 3}, h, h.mass_range(2, 3), 0.01) == BinInterval{2, 3});
    // width-1 trims to EMPTY
    CHECK(randomized_trim(BinInterval{2, 2}, h, 0.5, 0.0).is_empty());
    // zero-mass boundary always trimmed
    const auto hz = hist({0.0, 0.6, 0.4});
    CHECK(randomized_trim(BinInterval{1, 3}, hz, 1.0, 0.999999) == BinInterval{2, 3});
}

TEST_CASE("trim output is contained and loses at most one bin") {
    auto rng = make_rng(99);
    for (int c = 0; c < 500; ++c) {
        const int m = 2 + static_cast<int>(rng() % 10);
        std::vector<double> v(static_cast<std::size_t>(m));
        double sum = 0.0;
        for (double& x : v) {
            x = uniform01(rng);
            sum += x;
        }
        for (double& x : v) x /= sum;
        const auto h = hist(std::move(v));
        const double tau = uniform01(rng);
        const auto s = shortest_mass_interval(h, tau, kEmpty, BinInterval{1, m});
        const auto t = randomized_trim(s, h, tau, uniform01(rng));
        CHECK(s.contains(t));
        CHECK((t.count() == s.count() || t.count() == s.count() - 1));
    }
}

TEST_CASE("brute-force differential (quick)") {
    const auto r = selfcheck::kernel_vs_bruteforce(150, 4242);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("mean trimmed mass equals tau (Monte Carlo)") {
    const auto r = selfcheck::trim_mean_mass(20000, 777);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("optional jitter keeps the histogram valid") {
    const auto h = hist({0.25, 0.25, 0.25, 0.25});
    const auto j = jitter_masses(h, 5);
    double sum = 0.0;
    for (double v : j.masses()) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    for (int i = 1; i <= 4; ++i) CHECK(std::abs(j.mass_at(i) - 0.25) < 1e-11);
}
