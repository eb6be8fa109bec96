#include <doctest.h>

#include "chr/nested_sequence.hpp"
#include "chr/rng.hpp"
#include "chr/selfcheck.hpp"

using namespace chr;

TEST_CASE("uniform histogram grows one bin per level") {
    const ConditionalHistogram h({0.25, 0.25, 0.25, 0.25});
    SequenceConfig cfg{4, 4, false};
    const NestedSequence seq = build_sequence(h, cfg, 0.0);
    REQUIRE(seq.sets.size() == 5);
    for (int t = 0; t <= 4; ++t) {
        CHECK(h.mass(seq.sets[static_cast<std::size_t>(t)]) >= 0.25 * t - 1e-12);
        if (t > 0)
            CHECK(seq.sets[static_cast<std::size_t>(t)].contains(
                seq.sets[static_cast<std::size_t>(t) - 1]));
    }
    CHECK(seq.sets[4] == BinInterval{1, 4});
    CHECK(seq.sets[0].count() == 1);
}

TEST_CASE("running example: S_9 = [1,3], S_10 = [1,4]") {
    const ConditionalHistogram h({0.1, 0.5, 0.3, 0.1});
    SequenceConfig cfg{10, 9, false};
    const NestedSequence seq = build_sequence(h, cfg, 0.0);
    CHECK(seq.sets[9] == BinInterval{1, 3});  // mass tie with [2,4]; leftmost wins
    CHECK(seq.sets[10] == BinInterval{1, 4});
}

TEST_CASE("interval_to_response_range") {
    const Partition p5({0.0, 1.0, 2.0, 3.0, 4.0});
    CHECK(interval_to_response_range(BinInterval{1, 4}, p5) ==
          std::pair<double, double>{0.0, 4.0});
    CHECK(interval_to_response_range(BinInterval{2, 3}, p5) ==
          std::pair<double, double>{1.0, 3.0});
    const Partition pneg({-2.0, -1.0, 0.0, 1.0, 2.0});
    CHECK(interval_to_response_range(BinInterval{3, 3}, pneg) ==
          std::pair<double, double>{0.0, 1.0});
    CHECK_THROWS_AS(interval_to_response_range(BinInterval::empty(), p5), EmptyIntervalError);
}

TEST_CASE("early-exit walk agrees with the materialized family") {
    auto rng = make_rng(31337);
    for (int c = 0; c < 400; ++c) {
        const int m = 1 + static_cast<int>(rng() % 20);
        std::vector<double> v(static_cast<std::size_t>(m));
        double sum = 0.0;
        for (double& x : v) {
            x = uniform01(rng) < 0.2 ? 0.0 : uniform01(rng);
            sum += x;
        }
        if (sum <= 0.0) continue;
        for (double& x : v) x /= sum;
        const ConditionalHistogram h(std::move(v));
        SequenceConfig cfg;
        cfg.resolution = 1 + static_cast<int>(rng() % 40);
        cfg.start_index = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.resolution + 1));
        cfg.randomize = (c % 2 == 0);
        const double eps = uniform01(rng);
        const NestedSequence seq = build_sequence(h, cfg, eps);
        for (int j = 1; j <= m; ++j) {
            int expected = cfg.resolution;
            for (int t = 0; t <= cfg.resolution; ++t) {
                if (seq.sets[static_cast<std::size_t>(t)].contains_bin(j)) {
                    expected = t;
                    break;
                }
            }
            CHECK(smallest_containing_index(h, cfg, eps, j) == expected);
        }
        // set_at_level matches the materialized sets at a few random levels
        for (int probe = 0; probe < 3; ++probe) {
            const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.resolution + 1));
            CHECK(set_at_level(h, cfg, eps, t) == seq.sets[static_cast<std::size_t>(t)]);
        }
        // bin entry levels in one sweep
        const auto entry = bin_entry_levels(h, cfg, eps);
        for (int j = 1; j <= m; ++j)
            CHECK(entry[static_cast<std::size_t>(j) - 1] ==
                  smallest_containing_index(h, cfg, eps, j));
    }
}

TEST_CASE("nesting fuzz (quick)") {
    const auto r = selfcheck::nesting_fuzz(1500, 2024);
    INFO(r.detail);
    CHECK(r.pass);
}

TEST_CASE("default start index tracks alpha") {
    const auto cfg = SequenceConfig::for_alpha(1000, 0.1);
    CHECK(cfg.start_index == 900);
    const auto cfg2 = SequenceConfig::for_alpha(7, 0.25);
    CHECK(cfg2.start_index == 5);  // round(0.75 * 7) = round(5.25)
}
