#include "doctest.h"

#include <random>

#include "chbell/accidentals.hpp"
#include "matching.hpp"
#include "synth_fixture.hpp"

using namespace chbell;

namespace {

std::uint64_t greedy(const std::vector<double>& a, const std::vector<double>& b, double w) {
    return greedy_coincidences(a, b, w);
}

std::vector<double> random_list(std::mt19937_64& rng, int max_len, int spread) {
    std::uniform_int_distribution<int> len(0, max_len), t(0, spread);
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (auto& x : v)
        x = t(rng);
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

TEST_CASE("greedy threshold cases") {
    CHECK(greedy({0.0}, {10.0}, 5.0) == 0);
    CHECK(greedy({0.0}, {10.0}, 10.0) == 1);
    CHECK(greedy({0.0, 1.0}, {0.5}, 1.0) == 1);
    CHECK(greedy({}, {1.0, 2.0}, 100.0) == 0);
}

TEST_CASE("greedy equals exhaustive maximum matching on small lists") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> wdist(0, 6);
    int instances = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto a = random_list(rng, 8, 30);
        const auto b = random_list(rng, 8, 30);
        const double w = wdist(rng);
        REQUIRE(greedy(a, b, w) == static_cast<std::uint64_t>(oracle::max_matching(a, b, w)));
        ++instances;
    }
    CHECK(instances == 20000);
}

TEST_CASE("greedy is symmetric and monotone in the window") {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 2000; ++i) {
        const auto a = random_list(rng, 40, 500);
        const auto b = random_list(rng, 40, 500);
        std::uint64_t prev = 0;
        for (double w = 0; w <= 60; w += 3) {
            const auto c = greedy(a, b, w);
            REQUIRE(c == greedy(b, a, w));
            REQUIRE(c >= prev);
            prev = c;
        }
    }
}

TEST_CASE("counts are scale free") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 1000; ++i) {
        auto a = random_list(rng, 30, 1000);
        auto b = random_list(rng, 30, 1000);
        const auto c = greedy(a, b, 17.0);
        for (auto& x : a)
            x *= 1024.0;
        for (auto& x : b)
            x *= 1024.0;
        REQUIRE(greedy(a, b, 17.0 * 1024.0) == c);
    }
}

TEST_CASE("event lists keep in-window detections only") {
    CompiledFile f;
    auto ev = [](double raw_us, double open_us, std::uint8_t ch, Setting s) {
        CompiledEvent e;
        e.raw_time = raw_us * 1e6;
        e.pockels_time = open_us * 1e6;
        e.channel = ch;
        e.setting = s;
        return e;
    };
    f.events = {ev(100.2, 100.0, 2, Setting::a1b2), ev(100.5, 100.0, 1, Setting::a1b2),
                ev(103.0, 100.0, 1, Setting::a1b2), ev(140.1, 140.0, 1, Setting::a2b1)};
    const auto lists = prepare_event_lists(f, {});
    CHECK(lists[index(Setting::a1b2)].side1 == std::vector<double>{100.5e6});
    CHECK(lists[index(Setting::a1b2)].side2 == std::vector<double>{100.2e6});
    CHECK(lists[index(Setting::a2b1)].side1.size() == 1);
    CHECK(lists[index(Setting::a1b1)].side1.empty());
}

TEST_CASE("lists are sorted and match singles when everything is in window") {
    SynthTiming t;
    t.mean_pairs = 1.4;
    t.jitter_ns = 50;
    const auto f = fixture::compiled(fixture::sim(0.8, 1000, 31), t);
    const auto lists = prepare_event_lists(f, {});
    std::size_t n = 0;
    for (const auto& l : lists) {
        CHECK(std::is_sorted(l.side1.begin(), l.side1.end()));
        CHECK(std::is_sorted(l.side2.begin(), l.side2.end()));
        n += l.side1.size() + l.side2.size();
    }
    // jitter can push a handful of detections just outside the gate
    CHECK(n <= f.num_detection_events());
    CHECK(n + 200 >= f.num_detection_events());
}

TEST_CASE("zero detections give an all-zero curve") {
    CompiledFile f;
    f.total_trials = {10, 10, 10, 10};
    const std::vector<double> w{100, 500, 1000};
    const auto curve = scan_curve(f, {}, w);
    for (const auto& c : curve.counts)
        CHECK(c == std::vector<std::uint64_t>{0, 0, 0});
    for (const auto& s : curve.slopes)
        CHECK(s == std::vector<double>{0, 0, 0});
    CHECK(curve.ch == std::vector<double>{0, 0, 0});
    CHECK(curve.accidentals_negligible);
}

TEST_CASE("unsorted window grids are rejected") {
    CompiledFile f;
    const std::vector<double> w{500, 100};
    CHECK_THROWS_AS(scan_curve(f, {}, w), std::invalid_argument);
}

TEST_CASE("late slope grows with the square of the pair rate") {
    auto slope_at = [](double rate) {
        auto c = fixture::sim(0.5, 1, 32);
        c.state = EntangledState(0.0);
        c.angles = {0, 0, 0, 0};
        SynthTiming t;
        t.trials = 2000000;
        t.mean_pairs = rate;
        const auto f = fixture::compiled(c, t);
        const std::vector<double> w{500, 1000, 1500};
        const auto curve = scan_curve(f, {}, w);
        double s = 0;
        for (const auto& sl : curve.slopes)
            s += sl[1];
        return s;
    };
    const double low = slope_at(0.1);
    const double high = slope_at(0.2);
    CHECK(low > 0.0);
    const double ratio = high / low;
    MESSAGE("slope ratio for doubled rate: " << ratio);
    CHECK(ratio > 3.0);
    CHECK(ratio < 4.6);
}

TEST_CASE("negligibility verdict") {
    const std::vector<double> w{100, 250, 500, 750, 1000, 1500, 2000};
    const auto clean = fixture::compiled(fixture::sim(0.9, 2000, 33));
    CHECK(scan_curve(clean, {}, w).accidentals_negligible);

    auto c = fixture::sim(0.5, 2000, 34);
    SynthTiming t;
    t.mean_pairs = 6.0;
    const auto busy = fixture::compiled(c, t);
    const auto curve = scan_curve(busy, {}, w);
    CHECK_FALSE(curve.accidentals_negligible);
    CurveOptions loose;
    loose.slope_fraction = 10.0;
    CHECK(scan_curve(busy, {}, w, loose).accidentals_negligible);
}
