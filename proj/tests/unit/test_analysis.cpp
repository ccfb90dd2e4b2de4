#include "doctest.h"

#include <cmath>
#include <numeric>

#include "chbell/analysis.hpp"
#include "stats.hpp"
#include "synth_fixture.hpp"

using namespace chbell;

namespace {

constexpr double us = 1e6; // ps

CompiledEvent det(double raw_us, double open_us, std::uint8_t channel, Setting s = Setting::a1b1) {
    CompiledEvent e;
    e.raw_time = raw_us * us;
    e.pockels_time = open_us * us;
    e.channel = channel;
    e.setting = s;
    return e;
}

AnalysisParams params(double window = 2.5, double d1 = 0.0, double d2 = 0.0) {
    AnalysisParams p;
    p.window_us = window;
    p.delays = {d1, d2};
    return p;
}

TrialTotals totals(std::uint64_t n) { return {n, n, n, n}; }

} // namespace

TEST_CASE("window boundaries") {
    const auto p = params();
    CHECK(assigned_opening(det(101.0, 100.0, 1), p) == 100.0 * us);
    CHECK_FALSE(assigned_opening(det(103.0, 100.0, 1), p));
    CHECK(assigned_opening(det(100.0, 100.0, 1), p) == 100.0 * us);
    CHECK_FALSE(assigned_opening(det(102.5, 100.0, 1), p)); // half open

    // delay moves the detection before its recorded opening
    const auto d = params(2.5, 0.5, 0.0);
    CHECK_FALSE(assigned_opening(det(100.0, 100.0, 1), d)); // 0.5 before, previous window long closed
    CHECK(assigned_opening(det(100.0, 100.0, 2), d) == 100.0 * us);
    const auto far = params(2.5, 39.0, 0.0);
    CHECK(assigned_opening(det(100.0, 100.0, 1), far) == 60.0 * us); // 1 us into the previous window
    const auto edge = params(2.5, 40.0, 0.0);
    CHECK(assigned_opening(det(100.0, 100.0, 1), edge) == 60.0 * us);
    const auto out = params(2.5, 37.5, 0.0);
    CHECK_FALSE(assigned_opening(det(100.0, 100.0, 1), out)); // 2.5 us after previous: outside

    CompiledEvent orphan;
    CHECK_FALSE(assigned_opening(orphan, p));
}

TEST_CASE("window longer than half the period is rejected") {
    CHECK_THROWS_AS(params(20.5).validate(), std::invalid_argument);
    CHECK_NOTHROW(params(20.0).validate());
    CHECK_THROWS_AS(params(0.0).validate(), std::invalid_argument);
    CompiledFile f;
    CHECK_THROWS_AS(assign_windows(f, params(25.0)), std::invalid_argument);
}

TEST_CASE("full and legacy counting of single buckets") {
    const std::vector<TrialBucket> b{{Setting::a1b1, 0.0, 2, 1, 0}};
    auto full = count_full(b, totals(1));
    auto legacy = count_legacy(b, totals(1));
    CHECK(full[Setting::a1b1] == SettingCounts{2, 1, 1, 1});
    CHECK(legacy[Setting::a1b1] == SettingCounts{1, 1, 1, 1});

    const std::vector<TrialBucket> b3{{Setting::a2b2, 0.0, 3, 3, 0}, {Setting::a2b2, 40.0, 1, 0, 1},
                                      {Setting::a2b2, 80.0, 0, 0, 2}};
    full = count_full(b3, totals(3));
    legacy = count_legacy(b3, totals(3));
    CHECK(full[Setting::a2b2] == SettingCounts{4, 3, 3, 3});
    CHECK(legacy[Setting::a2b2] == SettingCounts{2, 1, 1, 3});
}

TEST_CASE("buckets group detections of the same trial") {
    CompiledFile f;
    f.events = {det(100.5, 100.0, 1), det(100.7, 100.0, 2), det(101.0, 100.0, 1), det(140.2, 140.0, 2),
                det(145.0, 140.0, 1)};
    f.total_trials = {2, 0, 0, 0};
    const auto wa = assign_windows(f, params());
    REQUIRE(wa.buckets.size() == 2);
    CHECK(wa.buckets[0].n1 == 2);
    CHECK(wa.buckets[0].n2 == 1);
    CHECK(wa.buckets[1].n2 == 1);
    CHECK(wa.buckets[1].first_event == 3);
    CHECK(wa.dropped == 1);
    CHECK(wa.detections == 5);
}

TEST_CASE("legacy never exceeds full, and they agree on clean data") {
    SynthTiming t;
    t.mean_pairs = 1.5;
    auto c = fixture::sim(0.8, 2000, 3);
    c.noise = 0.02;
    const auto noisy = fixture::compiled(c, t);
    auto p = params();
    p.partition_size = 500;
    p.mode = CountingMode::full;
    const auto full = partition_analysis(noisy, p);
    p.mode = CountingMode::legacy;
    const auto legacy = partition_analysis(noisy, p);
    REQUIRE(full.partitions.size() == legacy.partitions.size());
    bool strictly_less = false;
    for (std::size_t k = 0; k < full.partitions.size(); ++k) {
        for (Setting s : kAllSettings) {
            const auto& f = full.partitions[k].table[s];
            const auto& l = legacy.partitions[k].table[s];
            REQUIRE(l.singles_a <= f.singles_a);
            REQUIRE(l.singles_b <= f.singles_b);
            REQUIRE(l.coincidences <= f.coincidences);
            strictly_less = strictly_less || l.singles_a < f.singles_a;
        }
    }
    CHECK(strictly_less);

    const auto clean = fixture::compiled(fixture::sim(0.9, 2000, 4));
    p.mode = CountingMode::full;
    const auto a = whole_table(clean, p);
    p.mode = CountingMode::legacy;
    CHECK(whole_table(clean, p) == a);
}

TEST_CASE("partitions add up to the whole dataset and lose no detection") {
    SynthTiming t;
    t.order = SettingOrder::random;
    t.mean_pairs = 1.2;
    t.delay_1_us = 0.8;
    auto c = fixture::sim(0.75, 1500, 5);
    c.noise = 0.05;
    const auto f = fixture::compiled(c, t);
    for (auto rule : {PartitionRule::events, PartitionRule::openings_per_setting}) {
        for (auto mode : {CountingMode::full, CountingMode::legacy}) {
            for (std::uint64_t size : {1ull, 37ull, 400ull, 1000000ull}) {
                auto p = params(2.5, 0.3, 0.0);
                p.mode = mode;
                p.partition_rule = rule;
                p.partition_size = size;
                const auto pa = partition_analysis(f, p);
                CHECK(pa.whole == whole_table(f, p));
                if (mode == CountingMode::full) {
                    std::uint64_t singles = 0;
                    for (const auto& part : pa.partitions)
                        for (const auto& row : part.table.rows)
                            singles += row.singles_a + row.singles_b;
                    CHECK(singles + pa.dropped == f.num_detection_events());
                }
                std::uint64_t insufficient = 0;
                for (const auto& part : pa.partitions)
                    insufficient += !part.result.has_value();
                CHECK(pa.insufficient() == insufficient);
            }
        }
    }
}

TEST_CASE("event partitions hold partition_size detection records") {
    const auto f = fixture::compiled(fixture::sim(1.0, 1000, 6));
    auto p = params();
    p.partition_size = 300;
    const auto pa = partition_analysis(f, p);
    const auto n = f.num_detection_events();
    CHECK(pa.partitions.size() == (n + 299) / 300);
    for (std::size_t k = 0; k + 1 < pa.partitions.size(); ++k)
        CHECK(pa.partitions[k].end_event - pa.partitions[k].first_event == 300);
    CHECK(pa.partitions.back().end_event == n);
}

TEST_CASE("single partition equals the direct metric") {
    const auto f = fixture::compiled(fixture::sim(1.0, 3000, 7));
    auto p = params();
    p.partition_size = 1000000000;
    const auto pa = partition_analysis(f, p);
    REQUIRE(pa.partitions.size() == 1);
    REQUIRE(pa.partitions[0].result);
    CHECK(pa.partitions[0].result->ch_linear == ch_linear(whole_table(f, p), false).ch_linear);
}

TEST_CASE("openings rule closes partitions on per-setting openings") {
    const auto f = fixture::compiled(fixture::sim(1.0, 2000, 8));
    auto p = params();
    p.partition_rule = PartitionRule::openings_per_setting;
    p.partition_size = 500;
    const auto pa = partition_analysis(f, p);
    CHECK(pa.partitions.size() == 4);
    // boundaries fall on detection records, so a few extra openings can slip in
    for (const auto& part : pa.partitions)
        for (const auto& row : part.table.rows) {
            CHECK(row.trials >= 495);
            CHECK(row.trials <= 510);
        }
}

TEST_CASE("single pass scales linearly") {
    std::vector<double> sizes, touches;
    for (std::uint64_t n : {2000ull, 4000ull, 8000ull, 16000ull, 32000ull}) {
        SynthTiming t;
        t.mean_pairs = 1.0;
        auto c = fixture::sim(0.8, n, 9);
        c.noise = 0.1;
        const auto f = fixture::compiled(c, t);
        auto p = params();
        p.partition_size = 1000;
        const auto pa = partition_analysis(f, p);
        sizes.push_back(static_cast<double>(f.num_detection_events()));
        touches.push_back(static_cast<double>(pa.touches));
        CHECK(pa.touches <= 8 * f.num_detection_events());
    }
    CHECK(oracle::linear_r2(sizes, touches) > 0.99);
}

TEST_CASE("histogram of a single-detection stream") {
    auto c = fixture::sim(1.0, 250, 10);
    c.state = EntangledState(0.0);
    c.angles = {0, 0, 0, 0};
    const auto f = fixture::compiled(c);
    const auto h = histogram_per_trial(f, params(), Side::one);
    REQUIRE(h.size() == 1);
    CHECK(h.at(1) == 1000);
    CHECK(histogram_per_trial(f, params(), Side::one, true) == h);
}

TEST_CASE("histogram of a Poisson stream") {
    const double lambda = 0.9;
    auto c = fixture::sim(1.0, 10000, 11);
    c.state = EntangledState(0.0);
    c.angles = {0, 0, 0, 0}; // side 1 detects every emitted pair
    SynthTiming t;
    t.mean_pairs = lambda;
    const auto f = fixture::compiled(c, t);
    const auto h = histogram_per_trial(f, params(), Side::one, true);
    const double n = 40000;
    double total = 0, chi2 = 0;
    int bins = 0;
    for (unsigned k = 0; k <= 4; ++k) {
        const double observed = h.count(k) ? static_cast<double>(h.at(k)) : 0.0;
        const double expected = n * oracle::poisson_pmf(k, lambda);
        total += observed;
        chi2 += (observed - expected) * (observed - expected) / expected;
        ++bins;
    }
    // tail beyond 4 lumped
    const double tail_obs = n - total;
    double tail_p = 1.0;
    for (unsigned k = 0; k <= 4; ++k)
        tail_p -= oracle::poisson_pmf(k, lambda);
    chi2 += (tail_obs - n * tail_p) * (tail_obs - n * tail_p) / (n * tail_p);
    // 5 degrees of freedom; 99.9% point is 20.5
    CHECK(chi2 < 20.5);
    CHECK(bins == 5);
    // without empty openings only trials with a detection remain
    const auto busy = histogram_per_trial(f, params(), Side::one);
    CHECK(busy.count(0) == 0);
}

TEST_CASE("injected delays are recovered") {
    SynthTiming t;
    t.gate_us = 2.0;
    t.delay_1_us = 1.3;
    t.delay_2_us = 0.7;
    const auto f = fixture::compiled(fixture::sim(1.0, 4000, 12), t);
    DelayGrid g;
    for (int k = 0; k <= 20; ++k) {
        g.delay_1_us.push_back(0.1 * k);
        g.delay_2_us.push_back(0.1 * k);
    }
    for (auto obj : {DelayObjective::ch_linear, DelayObjective::coincidences}) {
        const auto scan = scan_delays(f, params(2.0), g, obj);
        CHECK(scan.surface.size() == 441);
        CHECK(std::abs(scan.best.delay_1_us - 1.3) < 0.1 + 1e-9);
        CHECK(std::abs(scan.best.delay_2_us - 0.7) < 0.1 + 1e-9);
    }
}

TEST_CASE("surface translates with a common shift") {
    SynthTiming t;
    t.delay_1_us = 1.0;
    t.delay_2_us = 0.5;
    const auto a = fixture::compiled(fixture::sim(1.0, 1000, 13), t);
    t.delay_1_us += 0.5;
    t.delay_2_us += 0.5;
    const auto b = fixture::compiled(fixture::sim(1.0, 1000, 13), t);
    DelayGrid ga, gb;
    for (int k = 0; k <= 8; ++k) {
        ga.delay_1_us.push_back(0.25 * k);
        ga.delay_2_us.push_back(0.25 * k);
        gb.delay_1_us.push_back(0.25 * k + 0.5);
        gb.delay_2_us.push_back(0.25 * k + 0.5);
    }
    const auto sa = scan_delays(a, params(2.0), ga);
    const auto sb = scan_delays(b, params(2.0), gb);
    REQUIRE(sa.surface.size() == sb.surface.size());
    for (std::size_t k = 0; k < sa.surface.size(); ++k) {
        if (std::isnan(sa.surface[k].metric))
            REQUIRE(std::isnan(sb.surface[k].metric));
        else
            REQUIRE(sa.surface[k].metric == doctest::Approx(sb.surface[k].metric).epsilon(1e-12));
    }
    CHECK(sb.best.delay_1_us == doctest::Approx(sa.best.delay_1_us + 0.5));
}

TEST_CASE("window and partition scans") {
    const auto f = fixture::compiled(fixture::sim(1.0, 2000, 14));
    const std::vector<double> windows{0.5, 1.0, 2.0, 2.5};
    auto p = params();
    p.partition_size = 400;
    const auto rows = scan_windows(f, p, windows);
    REQUIRE(rows.size() == 4);
    CHECK(rows[3].report.positivity == partition_analysis(f, p).report.positivity);
    const std::vector<double> bad{1.0, 30.0};
    CHECK_THROWS_AS(scan_windows(f, p, bad), std::invalid_argument);

    const std::vector<std::uint64_t> sizes{100, 1000};
    const auto prow = scan_partitions(f, p, sizes);
    REQUIRE(prow.size() == 2);
    CHECK(prow[0].report.total > prow[1].report.total);
}
