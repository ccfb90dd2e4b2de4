#include "doctest.h"

#include <cmath>
#include <set>
#include <stdexcept>

#include "chbell/analysis.hpp"
#include "chbell/powell.hpp"
#include "chbell/simulator.hpp"
#include "synth_fixture.hpp"

using namespace chbell;

namespace {

constexpr AngleSet kOptimal{1.570796, 2.151407, 1.681738, 1.251473};

SimConfig table_config(double eff) {
    SimConfig c;
    c.state = EntangledState(0.26);
    c.angles = kOptimal;
    c.efficiency = eff;
    c.partition_size = 10000;
    c.runs = 100;
    c.seed = 99;
    return c;
}

double analytic_ch(const EntangledState& st, const AngleSet& a, double eff) {
    double ch = 0;
    for (Setting s : kAllSettings) {
        const auto p = joint_detection_probabilities(st, a.alpha(s), a.beta(s));
        ch += (s == Setting::a2b2 ? -1.0 : 1.0) * eff * eff * p.p_cc;
    }
    const auto p11 = joint_detection_probabilities(st, a.a1, a.b1);
    return ch - eff * p11.p_a() - eff * p11.p_b();
}

} // namespace

TEST_CASE("configs are validated") {
    auto c = table_config(0.75);
    c.efficiency = 1.5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = table_config(0.75);
    c.runs = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = table_config(0.75);
    c.partition_size = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    SearchConfig s;
    s.restarts = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("simulated partitions carry the configured trials") {
    auto c = table_config(1.0);
    c.partition_size = 500;
    Rng rng(1);
    const auto t = simulate_partition(c, rng);
    for (const auto& row : t.rows) {
        CHECK(row.trials == 500);
        CHECK(row.coincidences <= std::min(row.singles_a, row.singles_b));
        CHECK(row.singles_a <= 500);
    }
}

TEST_CASE("same seed gives identical results") {
    auto c = table_config(0.75);
    c.runs = 10;
    for (auto mode : {SamplingMode::per_trial, SamplingMode::aggregated}) {
        c.sampling = mode;
        const auto a = run_experiment(c);
        const auto b = run_experiment(c);
        CHECK(a.mean_ch == b.mean_ch);
        CHECK(a.mean_ratio == b.mean_ratio);
        CHECK(a.positivity == b.positivity);
        c.seed += 1;
        CHECK(run_experiment(c).mean_ch != a.mean_ch);
        c.seed -= 1;
    }
}

TEST_CASE("per-trial and aggregated sampling agree in distribution") {
    auto c = table_config(0.75);
    c.runs = 60;
    c.noise = 0.001;
    c.sampling = SamplingMode::per_trial;
    const auto a = run_replicates(c, 2);
    c.sampling = SamplingMode::aggregated;
    const auto b = run_replicates(c, 20);
    // noise adds about 0.001 to each singles term
    const double expected = analytic_ch(c.state, c.angles, 0.75) - 2 * 0.001;
    // per-run sd is about 0.004
    CHECK(std::abs(a.mean_ch - b.mean_ch) < 5 * 0.004 / std::sqrt(120.0));
    CHECK(std::abs(b.mean_ch - expected) < 0.002);
    CHECK(std::abs(a.positivity - b.positivity) < 0.15);
}

TEST_CASE("efficiency one gives full positivity") {
    const auto r = run_experiment(table_config(1.0));
    CHECK(r.positivity == 1.0);
    CHECK(r.mean_ch == doctest::Approx(0.0562).epsilon(0.02));
}

TEST_CASE("noise degrades positivity") {
    auto c = table_config(0.75);
    c.sampling = SamplingMode::aggregated;
    double prev = 2.0;
    for (double noise : {0.0, 0.002, 0.005}) {
        c.noise = noise;
        const double p = run_replicates(c, 4).positivity;
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("powell finds the maximum of a smooth function") {
    const Objective f = [](std::span<const double> x) {
        return -std::pow(x[0] - 1.0, 2) - 2.0 * std::pow(x[1] + 0.5, 2) - 0.5 * std::pow(x[0] - x[1] - x[2], 2);
    };
    const std::vector<double> start{0.0, 0.0, 0.0};
    const auto r = powell_maximize(f, start);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.x[1] == doctest::Approx(-0.5).epsilon(1e-3));
    CHECK(r.x[2] == doctest::Approx(1.5).epsilon(1e-3));
    CHECK(r.value >= f(start));
}

TEST_CASE("powell returns the best point it evaluated") {
    std::uint64_t calls = 0;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.05);
    double best_seen = -1e300;
    const Objective f = [&](std::span<const double> x) {
        ++calls;
        const double v = -x[0] * x[0] - x[1] * x[1] + noise(rng);
        best_seen = std::max(best_seen, v);
        return v;
    };
    PowellOptions o;
    o.max_iterations = 5;
    const auto r = powell_maximize(f, std::vector<double>{2.0, -1.0}, o);
    CHECK(r.value == best_seen);
    CHECK(r.evaluations == calls);
}

TEST_CASE("search is deterministic and never worse than its starts") {
    SearchConfig s;
    s.runs = 10;
    s.partition_size = 10000;
    s.restarts = 2;
    s.replicates = 2;
    s.seed = 17;
    s.powell.max_iterations = 6;
    const auto a = powell_search(s);
    const auto b = powell_search(s);
    CHECK(a.prediction.mean_ch == b.prediction.mean_ch);
    CHECK(a.prediction.angles == b.prediction.angles);
    REQUIRE(a.restarts.size() == 2);
    for (const auto& r : a.restarts) {
        CHECK(r.best_score >= r.start_score);
        CHECK(a.best_score >= r.best_score);
    }
    CHECK(a.prediction.angles.a1 == doctest::Approx(std::numbers::pi / 2));
    CHECK(a.prediction.replicates == 2);
}

TEST_CASE("searched CH rises with efficiency") {
    double prev = -1.0;
    for (double eff : {0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 1.00}) {
        SearchConfig s;
        s.efficiency = eff;
        s.runs = 20;
        s.restarts = 2;
        s.replicates = 10;
        s.seed = 5;
        const auto r = powell_search(s);
        MESSAGE("efficiency " << eff << " mean CH " << r.prediction.mean_ch);
        CHECK(r.prediction.mean_ch > prev);
        prev = r.prediction.mean_ch;
    }
}

TEST_CASE("synthetic stream shapes") {
    auto c = fixture::sim(1.0, 1, 40);
    c.state = EntangledState(0.0);
    c.angles = {0, 0, 0, 0};
    SynthTiming t;
    t.trials = 10;
    const auto ev = emit_synthetic_events(c, t);
    std::size_t openings = 0;
    std::uint64_t last_open = 0;
    for (const auto& e : ev) {
        if (e.is_opening()) {
            ++openings;
            last_open = e.timetag;
        } else {
            CHECK(e.timetag >= last_open);
            CHECK(e.timetag < last_open + 2 * 6400);
        }
    }
    CHECK(openings == 10);
    CHECK(ev.size() == 30);
    CHECK(time_ordered(ev));

    t.trials = 0;
    CHECK(emit_synthetic_events(c, t).empty());

    t.trials = 4000;
    t.order = SettingOrder::blocks;
    t.block_length = 100;
    const auto blocks = emit_synthetic_events(c, t);
    std::set<Setting> first_block;
    for (const auto& e : blocks)
        if (e.is_opening() && e.timetag < t.start_tag + 100 * 256000)
            first_block.insert(e.setting);
    CHECK(first_block.size() == 1);
}

TEST_CASE("pipeline recovers the model coincidence rates") {
    auto c = fixture::sim(1.0, 20000, 41);
    c.state = EntangledState::maximal();
    c.angles = {0.0, 0.0, 0.0, 0.0};
    const auto f = fixture::compiled(c);
    const auto table = whole_table(f, AnalysisParams{});
    for (Setting s : kAllSettings) {
        const double p = joint_detection_probabilities(c.state, c.angles.alpha(s), c.angles.beta(s)).p_cc;
        const double n = static_cast<double>(table[s].trials);
        const double rate = static_cast<double>(table[s].coincidences) / n;
        CHECK(std::abs(rate - p) <= 3 * std::sqrt(p * (1 - p) / n));
    }
}
