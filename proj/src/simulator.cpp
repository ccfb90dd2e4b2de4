#include "chbell/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "chbell/parallel.hpp"

namespace chbell {

namespace {

// Stream identifiers for derive_stream.
constexpr std::uint64_t kStartStream = 0x5354415254ULL;
constexpr std::uint64_t kSearchStream = 0x534541524348ULL;
constexpr std::uint64_t kReplicateSeed = 0x5245504cULL;
constexpr std::uint64_t kSynthStream = 0x53594e5448ULL;

std::array<OutcomeDistribution, kNumSettings> setting_distributions(const SimConfig& c) {
    std::array<OutcomeDistribution, kNumSettings> out;
    for (Setting s : kAllSettings) {
        const auto probs = joint_detection_probabilities(c.state, c.angles.alpha(s), c.angles.beta(s));
        out[index(s)] = outcome_distribution(probs, c.efficiency, c.noise);
    }
    return out;
}

SettingCounts counts_from_histogram(const std::array<std::array<std::uint64_t, 3>, 3>& h, std::uint64_t trials) {
    SettingCounts row;
    row.trials = trials;
    for (std::uint64_t a = 0; a < 3; ++a)
        for (std::uint64_t b = 0; b < 3; ++b) {
            row.singles_a += a * h[a][b];
            row.singles_b += b * h[a][b];
            row.coincidences += std::min(a, b) * h[a][b];
        }
    return row;
}

// Multinomial(n, dist) by successive conditional binomials.
std::array<std::array<std::uint64_t, 3>, 3> draw_histogram(const OutcomeDistribution& dist, std::uint64_t n, Rng& rng) {
    std::array<std::array<std::uint64_t, 3>, 3> h{};
    double remaining_mass = 1.0;
    std::uint64_t remaining = n;
    for (int k = 0; k < 9 && remaining > 0; ++k) {
        const int a = k / 3;
        const int b = k % 3;
        if (k == 8) {
            h[a][b] = remaining;
            break;
        }
        const double p = dist[a][b];
        const double q = remaining_mass > 0.0 ? std::clamp(p / remaining_mass, 0.0, 1.0) : 1.0;
        std::uint64_t x = 0;
        if (q >= 1.0) {
            x = remaining;
        } else if (q > 0.0) {
            std::binomial_distribution<std::int64_t> binom(static_cast<std::int64_t>(remaining), q);
            x = static_cast<std::uint64_t>(binom(rng));
        }
        h[a][b] = x;
        remaining -= x;
        remaining_mass -= p;
    }
    return h;
}

CountTable simulate_partition_with(const SimConfig& c, const std::array<OutcomeDistribution, kNumSettings>& dists,
                                   Rng& rng) {
    CountTable table;
    if (c.sampling == SamplingMode::aggregated) {
        for (Setting s : kAllSettings)
            table[s] = counts_from_histogram(draw_histogram(dists[index(s)], c.partition_size, rng), c.partition_size);
        return table;
    }
    for (Setting s : kAllSettings) {
        const auto probs = joint_detection_probabilities(c.state, c.angles.alpha(s), c.angles.beta(s));
        auto& row = table[s];
        row.trials = c.partition_size;
        for (std::uint64_t t = 0; t < c.partition_size; ++t) {
            const auto o = sample_trial(probs, c.efficiency, c.noise, rng);
            row.singles_a += o.detect_a;
            row.singles_b += o.detect_b;
            row.coincidences += std::min(o.detect_a, o.detect_b);
        }
    }
    return table;
}

struct RunSummary {
    double sum_ch = 0.0;
    double sum_ratio = 0.0;
    std::uint64_t finite_ratios = 0;
    std::uint64_t positive = 0;
    std::uint64_t runs = 0;
};

RunSummary experiment(const SimConfig& c, std::uint64_t stream) {
    const auto dists = setting_distributions(c);
    RunSummary sum;
    for (std::uint64_t run = 0; run < c.runs; ++run) {
        Rng rng = derive_stream(c.seed, stream, run);
        const auto r = ch_linear(simulate_partition_with(c, dists, rng), c.averaging);
        sum.sum_ch += r.ch_linear;
        if (std::isfinite(r.ch_ratio)) {
            sum.sum_ratio += r.ch_ratio;
            ++sum.finite_ratios;
        }
        if (r.violated)
            ++sum.positive;
        ++sum.runs;
    }
    return sum;
}

PredictionResult summarize(const SimConfig& c, const std::vector<RunSummary>& reps) {
    PredictionResult out;
    out.angles = c.angles.canonical();
    out.replicates = reps.size();
    out.runs = c.runs;
    double ch = 0.0, ratio = 0.0, pos = 0.0;
    for (const auto& r : reps) {
        ch += r.sum_ch / static_cast<double>(r.runs);
        ratio += r.finite_ratios ? r.sum_ratio / static_cast<double>(r.finite_ratios)
                                 : std::numeric_limits<double>::quiet_NaN();
        pos += static_cast<double>(r.positive) / static_cast<double>(r.runs);
    }
    const double n = static_cast<double>(reps.size());
    out.mean_ch = ch / n;
    out.mean_ratio = ratio / n;
    out.positivity = pos / n;
    return out;
}

// Mean linear CH of one evaluation, drawing runs from a single stream.
double search_objective(const SimConfig& c, Rng& rng) {
    const auto dists = setting_distributions(c);
    double sum = 0.0;
    for (std::uint64_t run = 0; run < c.runs; ++run)
        sum += ch_linear(simulate_partition_with(c, dists, rng), c.averaging).ch_linear;
    return sum / static_cast<double>(c.runs);
}

} // namespace

void SimConfig::validate() const {
    require_probability(efficiency, "efficiency");
    require_probability(noise, "noise");
    if (partition_size < 1)
        throw std::invalid_argument("partition size must be at least 1");
    if (runs < 1)
        throw std::invalid_argument("runs must be at least 1");
    if (!angles.finite())
        throw std::invalid_argument("analyzer angles must be finite");
}

CountTable simulate_partition(const SimConfig& config, Rng& rng) {
    config.validate();
    return simulate_partition_with(config, setting_distributions(config), rng);
}

PredictionResult run_experiment(const SimConfig& config) { return run_replicates(config, 1); }

PredictionResult run_replicates(const SimConfig& config, std::uint64_t replicates) {
    config.validate();
    if (replicates < 1)
        throw std::invalid_argument("replicates must be at least 1");
    std::vector<RunSummary> reps(replicates);
    parallel_for(replicates, 0, [&](std::size_t k) { reps[k] = experiment(config, k); });
    return summarize(config, reps);
}

void SearchConfig::validate() const {
    require_probability(efficiency, "efficiency");
    require_probability(noise, "noise");
    if (partition_size < 1 || runs < 1)
        throw std::invalid_argument("partition size and runs must be at least 1");
    if (restarts < 1)
        throw std::invalid_argument("restarts must be at least 1");
    if (replicates < 1)
        throw std::invalid_argument("replicates must be at least 1");
    if (!std::isfinite(fixed_a1))
        throw std::invalid_argument("fixed a1 must be finite");
}

SearchResult powell_search(const SearchConfig& config) {
    config.validate();

    SimConfig base;
    base.state = config.state;
    base.efficiency = config.efficiency;
    base.noise = config.noise;
    base.partition_size = config.partition_size;
    base.runs = config.runs;
    base.averaging = config.averaging;
    base.sampling = config.sampling;

    auto angles_of = [&](std::span<const double> x) { return AngleSet{config.fixed_a1, x[0], x[1], x[2]}; };

    std::vector<RestartTrace> traces(config.restarts);
    parallel_for(config.restarts, config.threads, [&](std::size_t i) {
        Rng start_rng = derive_stream(config.seed, kStartStream, i);
        std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
        std::vector<double> start = {angle(start_rng), angle(start_rng), angle(start_rng)};

        Rng rng = derive_stream(config.seed, kSearchStream, i);
        SimConfig c = base;
        bool first = true;
        RestartTrace& trace = traces[i];
        auto objective = [&](std::span<const double> x) {
            c.angles = angles_of(x);
            const double v = search_objective(c, rng);
            if (first) {
                trace.start = c.angles.canonical();
                trace.start_score = v;
                first = false;
            }
            return v;
        };
        const auto res = powell_maximize(objective, start, config.powell);
        trace.best = angles_of(res.x).canonical();
        trace.best_score = res.value;
        trace.iterations = res.iterations;
        trace.evaluations = res.evaluations;
    });

    std::size_t incumbent = 0;
    for (std::size_t i = 1; i < traces.size(); ++i)
        if (traces[i].best_score > traces[incumbent].best_score)
            incumbent = i;

    SimConfig final_config = base;
    final_config.angles = traces[incumbent].best;
    final_config.seed = mix64(config.seed ^ kReplicateSeed);

    SearchResult out;
    out.prediction = run_replicates(final_config, config.replicates);
    out.best_score = traces[incumbent].best_score;
    out.restarts = std::move(traces);
    return out;
}

void SynthTiming::validate() const {
    if (!(period_us > 0.0) || !std::isfinite(period_us))
        throw std::invalid_argument("opening period must be positive");
    if (!(gate_us > 0.0) || gate_us > period_us)
        throw std::invalid_argument("gate must be positive and no longer than the period");
    if (!std::isfinite(delay_1_us) || !std::isfinite(delay_2_us))
        throw std::invalid_argument("delays must be finite");
    if (!(mean_pairs >= 0.0) || !std::isfinite(mean_pairs))
        throw std::invalid_argument("mean pairs per trial must be nonnegative");
    if (!(jitter_ns >= 0.0) || !std::isfinite(jitter_ns))
        throw std::invalid_argument("jitter must be nonnegative");
    if (order == SettingOrder::blocks && block_length < 1)
        throw std::invalid_argument("block length must be at least 1");
}

std::vector<RawEvent> emit_synthetic_events(const SimConfig& config, const SynthTiming& timing) {
    config.validate();
    timing.validate();

    const std::uint64_t trials = timing.trials ? *timing.trials : config.runs * config.partition_size * kNumSettings;
    const double tick_per_us = kTicksPerMicrosecond;
    const auto period_ticks = static_cast<std::uint64_t>(std::llround(timing.period_us * tick_per_us));
    const double delay_ticks[2] = {timing.delay_1_us * tick_per_us, timing.delay_2_us * tick_per_us};

    std::array<JointProbabilities, kNumSettings> probs;
    for (Setting s : kAllSettings)
        probs[index(s)] = joint_detection_probabilities(config.state, config.angles.alpha(s), config.angles.beta(s));

    Rng rng = derive_stream(config.seed, kSynthStream);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> pick_setting(0, kNumSettings - 1);
    std::normal_distribution<double> jitter(0.0, timing.jitter_ns * 1e-3);
    std::poisson_distribution<int> pairs(timing.mean_pairs > 0.0 ? timing.mean_pairs : 1.0);

    std::vector<RawEvent> events;
    auto detection = [&](std::uint64_t open, Setting s, int side, double offset_us) {
        double t = static_cast<double>(open) + offset_us * tick_per_us + delay_ticks[side - 1];
        if (timing.jitter_ns > 0.0)
            t += jitter(rng) * tick_per_us;
        const auto tag = static_cast<std::uint64_t>(std::max(0.0, std::floor(t)));
        events.push_back({tag, s, side == 1 ? EventKind::detection_side1 : EventKind::detection_side2});
    };

    for (std::uint64_t t = 0; t < trials; ++t) {
        Setting s = Setting::a1b1;
        switch (timing.order) {
        case SettingOrder::cycle: s = static_cast<Setting>(t % kNumSettings); break;
        case SettingOrder::random: s = static_cast<Setting>(pick_setting(rng)); break;
        case SettingOrder::blocks: s = static_cast<Setting>((t / timing.block_length) % kNumSettings); break;
        }
        const std::uint64_t open = timing.start_tag + t * period_ticks;
        events.push_back({open, s, EventKind::opening});

        const int emissions = timing.mean_pairs > 0.0 ? pairs(rng) : 1;
        for (int e = 0; e < emissions; ++e) {
            const auto o = sample_trial(probs[index(s)], config.efficiency, 0.0, rng);
            const double when = unit(rng) * timing.gate_us;
            if (o.detect_a)
                detection(open, s, 1, when);
            if (o.detect_b)
                detection(open, s, 2, when);
        }
        if (config.noise > 0.0) {
            for (int side = 1; side <= 2; ++side)
                if (unit(rng) < config.noise)
                    detection(open, s, side, unit(rng) * timing.gate_us);
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const RawEvent& a, const RawEvent& b) { return a.timetag < b.timetag; });
    return events;
}

} // namespace chbell
