#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "chbell/ch_metrics.hpp"
#include "chbell/ingest.hpp"
#include "chbell/powell.hpp"
#include "chbell/quantum_model.hpp"

namespace chbell {

// per_trial draws every trial with sample_trial. aggregated draws the
// per-setting outcome histogram of a whole partition from the equivalent
// multinomial, which has the same distribution at O(1) cost per partition.
enum class SamplingMode { per_trial, aggregated };

struct SimConfig {
    EntangledState state{0.26};
    AngleSet angles;
    double efficiency = 1.0;
    double noise = 0.0;
    std::uint64_t partition_size = 10000; // trials per setting per run
    std::uint64_t runs = 100;
    bool averaging = false;
    std::uint64_t seed = 0;
    SamplingMode sampling = SamplingMode::per_trial;

    void validate() const;
};

struct PredictionResult {
    double mean_ch = 0.0;
    double mean_ratio = 0.0;
    double positivity = 0.0;
    AngleSet angles;
    std::uint64_t replicates = 1;
    std::uint64_t runs = 0; // runs per replicate
};

// One simulated partition: partition_size trials at each setting. Coincidences
// are min(detect_a, detect_b) per trial, singles are detection totals.
CountTable simulate_partition(const SimConfig& config, Rng& rng);

PredictionResult run_experiment(const SimConfig& config);

// Mean of `replicates` independent experiments (independent streams).
PredictionResult run_replicates(const SimConfig& config, std::uint64_t replicates);

struct SearchConfig {
    EntangledState state{0.26};
    double efficiency = 0.75;
    double noise = 0.0;
    std::uint64_t partition_size = 10000;
    std::uint64_t runs = 100;
    bool averaging = false;
    std::uint64_t restarts = 1;
    std::uint64_t seed = 0;
    // a1 is pinned here; a2, b1, b2 are searched. pi/2 is the minimum
    // transmission axis of the HH + rVV state.
    double fixed_a1 = std::numbers::pi / 2.0;
    std::uint64_t replicates = 10;
    SamplingMode sampling = SamplingMode::aggregated;
    PowellOptions powell{};
    unsigned threads = 0; // 0 = hardware concurrency

    void validate() const;
};

struct RestartTrace {
    AngleSet start;
    double start_score = 0.0;
    AngleSet best;
    double best_score = 0.0;
    int iterations = 0;
    std::uint64_t evaluations = 0;
};

struct SearchResult {
    PredictionResult prediction; // replicate average at the incumbent angles
    double best_score = 0.0;     // single-evaluation objective of the incumbent
    std::vector<RestartTrace> restarts;
};

// Mean linear CH of one (runs x partition_size) evaluation, maximized over
// (a2, b1, b2) by Powell from uniform random starts in [0, pi)^3.
SearchResult powell_search(const SearchConfig& config);

enum class SettingOrder { cycle, random, blocks };

struct SynthTiming {
    double period_us = 40.0;  // opening spacing
    double gate_us = 2.0;     // detections fall uniformly in [open, open + gate)
    double delay_1_us = 0.0;  // added to side-1 detection times
    double delay_2_us = 0.0;
    std::optional<std::uint64_t> trials; // default: runs * partition_size * 4
    SettingOrder order = SettingOrder::cycle;
    std::uint64_t block_length = 1000; // openings per block for SettingOrder::blocks
    // 0: exactly one pair emission per trial. Otherwise Poisson(mean_pairs)
    // emissions per trial, each with its own time in the gate.
    double mean_pairs = 0.0;
    double jitter_ns = 0.0; // Gaussian detection-time jitter, per detection
    std::uint64_t start_tag = 6400000; // first opening, ticks (1 ms)

    void validate() const;
};

// Opening records every period plus detection records, in ascending
// timetag order, in the text event format.
std::vector<RawEvent> emit_synthetic_events(const SimConfig& config, const SynthTiming& timing);

} // namespace chbell
