#pragma once

// Single-pass analysis of a compiled event file. Detections are corrected
// for time of flight (corrected = raw - delay of their side), assigned to
// the opening window [open, open + window) of their recorded opening or the
// one before it, and grouped into per-trial buckets. Everything downstream
// (counting modes, partitions, histograms, scans) works on the buckets.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "chbell/ch_metrics.hpp"
#include "chbell/ingest.hpp"

namespace chbell {

struct DelaySet {
    double delay_1_us = 0.0;
    double delay_2_us = 0.0;

    double for_channel(std::uint8_t channel) const { return channel == 1 ? delay_1_us : delay_2_us; }
    friend bool operator==(const DelaySet&, const DelaySet&) = default;
};

enum class CountingMode { full, legacy };

// events: contiguous runs of partition_size detection records (the
// compiled file's own granularity). openings_per_setting: a partition
// closes once every setting has seen partition_size openings.
enum class PartitionRule { events, openings_per_setting };

struct AnalysisParams {
    double window_us = 2.5;
    DelaySet delays;
    std::uint64_t partition_size = 10000;
    bool averaging = false;
    CountingMode mode = CountingMode::full;
    double period_us = 40.0; // spacing between consecutive openings in the file
    PartitionRule partition_rule = PartitionRule::events;

    // Throws std::invalid_argument; windows longer than half the opening
    // period would overlap adjacent trials.
    void validate() const;
};

struct TrialBucket {
    Setting setting = Setting::a1b1;
    double opening_time = 0.0;
    std::uint32_t n1 = 0;
    std::uint32_t n2 = 0;
    std::size_t first_event = 0; // file index of the earliest contributing detection
};

struct WindowAssignment {
    std::vector<TrialBucket> buckets; // ordered by first_event
    std::uint64_t detections = 0;
    std::uint64_t dropped = 0;  // outside every window, or no preceding opening
    std::uint64_t touches = 0;  // inner-loop steps, for complexity checks
};

// Opening time whose window contains the corrected detection time, if any.
std::optional<double> assigned_opening(const CompiledEvent& ev, const AnalysisParams& params);

WindowAssignment assign_windows(const CompiledFile& file, const AnalysisParams& params);

using TrialTotals = std::array<std::uint64_t, kNumSettings>;

CountTable count_full(std::span<const TrialBucket> buckets, const TrialTotals& trials);
CountTable count_legacy(std::span<const TrialBucket> buckets, const TrialTotals& trials);
CountTable count_buckets(std::span<const TrialBucket> buckets, const TrialTotals& trials, CountingMode mode);

TrialTotals total_trials(const CompiledFile& file);

// Whole-dataset counts normalized by the file's total trials.
CountTable whole_table(const CompiledFile& file, const AnalysisParams& params);

enum class Side { one = 1, two = 2 };

// Detections-in-window per trial for one side. By default only trials with
// at least one in-window detection (either side) are tallied; with
// include_empty_openings every opening in the file is.
std::map<std::uint32_t, std::uint64_t> histogram_per_trial(const CompiledFile& file, const AnalysisParams& params,
                                                          Side side, bool include_empty_openings = false);

struct Partition {
    std::size_t first_event = 0;
    std::size_t end_event = 0;
    CountTable table;
    std::optional<ChResult> result; // absent when insufficient
};

struct PartitionAnalysis {
    std::vector<Partition> partitions;
    PositivityReport report;
    CountTable whole;
    std::uint64_t detections = 0;
    std::uint64_t dropped = 0;
    std::uint64_t touches = 0;

    std::uint64_t insufficient() const { return report.total - report.sufficient; }
};

PartitionAnalysis partition_analysis(const CompiledFile& file, const AnalysisParams& params);

enum class DelayObjective { ch_linear, coincidences };

struct DelayGrid {
    std::vector<double> delay_1_us;
    std::vector<double> delay_2_us;
};

struct SurfacePoint {
    double delay_1_us = 0.0;
    double delay_2_us = 0.0;
    double metric = 0.0; // NaN where the whole-dataset table is insufficient
};

struct DelayScan {
    std::vector<SurfacePoint> surface; // delay_1 major, delay_2 minor
    DelaySet best;
    double best_metric = 0.0;
};

DelayScan scan_delays(const CompiledFile& file, const AnalysisParams& params, const DelayGrid& grid,
                      DelayObjective objective = DelayObjective::ch_linear, unsigned threads = 0);

struct ScanRow {
    double value = 0.0; // window (us) or partition size
    PositivityReport report;
    double whole_ch = 0.0;
};

std::vector<ScanRow> scan_windows(const CompiledFile& file, const AnalysisParams& params,
                                  std::span<const double> windows_us, unsigned threads = 0);

std::vector<ScanRow> scan_partitions(const CompiledFile& file, const AnalysisParams& params,
                                     std::span<const std::uint64_t> sizes, unsigned threads = 0);

} // namespace chbell
