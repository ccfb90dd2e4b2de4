#pragma once

// Variable-window coincidence scanning. In-window detections are collected
// per setting and side, paired greedily within a window W, and the slope
// dC/dW beyond a knee is used to judge whether accidental coincidences
// matter.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "chbell/analysis.hpp"
#include "chbell/ingest.hpp"

namespace chbell {

struct SideLists {
    std::vector<double> side1; // corrected detection times, ps, ascending
    std::vector<double> side2;
};

using EventLists = std::array<SideLists, kNumSettings>;

// Keeps detections whose corrected time falls inside their opening
// (window = the full opening duration) and sorts each list.
EventLists prepare_event_lists(const CompiledFile& file, const DelaySet& delays, double gate_us = 2.0,
                               double period_us = 40.0);

// Earliest-first two-pointer matching of sorted lists: a pair matches when
// |t_a - t_b| <= window, each event is used at most once. O(n_a + n_b).
std::uint64_t greedy_coincidences(std::span<const double> a, std::span<const double> b, double window);

struct CurveOptions {
    double knee_ns = 500.0;
    double slope_fraction = 0.1; // negligible when dC/dW <= fraction * C/W past the knee
    double gate_us = 2.0;
    double period_us = 40.0;
    bool averaging = false;
};

struct CoincidenceCurve {
    std::vector<double> windows_ns;
    std::array<std::vector<std::uint64_t>, kNumSettings> counts;
    std::array<std::vector<double>, kNumSettings> slopes; // counts per ns
    std::vector<double> ch;
    bool accidentals_negligible = true;
};

CoincidenceCurve scan_curve(const EventLists& lists, const TrialTotals& trials, std::span<const double> windows_ns,
                            const CurveOptions& options = {});

CoincidenceCurve scan_curve(const CompiledFile& file, const DelaySet& delays, std::span<const double> windows_ns,
                            const CurveOptions& options = {});

} // namespace chbell
