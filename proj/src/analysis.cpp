#include "chbell/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

#include "chbell/parallel.hpp"

namespace chbell {

namespace {

constexpr double kPsPerUs = 1e6;

} // namespace

void AnalysisParams::validate() const {
    if (!(window_us > 0.0) || !std::isfinite(window_us))
        throw std::invalid_argument("window must be positive");
    if (!(period_us > 0.0) || !std::isfinite(period_us))
        throw std::invalid_argument("opening period must be positive");
    if (window_us > period_us / 2.0)
        throw std::invalid_argument("window " + std::to_string(window_us) + " us exceeds half the opening period (" +
                                    std::to_string(period_us / 2.0) + " us)");
    if (!std::isfinite(delays.delay_1_us) || !std::isfinite(delays.delay_2_us))
        throw std::invalid_argument("delays must be finite");
    if (partition_size < 1)
        throw std::invalid_argument("partition size must be at least 1");
}

std::optional<double> assigned_opening(const CompiledEvent& ev, const AnalysisParams& p) {
    if (!ev.has_opening())
        return std::nullopt;
    const double corrected = ev.raw_time - p.delays.for_channel(ev.channel) * kPsPerUs;
    const double window = p.window_us * kPsPerUs;
    const double open = ev.pockels_time;
    if (corrected >= open)
        return corrected < open + window ? std::optional<double>(open) : std::nullopt;
    const double previous = open - p.period_us * kPsPerUs;
    if (corrected >= previous && corrected < previous + window)
        return previous;
    return std::nullopt;
}

WindowAssignment assign_windows(const CompiledFile& file, const AnalysisParams& params) {
    params.validate();
    const double horizon = (2.0 * params.period_us + params.window_us + std::abs(params.delays.delay_1_us) +
                            std::abs(params.delays.delay_2_us)) *
                           kPsPerUs;

    WindowAssignment out;
    std::deque<std::size_t> active; // buckets that later detections may still join
    for (std::size_t i = 0; i < file.events.size(); ++i) {
        const auto& ev = file.events[i];
        ++out.detections;
        ++out.touches;
        const auto open = assigned_opening(ev, params);
        if (!open) {
            ++out.dropped;
            continue;
        }
        while (!active.empty() && out.buckets[active.front()].opening_time + horizon < *open) {
            active.pop_front();
            ++out.touches;
        }

        TrialBucket* bucket = nullptr;
        for (auto it = active.rbegin(); it != active.rend(); ++it) {
            ++out.touches;
            auto& b = out.buckets[*it];
            if (b.opening_time == *open && b.setting == ev.setting) {
                bucket = &b;
                break;
            }
        }
        if (!bucket) {
            out.buckets.push_back({ev.setting, *open, 0, 0, i});
            active.push_back(out.buckets.size() - 1);
            bucket = &out.buckets.back();
        }
        if (ev.channel == 1)
            ++bucket->n1;
        else
            ++bucket->n2;
    }
    return out;
}

CountTable count_full(std::span<const TrialBucket> buckets, const TrialTotals& trials) {
    CountTable t;
    for (Setting s : kAllSettings)
        t[s].trials = trials[index(s)];
    for (const auto& b : buckets) {
        auto& row = t[b.setting];
        row.singles_a += b.n1;
        row.singles_b += b.n2;
        row.coincidences += std::min(b.n1, b.n2);
    }
    return t;
}

CountTable count_legacy(std::span<const TrialBucket> buckets, const TrialTotals& trials) {
    CountTable t;
    for (Setting s : kAllSettings)
        t[s].trials = trials[index(s)];
    for (const auto& b : buckets) {
        auto& row = t[b.setting];
        const std::uint32_t a = std::min(b.n1, 1u);
        const std::uint32_t c = std::min(b.n2, 1u);
        row.singles_a += a;
        row.singles_b += c;
        row.coincidences += std::min(a, c);
    }
    return t;
}

CountTable count_buckets(std::span<const TrialBucket> buckets, const TrialTotals& trials, CountingMode mode) {
    return mode == CountingMode::full ? count_full(buckets, trials) : count_legacy(buckets, trials);
}

TrialTotals total_trials(const CompiledFile& file) {
    TrialTotals t{};
    for (std::size_t s = 0; s < kNumSettings; ++s)
        t[s] = file.total_trials[s];
    return t;
}

CountTable whole_table(const CompiledFile& file, const AnalysisParams& params) {
    const auto wa = assign_windows(file, params);
    return count_buckets(wa.buckets, total_trials(file), params.mode);
}

std::map<std::uint32_t, std::uint64_t> histogram_per_trial(const CompiledFile& file, const AnalysisParams& params,
                                                          Side side, bool include_empty_openings) {
    const auto wa = assign_windows(file, params);
    std::map<std::uint32_t, std::uint64_t> hist;
    for (const auto& b : wa.buckets)
        ++hist[side == Side::one ? b.n1 : b.n2];
    if (include_empty_openings) {
        std::uint64_t openings = 0;
        for (auto t : file.total_trials)
            openings += t;
        const std::uint64_t seen = wa.buckets.size();
        if (openings > seen)
            hist[0] += openings - seen;
    }
    return hist;
}

namespace {

std::vector<std::size_t> partition_ends(const CompiledFile& file, const AnalysisParams& params) {
    const std::size_t n = file.events.size();
    std::vector<std::size_t> ends;
    if (params.partition_rule == PartitionRule::events) {
        for (std::size_t e = params.partition_size; e < n; e += params.partition_size)
            ends.push_back(e);
    } else {
        std::array<std::uint32_t, kNumSettings> base{};
        for (std::size_t i = 0; i < n; ++i) {
            const auto& cum = file.events[i].trials;
            bool full = true;
            for (std::size_t s = 0; s < kNumSettings; ++s)
                full = full && cum[s] - base[s] >= params.partition_size;
            if (full && i + 1 < n) {
                ends.push_back(i + 1);
                base = cum;
            }
        }
    }
    if (n > 0)
        ends.push_back(n);
    return ends;
}

} // namespace

PartitionAnalysis partition_analysis(const CompiledFile& file, const AnalysisParams& params) {
    const auto wa = assign_windows(file, params);
    const auto ends = partition_ends(file, params);

    PartitionAnalysis out;
    out.detections = wa.detections;
    out.dropped = wa.dropped;
    out.touches = wa.touches;

    std::array<std::uint32_t, kNumSettings> start_cum{};
    std::size_t bucket = 0;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < ends.size(); ++k) {
        const std::size_t end = ends[k];
        const bool last = k + 1 == ends.size();
        const auto end_cum = last ? file.total_trials : file.events[end - 1].trials;
        TrialTotals trials{};
        for (std::size_t s = 0; s < kNumSettings; ++s)
            trials[s] = end_cum[s] - start_cum[s];

        const std::size_t first_bucket = bucket;
        while (bucket < wa.buckets.size() && wa.buckets[bucket].first_event < end) {
            ++bucket;
            ++out.touches;
        }

        Partition part;
        part.first_event = begin;
        part.end_event = end;
        part.table = count_buckets(std::span(wa.buckets).subspan(first_bucket, bucket - first_bucket), trials,
                                   params.mode);
        if (part.table.sufficient())
            part.result = ch_linear(part.table, params.averaging);
        out.whole += part.table;
        out.partitions.push_back(std::move(part));

        start_cum = end_cum;
        begin = end;
    }
    if (ends.empty()) {
        for (Setting s : kAllSettings)
            out.whole[s].trials = file.total_trials[index(s)];
    }

    std::vector<std::optional<ChResult>> results;
    results.reserve(out.partitions.size());
    for (const auto& p : out.partitions)
        results.push_back(p.result);
    out.report = positivity(results);
    return out;
}

DelayScan scan_delays(const CompiledFile& file, const AnalysisParams& params, const DelayGrid& grid,
                      DelayObjective objective, unsigned threads) {
    params.validate();
    if (grid.delay_1_us.empty() || grid.delay_2_us.empty())
        throw std::invalid_argument("delay grid must not be empty");

    const std::size_t n2 = grid.delay_2_us.size();
    DelayScan out;
    out.surface.resize(grid.delay_1_us.size() * n2);
    parallel_for(out.surface.size(), threads, [&](std::size_t k) {
        AnalysisParams p = params;
        p.delays = {grid.delay_1_us[k / n2], grid.delay_2_us[k % n2]};
        const auto table = whole_table(file, p);
        double metric = std::numeric_limits<double>::quiet_NaN();
        if (objective == DelayObjective::coincidences) {
            std::uint64_t c = 0;
            for (const auto& row : table.rows)
                c += row.coincidences;
            metric = static_cast<double>(c);
        } else if (table.sufficient()) {
            metric = ch_linear(table, p.averaging).ch_linear;
        }
        out.surface[k] = {p.delays.delay_1_us, p.delays.delay_2_us, metric};
    });

    out.best_metric = -std::numeric_limits<double>::infinity();
    for (const auto& pt : out.surface) {
        if (std::isfinite(pt.metric) && pt.metric > out.best_metric) {
            out.best_metric = pt.metric;
            out.best = {pt.delay_1_us, pt.delay_2_us};
        }
    }
    if (!std::isfinite(out.best_metric))
        out.best_metric = std::numeric_limits<double>::quiet_NaN();
    return out;
}

namespace {

ScanRow scan_row(const CompiledFile& file, const AnalysisParams& p, double value) {
    const auto pa = partition_analysis(file, p);
    ScanRow row;
    row.value = value;
    row.report = pa.report;
    row.whole_ch =
        pa.whole.sufficient() ? ch_linear(pa.whole, p.averaging).ch_linear : std::numeric_limits<double>::quiet_NaN();
    return row;
}

} // namespace

std::vector<ScanRow> scan_windows(const CompiledFile& file, const AnalysisParams& params,
                                  std::span<const double> windows_us, unsigned threads) {
    for (double w : windows_us) {
        AnalysisParams p = params;
        p.window_us = w;
        p.validate();
    }
    std::vector<ScanRow> rows(windows_us.size());
    parallel_for(rows.size(), threads, [&](std::size_t k) {
        AnalysisParams p = params;
        p.window_us = windows_us[k];
        rows[k] = scan_row(file, p, windows_us[k]);
    });
    return rows;
}

std::vector<ScanRow> scan_partitions(const CompiledFile& file, const AnalysisParams& params,
                                     std::span<const std::uint64_t> sizes, unsigned threads) {
    params.validate();
    for (auto s : sizes)
        if (s < 1)
            throw std::invalid_argument("partition size must be at least 1");
    std::vector<ScanRow> rows(sizes.size());
    parallel_for(rows.size(), threads, [&](std::size_t k) {
        AnalysisParams p = params;
        p.partition_size = sizes[k];
        rows[k] = scan_row(file, p, static_cast<double>(sizes[k]));
    });
    return rows;
}

} // namespace chbell
