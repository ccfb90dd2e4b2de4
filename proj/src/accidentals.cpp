#include "chbell/accidentals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace chbell {

EventLists prepare_event_lists(const CompiledFile& file, const DelaySet& delays, double gate_us, double period_us) {
    AnalysisParams p;
    p.window_us = gate_us;
    p.period_us = period_us;
    p.delays = delays;
    p.validate();

    EventLists lists;
    for (const auto& ev : file.events) {
        if (!assigned_opening(ev, p))
            continue;
        const double t = ev.raw_time - delays.for_channel(ev.channel) * 1e6;
        auto& l = lists[index(ev.setting)];
        (ev.channel == 1 ? l.side1 : l.side2).push_back(t);
    }
    for (auto& l : lists) {
        std::sort(l.side1.begin(), l.side1.end());
        std::sort(l.side2.begin(), l.side2.end());
    }
    return lists;
}

std::uint64_t greedy_coincidences(std::span<const double> a, std::span<const double> b, double window) {
    std::uint64_t count = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (std::abs(a[i] - b[j]) <= window) {
            ++count;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return count;
}

CoincidenceCurve scan_curve(const EventLists& lists, const TrialTotals& trials, std::span<const double> windows_ns,
                            const CurveOptions& options) {
    if (!std::is_sorted(windows_ns.begin(), windows_ns.end()))
        throw std::invalid_argument("window grid must be ascending");

    CoincidenceCurve curve;
    curve.windows_ns.assign(windows_ns.begin(), windows_ns.end());
    const std::size_t n = windows_ns.size();

    for (Setting s : kAllSettings) {
        const auto& l = lists[index(s)];
        auto& c = curve.counts[index(s)];
        c.reserve(n);
        for (double w : windows_ns)
            c.push_back(greedy_coincidences(l.side1, l.side2, w * 1e3));

        auto& d = curve.slopes[index(s)];
        d.assign(n, 0.0);
        for (std::size_t k = 0; n > 1 && k < n; ++k) {
            const std::size_t lo = k == 0 ? 0 : k - 1;
            const std::size_t hi = k + 1 == n ? k : k + 1;
            const double dw = windows_ns[hi] - windows_ns[lo];
            if (dw > 0.0)
                d[k] = (static_cast<double>(c[hi]) - static_cast<double>(c[lo])) / dw;
        }
    }

    curve.ch.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        CountTable t;
        for (Setting s : kAllSettings) {
            const auto& l = lists[index(s)];
            t[s] = {l.side1.size(), curve.counts[index(s)][k], l.side2.size(), trials[index(s)]};
        }
        curve.ch.push_back(t.sufficient() ? ch_linear(t, options.averaging).ch_linear
                                          : std::numeric_limits<double>::quiet_NaN());
    }

    for (std::size_t k = 0; k < n; ++k) {
        const double w = windows_ns[k];
        if (w <= options.knee_ns)
            continue;
        for (Setting s : kAllSettings) {
            const double c = static_cast<double>(curve.counts[index(s)][k]);
            if (curve.slopes[index(s)][k] > options.slope_fraction * c / w)
                curve.accidentals_negligible = false;
        }
    }
    return curve;
}

CoincidenceCurve scan_curve(const CompiledFile& file, const DelaySet& delays, std::span<const double> windows_ns,
                            const CurveOptions& options) {
    return scan_curve(prepare_event_lists(file, delays, options.gate_us, options.period_us), total_trials(file),
                      windows_ns, options);
}

} // namespace chbell
