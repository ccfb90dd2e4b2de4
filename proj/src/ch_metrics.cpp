#include "chbell/ch_metrics.hpp"

#include <cmath>
#include <limits>

namespace chbell {

SettingCounts& SettingCounts::operator+=(const SettingCounts& o) {
    singles_a += o.singles_a;
    coincidences += o.coincidences;
    singles_b += o.singles_b;
    trials += o.trials;
    return *this;
}

bool CountTable::sufficient() const {
    for (const auto& row : rows)
        if (row.trials == 0)
            return false;
    return true;
}

CountTable& CountTable::operator+=(const CountTable& o) {
    for (std::size_t i = 0; i < kNumSettings; ++i)
        rows[i] += o.rows[i];
    return *this;
}

namespace {

double rate(std::uint64_t count, std::uint64_t trials) {
    return static_cast<double>(count) / static_cast<double>(trials);
}

} // namespace

ChResult ch_linear(const CountTable& t, bool averaging) {
    if (!t.sufficient())
        throw InsufficientTable("count table has a setting with zero trials");

    const auto& r11 = t[Setting::a1b1];
    const auto& r12 = t[Setting::a1b2];
    const auto& r21 = t[Setting::a2b1];
    const auto& r22 = t[Setting::a2b2];

    const double positive = rate(r11.coincidences, r11.trials) + rate(r12.coincidences, r12.trials) +
                            rate(r21.coincidences, r21.trials);

    double singles_a = 0.0;
    double singles_b = 0.0;
    if (averaging) {
        singles_a = rate(r11.singles_a + r12.singles_a, r11.trials + r12.trials);
        singles_b = rate(r11.singles_b + r21.singles_b, r11.trials + r21.trials);
    } else {
        singles_a = rate(r11.singles_a, r11.trials);
        singles_b = rate(r11.singles_b, r11.trials);
    }
    const double negative = rate(r22.coincidences, r22.trials) + singles_a + singles_b;

    ChResult out;
    out.ch_linear = positive - negative;
    out.ch_ratio = negative > 0.0 ? positive / negative : std::numeric_limits<double>::quiet_NaN();
    out.violated = out.ch_linear > 0.0;
    return out;
}

PositivityReport positivity(std::span<const std::optional<ChResult>> partition_results) {
    PositivityReport rep;
    rep.total = partition_results.size();
    for (const auto& r : partition_results) {
        if (!r)
            continue;
        ++rep.sufficient;
        if (r->violated)
            ++rep.positive;
    }
    if (rep.sufficient > 0) {
        const double n = static_cast<double>(rep.sufficient);
        rep.positivity = static_cast<double>(rep.positive) / n;
        rep.sigma = (static_cast<double>(rep.positive) - n / 2.0) / (std::sqrt(n) / 2.0);
    }
    return rep;
}

} // namespace chbell
