#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

#include "chbell/setting.hpp"

namespace chbell {

struct SettingCounts {
    std::uint64_t singles_a = 0;
    std::uint64_t coincidences = 0;
    std::uint64_t singles_b = 0;
    std::uint64_t trials = 0;

    SettingCounts& operator+=(const SettingCounts& o);
    friend bool operator==(const SettingCounts&, const SettingCounts&) = default;
};

// Per-setting singles, coincidences and trial counts; rows in Setting order.
struct CountTable {
    std::array<SettingCounts, kNumSettings> rows{};

    SettingCounts& operator[](Setting s) { return rows[index(s)]; }
    const SettingCounts& operator[](Setting s) const { return rows[index(s)]; }

    // Every setting has at least one trial.
    bool sufficient() const;

    CountTable& operator+=(const CountTable& o);
    friend bool operator==(const CountTable&, const CountTable&) = default;
};

class InsufficientTable : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ChResult {
    double ch_linear = 0.0;
    double ch_ratio = 0.0; // NaN when the negative-term sum is zero
    bool violated = false;
};

// CH inequality, variant with three positive coincidence terms:
//   C11/N11 + C12/N12 + C21/N21 - C22/N22 - SA/N_SA - SB/N_SB
// Without averaging the singles come from a1b1. With averaging side A pools
// a1b1+a1b2 and side B pools a1b1+a2b1 (counts and trials summed).
// Throws InsufficientTable if any setting has zero trials.
ChResult ch_linear(const CountTable& table, bool averaging);

struct PositivityReport {
    std::uint64_t positive = 0;
    std::uint64_t sufficient = 0;
    std::uint64_t total = 0;
    // Absent when there are no sufficient partitions.
    std::optional<double> positivity;
    std::optional<double> sigma;

    bool defined() const { return positivity.has_value(); }
};

// Positivity over partitions; std::nullopt entries are insufficient
// partitions and stay out of the denominator. sigma is the distance of
// `positive` from sufficient/2 in units of the binomial(n, 1/2) std dev.
PositivityReport positivity(std::span<const std::optional<ChResult>> partition_results);

} // namespace chbell
