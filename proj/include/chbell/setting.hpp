#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace chbell {

// Analyzer setting combination of one trial. The numeric value is also the
// row index in count tables and the `angles` byte of the compiled format.
enum class Setting : std::uint8_t { a1b1 = 0, a1b2 = 1, a2b1 = 2, a2b2 = 3 };

inline constexpr std::size_t kNumSettings = 4;
inline constexpr std::array<Setting, kNumSettings> kAllSettings = {
    Setting::a1b1, Setting::a1b2, Setting::a2b1, Setting::a2b2};

constexpr std::size_t index(Setting s) { return static_cast<std::size_t>(s); }

// Event-file code: 11, 12, 21, 22.
constexpr int setting_code(Setting s) {
    constexpr int codes[] = {11, 12, 21, 22};
    return codes[index(s)];
}

constexpr std::optional<Setting> setting_from_code(long code) {
    switch (code) {
    case 11: return Setting::a1b1;
    case 12: return Setting::a1b2;
    case 21: return Setting::a2b1;
    case 22: return Setting::a2b2;
    default: return std::nullopt;
    }
}

constexpr std::string_view setting_name(Setting s) {
    constexpr std::string_view names[] = {"a1b1", "a1b2", "a2b1", "a2b2"};
    return names[index(s)];
}

} // namespace chbell
