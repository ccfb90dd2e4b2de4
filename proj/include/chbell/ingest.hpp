#pragma once

// Event-file ingestion: the text event format ("timetag setting kind", one
// event per line, timetags in 156.25 ps ticks), reinsertion of the Pockels
// openings missing from the published data, and the compiled binary file.
//
// Compiled layout, little-endian:
//   char     magic[4] = "BKC1"
//   u32      num_detection_events
//   u32      total_trials[4]
//   num_detection_events records of 36 bytes:
//     f64 raw_time        detection time, ps
//     f64 pockels_time    preceding opening, ps (-inf if none)
//     u8  angles          Setting index
//     u8  channel         1 or 2
//     u8  pad[2]          zero
//     u32 trials[4]       cumulative openings per setting, inclusive

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chbell/setting.hpp"

namespace chbell {

enum class EventKind : std::uint8_t { detection_side1 = 1, detection_side2 = 2, opening = 15 };

inline constexpr double kPicosecondsPerTick = 156.25;
inline constexpr double kTicksPerMicrosecond = 1e6 / kPicosecondsPerTick; // 6400
// Largest timetag whose picosecond value timetag * 625 / 4 is exact in binary64.
inline constexpr std::uint64_t kMaxExactTimetag = (std::uint64_t{1} << 53) / 625;

struct RawEvent {
    std::uint64_t timetag = 0;
    Setting setting = Setting::a1b1;
    EventKind kind = EventKind::opening;

    bool is_opening() const { return kind == EventKind::opening; }
    friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// One RawEvent per nonempty line, order preserved.
std::vector<RawEvent> parse_events(std::istream& in);
std::vector<RawEvent> parse_events_file(const std::filesystem::path& path);

void write_events(std::ostream& out, std::span<const RawEvent> events);

// Adds a same-setting opening period/2 after every recorded opening and
// returns the stream stably sorted by timetag.
std::vector<RawEvent> insert_missing_openings(std::span<const RawEvent> events, double period_us = 40.0);

bool time_ordered(std::span<const RawEvent> events);

double ticks_to_ps(std::uint64_t timetag);

inline constexpr double kNoOpening = -std::numeric_limits<double>::infinity();

struct CompiledEvent {
    double raw_time = 0.0;
    double pockels_time = kNoOpening;
    Setting setting = Setting::a1b1;
    std::uint8_t channel = 1;
    std::array<std::uint32_t, kNumSettings> trials{};

    bool has_opening() const { return pockels_time != kNoOpening; }
    friend bool operator==(const CompiledEvent&, const CompiledEvent&) = default;
};

struct CompiledFile {
    std::array<std::uint32_t, kNumSettings> total_trials{};
    std::vector<CompiledEvent> events;

    std::size_t num_detection_events() const { return events.size(); }
    std::size_t orphan_detections() const;
    friend bool operator==(const CompiledFile&, const CompiledFile&) = default;
};

// Openings are counted, detections stored. Throws std::invalid_argument if
// the input is not time ordered and std::range_error for timetags above
// kMaxExactTimetag.
CompiledFile compile(std::span<const RawEvent> events);

class FormatError : public std::runtime_error {
public:
    enum class Kind { truncated, bad_magic, count_mismatch, bad_field, io };
    FormatError(Kind kind, const std::string& what);
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::size_t kHeaderBytes = 24;
inline constexpr std::size_t kRecordBytes = 36;

void store(const CompiledFile& file, std::ostream& out);
void store(const CompiledFile& file, const std::filesystem::path& path);
CompiledFile load(std::istream& in);
CompiledFile load(const std::filesystem::path& path);

} // namespace chbell
