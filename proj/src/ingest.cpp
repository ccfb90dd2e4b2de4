#include "chbell/ingest.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace chbell {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

FormatError::FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

// Splits on whitespace; returns false on more than `max` fields.
bool split_fields(std::string_view line, std::array<std::string_view, 3>& fields, std::size_t& count) {
    count = 0;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i]))
            ++i;
        if (i == line.size())
            break;
        const std::size_t start = i;
        while (i < line.size() && !is_space(line[i]))
            ++i;
        if (count == fields.size())
            return false;
        fields[count++] = line.substr(start, i - start);
    }
    return true;
}

template <typename T>
bool parse_integer(std::string_view s, T& value) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    return ec == std::errc() && ptr == end;
}

RawEvent parse_line(std::string_view line, std::size_t line_no) {
    std::array<std::string_view, 3> f;
    std::size_t n = 0;
    if (!split_fields(line, f, n) || n != 3)
        throw ParseError(line_no, "expected 3 fields 'timetag setting kind'");

    RawEvent ev;
    if (!parse_integer(f[0], ev.timetag))
        throw ParseError(line_no, "malformed timetag '" + std::string(f[0]) + "'");

    long setting = 0;
    if (!parse_integer(f[1], setting))
        throw ParseError(line_no, "malformed setting '" + std::string(f[1]) + "'");
    auto s = setting_from_code(setting);
    if (!s)
        throw ParseError(line_no, "unknown setting code " + std::to_string(setting));
    ev.setting = *s;

    int kind = 0;
    if (!parse_integer(f[2], kind))
        throw ParseError(line_no, "malformed kind '" + std::string(f[2]) + "'");
    switch (kind) {
    case 1: ev.kind = EventKind::detection_side1; break;
    case 2: ev.kind = EventKind::detection_side2; break;
    case 15: ev.kind = EventKind::opening; break;
    default: throw ParseError(line_no, "unknown event kind " + std::to_string(kind));
    }
    return ev;
}

} // namespace

std::vector<RawEvent> parse_events(std::istream& in) {
    std::vector<RawEvent> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), is_space))
            continue;
        out.push_back(parse_line(line, line_no));
    }
    return out;
}

std::vector<RawEvent> parse_events_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open event file " + path.string());
    try {
        return parse_events(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.what());
    }
}

void write_events(std::ostream& out, std::span<const RawEvent> events) {
    for (const auto& ev : events)
        out << ev.timetag << ' ' << setting_code(ev.setting) << ' ' << static_cast<int>(ev.kind) << '\n';
}

std::vector<RawEvent> insert_missing_openings(std::span<const RawEvent> events, double period_us) {
    if (!(period_us > 0.0) || !std::isfinite(period_us))
        throw std::invalid_argument("opening period must be positive");
    const auto offset = static_cast<std::uint64_t>(std::llround(period_us * kTicksPerMicrosecond / 2.0));

    std::vector<RawEvent> out(events.begin(), events.end());
    for (const auto& ev : events)
        if (ev.is_opening())
            out.push_back({ev.timetag + offset, ev.setting, EventKind::opening});
    std::stable_sort(out.begin(), out.end(),
                     [](const RawEvent& a, const RawEvent& b) { return a.timetag < b.timetag; });
    return out;
}

bool time_ordered(std::span<const RawEvent> events) {
    return std::is_sorted(events.begin(), events.end(),
                          [](const RawEvent& a, const RawEvent& b) { return a.timetag < b.timetag; });
}

double ticks_to_ps(std::uint64_t timetag) {
    // 156.25 = 625/4: the product is an integer below 2^53 and the division
    // by 4 only changes the exponent.
    return static_cast<double>(timetag * 625) / 4.0;
}

std::size_t CompiledFile::orphan_detections() const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [](const CompiledEvent& e) { return !e.has_opening(); }));
}

CompiledFile compile(std::span<const RawEvent> events) {
    if (!time_ordered(events))
        throw std::invalid_argument("events must be in ascending timetag order before compilation");

    CompiledFile file;
    std::array<std::uint32_t, kNumSettings> counts{};
    double last_opening = kNoOpening;
    for (const auto& ev : events) {
        if (ev.timetag > kMaxExactTimetag)
            throw std::range_error("timetag " + std::to_string(ev.timetag) +
                                   " exceeds the exactly convertible range");
        if (ev.is_opening()) {
            auto& c = counts[index(ev.setting)];
            if (c == std::numeric_limits<std::uint32_t>::max())
                throw std::range_error("opening count overflows 32 bits");
            ++c;
            last_opening = ticks_to_ps(ev.timetag);
            continue;
        }
        CompiledEvent ce;
        ce.raw_time = ticks_to_ps(ev.timetag);
        ce.pockels_time = last_opening;
        ce.setting = ev.setting;
        ce.channel = static_cast<std::uint8_t>(ev.kind);
        ce.trials = counts;
        file.events.push_back(ce);
    }
    if (file.events.size() > std::numeric_limits<std::uint32_t>::max())
        throw std::range_error("too many detection events for the compiled format");
    file.total_trials = counts;
    return file;
}

namespace {

void put_u32(char* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        p[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f64(char* p, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i)
        p[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
}

std::uint32_t get_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

double get_f64(const char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return std::bit_cast<double>(v);
}

constexpr char kMagic[4] = {'B', 'K', 'C', '1'};

} // namespace

void store(const CompiledFile& file, std::ostream& out) {
    char header[kHeaderBytes];
    std::memcpy(header, kMagic, 4);
    put_u32(header + 4, static_cast<std::uint32_t>(file.events.size()));
    for (std::size_t s = 0; s < kNumSettings; ++s)
        put_u32(header + 8 + 4 * s, file.total_trials[s]);
    out.write(header, kHeaderBytes);

    char rec[kRecordBytes];
    for (const auto& ev : file.events) {
        put_f64(rec, ev.raw_time);
        put_f64(rec + 8, ev.pockels_time);
        rec[16] = static_cast<char>(index(ev.setting));
        rec[17] = static_cast<char>(ev.channel);
        rec[18] = rec[19] = 0;
        for (std::size_t s = 0; s < kNumSettings; ++s)
            put_u32(rec + 20 + 4 * s, ev.trials[s]);
        out.write(rec, kRecordBytes);
    }
    if (!out)
        throw FormatError(FormatError::Kind::io, "write failed");
}

void store(const CompiledFile& file, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw FormatError(FormatError::Kind::io, "cannot open " + path.string() + " for writing");
    store(file, out);
}

CompiledFile load(std::istream& in) {
    char header[kHeaderBytes];
    in.read(header, kHeaderBytes);
    if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes))
        throw FormatError(FormatError::Kind::truncated, "truncated header");
    if (std::memcmp(header, kMagic, 4) != 0)
        throw FormatError(FormatError::Kind::bad_magic, "not a compiled event file (bad magic)");

    CompiledFile file;
    const std::uint32_t n = get_u32(header + 4);
    for (std::size_t s = 0; s < kNumSettings; ++s)
        file.total_trials[s] = get_u32(header + 8 + 4 * s);

    file.events.reserve(n);
    char rec[kRecordBytes];
    for (std::uint32_t i = 0; i < n; ++i) {
        in.read(rec, kRecordBytes);
        if (in.gcount() != static_cast<std::streamsize>(kRecordBytes))
            throw FormatError(FormatError::Kind::truncated,
                              "truncated at record " + std::to_string(i) + " of " + std::to_string(n));
        CompiledEvent ev;
        ev.raw_time = get_f64(rec);
        ev.pockels_time = get_f64(rec + 8);
        const auto angles = static_cast<unsigned char>(rec[16]);
        const auto channel = static_cast<unsigned char>(rec[17]);
        if (angles >= kNumSettings || (channel != 1 && channel != 2))
            throw FormatError(FormatError::Kind::bad_field, "bad setting/channel in record " + std::to_string(i));
        ev.setting = static_cast<Setting>(angles);
        ev.channel = channel;
        for (std::size_t s = 0; s < kNumSettings; ++s) {
            ev.trials[s] = get_u32(rec + 20 + 4 * s);
            if (ev.trials[s] > file.total_trials[s])
                throw FormatError(FormatError::Kind::count_mismatch,
                                  "record " + std::to_string(i) + " trial count exceeds total");
        }
        file.events.push_back(ev);
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError(FormatError::Kind::count_mismatch, "trailing bytes after the declared event count");
    return file;
}

CompiledFile load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
    return load(in);
}

} // namespace chbell
