#pragma once

// Reports are tab-delimited text tables preceded by a '#' comment block that
// carries the run manifest. A JSON sidecar holds the same content with full
// floating-point precision. Nothing time- or host-dependent is written, so
// equal manifests give byte-identical reports.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace chbell {

inline constexpr const char* kVersion = "0.1.0";

using Cell = std::variant<std::string, std::int64_t, std::uint64_t, double, bool>;

// Metrics print with 6 significant digits; NaN prints as "nan".
std::string format_cell(const Cell& c);
nlohmann::json cell_json(const Cell& c);

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

struct InputDigest {
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string subcommand;
    std::vector<std::pair<std::string, Cell>> params;
    std::vector<InputDigest> inputs;
    std::vector<std::string> outputs;
    std::string version = kVersion;

    void param(std::string key, Cell value);
    nlohmann::json to_json() const;
};

struct Report {
    RunManifest manifest;
    std::vector<Table> tables;

    Table& table(std::string name, std::vector<std::string> columns);
    void write_text(std::ostream& out) const;
    nlohmann::json to_json() const;
};

std::string sha256_file(const std::filesystem::path& path);

} // namespace chbell
