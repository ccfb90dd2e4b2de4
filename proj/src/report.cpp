#include "chbell/report.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <stdexcept>

#include <openssl/evp.h>

namespace chbell {

std::string format_cell(const Cell& c) {
    struct Visitor {
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(std::uint64_t v) const { return std::to_string(v); }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
        std::string operator()(double v) const {
            if (std::isnan(v))
                return "nan";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g", v);
            return buf;
        }
    };
    return std::visit(Visitor{}, c);
}

nlohmann::json cell_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v))
                    return nullptr;
            }
            return v;
        },
        c);
}

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw std::logic_error("row width does not match table '" + name + "'");
    rows.push_back(std::move(row));
}

void RunManifest::param(std::string key, Cell value) { params.emplace_back(std::move(key), std::move(value)); }

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["version"] = version;
    auto& p = j["params"] = nlohmann::json::object();
    for (const auto& [k, v] : params)
        p[k] = cell_json(v);
    auto& in = j["inputs"] = nlohmann::json::array();
    for (const auto& d : inputs)
        in.push_back({{"path", d.path}, {"sha256", d.sha256}});
    j["outputs"] = outputs;
    return j;
}

Table& Report::table(std::string name, std::vector<std::string> columns) {
    tables.push_back({std::move(name), std::move(columns), {}});
    return tables.back();
}

void Report::write_text(std::ostream& out) const {
    out << "# chbell report\n";
    out << "# subcommand: " << manifest.subcommand << '\n';
    out << "# version: " << manifest.version << '\n';
    for (const auto& [k, v] : manifest.params)
        out << "# param " << k << ": " << format_cell(v) << '\n';
    for (const auto& d : manifest.inputs)
        out << "# input " << d.path << " sha256:" << d.sha256 << '\n';
    for (const auto& o : manifest.outputs)
        out << "# output " << o << '\n';
    for (const auto& t : tables) {
        out << "#\n# table: " << t.name << '\n';
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            out << (i ? "\t" : "") << t.columns[i];
        out << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "\t" : "") << format_cell(row[i]);
            out << '\n';
        }
    }
}

nlohmann::json Report::to_json() const {
    nlohmann::json j;
    j["manifest"] = manifest.to_json();
    auto& tabs = j["tables"] = nlohmann::json::object();
    for (const auto& t : tables) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : t.rows) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& c : row)
                r.push_back(cell_json(c));
            rows.push_back(std::move(r));
        }
        tabs[t.name] = {{"columns", t.columns}, {"rows", std::move(rows)}};
    }
    return j;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string() + " for hashing");

    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 init failed");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0)
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);

    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

} // namespace chbell
