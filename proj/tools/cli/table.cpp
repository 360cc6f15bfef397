#include "table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "tracemem/core.hpp"

namespace tracecli {

using tracemem::ConfigError;

void Table::add(std::vector<Cell> row)
{
    if (row.size() != columns.size()) throw std::logic_error("table row width does not match the header");
    rows.push_back(std::move(row));
}

std::string format_number(double value)
{
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return fmt::format("{}", value);
}

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Cell& cell)
{
    if (const auto* d = std::get_if<double>(&cell)) return format_number(*d);
    if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
    return csv_field(std::get<std::string>(cell));
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
    out << content;
    if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
}

}  // namespace

Json number_json(double value)
{
    return std::isfinite(value) ? Json(value) : Json(nullptr);
}

Json table_json(const Table& table)
{
    Json rows = Json::array();
    for (const auto& row : table.rows) {
        Json obj = Json::object();
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        obj[table.columns[c]] = number_json(v);
                    } else {
                        obj[table.columns[c]] = v;
                    }
                },
                row[c]);
        }
        rows.push_back(std::move(obj));
    }
    return rows;
}

std::filesystem::path write_json(const Json& doc, const std::filesystem::path& dir, const std::string& stem)
{
    const auto path = dir / (stem + ".json");
    write_file(path, doc.dump(2) + "\n");
    return path;
}

std::filesystem::path write_table(const Table& table, const std::filesystem::path& dir, const std::string& stem,
                                  Format format)
{
    if (format == Format::json) return write_json(table_json(table), dir, stem);
    std::string text;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) text += ',';
        text += csv_field(table.columns[c]);
    }
    text += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) text += ',';
            text += cell_text(row[c]);
        }
        text += '\n';
    }
    const auto path = dir / (stem + ".csv");
    write_file(path, text);
    return path;
}

namespace {

std::vector<std::vector<std::string>> split_csv(const std::string& text, const std::string& name)
{
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool any = false;
    std::size_t line = 1;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"') {
            if (!field.empty()) throw ConfigError(fmt::format("{}: line {}: stray quote", name, line));
            quoted = true;
            any = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                record.push_back(std::move(field));
                records.push_back(std::move(record));
            }
            record.clear();
            field.clear();
            any = false;
            ++line;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw ConfigError(fmt::format("{}: unterminated quoted field", name));
    if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

}  // namespace

CsvData CsvData::parse(const std::string& text, const std::string& name)
{
    CsvData data;
    data.name_ = name;
    auto records = split_csv(text, name);
    if (records.empty()) throw ConfigError(fmt::format("{}: empty CSV file", name));
    data.header_ = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != data.header_.size()) {
            throw ConfigError(fmt::format("{}: row {} has {} fields, header has {}", name, r, records[r].size(),
                                          data.header_.size()));
        }
        data.cells_.push_back(std::move(records[r]));
    }
    return data;
}

CsvData CsvData::read(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read data file '{}'", file.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), file.filename().string());
}

bool CsvData::has(const std::string& column) const
{
    return std::find(header_.begin(), header_.end(), column) != header_.end();
}

std::size_t CsvData::index(const std::string& column) const
{
    const auto it = std::find(header_.begin(), header_.end(), column);
    if (it == header_.end()) throw ConfigError(fmt::format("{}: missing column '{}'", name_, column));
    return static_cast<std::size_t>(it - header_.begin());
}

std::vector<double> CsvData::numbers(const std::string& column) const
{
    const auto c = index(column);
    std::vector<double> out;
    out.reserve(cells_.size());
    for (std::size_t r = 0; r < cells_.size(); ++r) {
        const auto& s = cells_[r][c];
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
            throw ConfigError(fmt::format("{}: row {}, column '{}': '{}' is not a number", name_, r + 1, column, s));
        }
        out.push_back(v);
    }
    return out;
}

std::vector<int> CsvData::integers(const std::string& column) const
{
    const auto c = index(column);
    std::vector<int> out;
    out.reserve(cells_.size());
    for (std::size_t r = 0; r < cells_.size(); ++r) {
        const auto& s = cells_[r][c];
        int v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
            throw ConfigError(fmt::format("{}: row {}, column '{}': '{}' is not an integer", name_, r + 1, column, s));
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace tracecli
