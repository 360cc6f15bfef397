// table.hpp - tabular output (CSV or JSON) and CSV input.

#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace tracecli {

using Json = nlohmann::ordered_json;

enum class Format { csv, json };

using Cell = std::variant<double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

// Shortest round-trip text for doubles; nan and inf spelled out.
std::string format_number(double value);

// Writes dir/stem.csv or dir/stem.json and returns the path.
std::filesystem::path write_table(const Table& table, const std::filesystem::path& dir, const std::string& stem,
                                  Format format);

// Table as a JSON array of row objects; non-finite numbers become null.
Json table_json(const Table& table);

std::filesystem::path write_json(const Json& doc, const std::filesystem::path& dir, const std::string& stem);

// Non-finite doubles become null.
Json number_json(double value);

// Parsed CSV with a header row. All accessors throw ConfigError naming the
// file, row and column on schema errors.
class CsvData {
public:
    static CsvData read(const std::filesystem::path& file);
    static CsvData parse(const std::string& text, const std::string& name);

    bool has(const std::string& column) const;
    std::size_t rows() const { return cells_.size(); }
    std::vector<double> numbers(const std::string& column) const;
    std::vector<int> integers(const std::string& column) const;

private:
    std::size_t index(const std::string& column) const;

    std::string name_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> cells_;
};

}  // namespace tracecli
