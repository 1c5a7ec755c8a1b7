#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rdlab::csv {

// Shortest round-trip decimal rendering of a double (never locale-dependent).
std::string format_double(double value);

// A simple in-memory table: named columns of doubles, written/read as CSV
// with an exact header line and '\n' line endings.
class Table {
public:
    Table() = default;
    explicit Table(std::vector<std::string> columns);

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t rows() const { return rows_; }

    void append_row(const std::vector<double>& values);
    double at(std::size_t row, const std::string& column) const;
    const std::vector<double>& column(const std::string& name) const;

    std::string to_csv() const;
    void save(const std::string& path) const;

    // Parses CSV text; `required` columns must all be present (DataError
    // naming the missing column otherwise). Extra columns are kept.
    static Table parse(const std::string& text, const std::vector<std::string>& required = {});
    static Table load(const std::string& path, const std::vector<std::string>& required = {});

private:
    std::size_t index_of(const std::string& name) const;

    std::vector<std::string> columns_;
    std::vector<std::vector<double>> data_; // column-major
    std::size_t rows_ = 0;
};

// Row-based table of string fields, for outputs mixing labels and numbers.
// Numeric fields rendered with format_double round-trip bit-exactly through
// save/load.
class TextTable {
public:
    TextTable() = default;
    explicit TextTable(std::vector<std::string> columns);

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t rows() const { return rows_.size(); }

    void append_row(std::vector<std::string> values);
    const std::string& at(std::size_t row, const std::string& column) const;
    double number_at(std::size_t row, const std::string& column) const;

    std::string to_csv() const;
    void save(const std::string& path) const;

    static TextTable parse(const std::string& text, const std::vector<std::string>& required = {});
    static TextTable load(const std::string& path, const std::vector<std::string>& required = {});

private:
    std::size_t index_of(const std::string& name) const;

    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace rdlab::csv
