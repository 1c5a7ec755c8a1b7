#include "rdlab/csv.hpp"

#include "rdlab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace rdlab::csv {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    // Integral values print without an exponent or trailing ".0"
    if (value == std::floor(value) && std::abs(value) < 1e15) {
        const auto as_int = static_cast<long long>(value);
        return std::to_string(as_int);
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

Table::Table(std::vector<std::string> columns) : columns_(std::move(columns)) {
    data_.resize(columns_.size());
}

std::size_t Table::index_of(const std::string& name) const {
    const auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) {
        throw DataError("missing column: " + name);
    }
    return static_cast<std::size_t>(it - columns_.begin());
}

void Table::append_row(const std::vector<double>& values) {
    if (values.size() != columns_.size()) {
        throw DataError("append_row: expected " + std::to_string(columns_.size()) +
                        " values, got " + std::to_string(values.size()));
    }
    for (std::size_t c = 0; c < values.size(); ++c) {
        data_[c].push_back(values[c]);
    }
    ++rows_;
}

double Table::at(std::size_t row, const std::string& column) const {
    if (row >= rows_) throw DataError("row index out of range");
    return data_[index_of(column)][row];
}

const std::vector<double>& Table::column(const std::string& name) const {
    return data_[index_of(name)];
}

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (c) out += ',';
        out += columns_[c];
    }
    out += '\n';
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            if (c) out += ',';
            out += format_double(data_[c][r]);
        }
        out += '\n';
    }
    return out;
}

void Table::save(const std::string& path) const {
    write_file(path, to_csv());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::optional<double> parse_number_token(const std::string& token) {
    if (token == "nan") return std::nan("");
    if (token == "inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    double value{};
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) return std::nullopt;
    return value;
}

double parse_double(const std::string& token, std::size_t line_no) {
    const auto value = parse_number_token(token);
    if (!value) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" + token + "'");
    }
    return *value;
}

} // namespace

Table Table::parse(const std::string& text, const std::vector<std::string>& required) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty CSV input");
    }
    Table table(split_line(line));
    for (const auto& name : required) {
        table.index_of(name); // throws naming the missing column
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_line(line);
        if (fields.size() != table.columns_.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.columns_.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            row[c] = parse_double(fields[c], line_no);
        }
        table.append_row(row);
    }
    return table;
}

Table Table::load(const std::string& path, const std::vector<std::string>& required) {
    return parse(read_file(path), required);
}

TextTable::TextTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

std::size_t TextTable::index_of(const std::string& name) const {
    const auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) {
        throw DataError("missing column: " + name);
    }
    return static_cast<std::size_t>(it - columns_.begin());
}

void TextTable::append_row(std::vector<std::string> values) {
    if (values.size() != columns_.size()) {
        throw DataError("append_row: expected " + std::to_string(columns_.size()) +
                        " values, got " + std::to_string(values.size()));
    }
    rows_.push_back(std::move(values));
}

const std::string& TextTable::at(std::size_t row, const std::string& column) const {
    if (row >= rows_.size()) throw DataError("row index out of range");
    return rows_[row][index_of(column)];
}

double TextTable::number_at(std::size_t row, const std::string& column) const {
    const std::string& token = at(row, column);
    const auto value = parse_number_token(token);
    if (!value) {
        throw DataError("column '" + column + "' row " + std::to_string(row) +
                        ": cannot parse number '" + token + "'");
    }
    return *value;
}

std::string TextTable::to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (c) out += ',';
        out += columns_[c];
    }
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += row[c];
        }
        out += '\n';
    }
    return out;
}

void TextTable::save(const std::string& path) const {
    write_file(path, to_csv());
}

TextTable TextTable::parse(const std::string& text, const std::vector<std::string>& required) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty CSV input");
    }
    TextTable table(split_line(line));
    for (const auto& name : required) {
        table.index_of(name);
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_line(line);
        if (fields.size() != table.columns_.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.columns_.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }
        table.append_row(std::move(fields));
    }
    return table;
}

TextTable TextTable::load(const std::string& path, const std::vector<std::string>& required) {
    return parse(read_file(path), required);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write file: " + path);
    }
    out << content;
    if (!out) {
        throw DataError("write failed: " + path);
    }
}

} // namespace rdlab::csv
