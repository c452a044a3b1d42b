// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "modalprobe/error.hpp"

namespace modalprobe {

std::optional<std::size_t> Table::find_column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
    if (auto idx = find_column(name)) return *idx;
    fail(ErrorCode::validation, "missing column '" + std::string(name) + "'");
}

char delimiter_for(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? ',' : '\t';
}

Table parse_table(std::string_view text, char delimiter, std::string_view source) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // Skip blank lines.
        if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field += ch;
            }
            continue;
        }
        if (ch == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (ch == delimiter) {
            end_field();
        } else if (ch == '\n') {
            end_record();
            ++line;
        } else if (ch == '\r') {
            // tolerate CRLF
        } else {
            field += ch;
            field_started = true;
        }
    }
    if (in_quotes) {
        fail(ErrorCode::validation, std::string(source) + ": unterminated quoted field near line " +
                                        std::to_string(line));
    }
    if (field_started || !field.empty() || !record.empty()) end_record();

    Table table;
    if (records.empty()) fail(ErrorCode::validation, std::string(source) + ": missing header row");
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size()) {
            fail(ErrorCode::validation,
                 std::string(source) + ": row " + std::to_string(r) + " has " +
                     std::to_string(records[r].size()) + " fields, header declares " +
                     std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open table " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_table(buf.str(), delimiter_for(path), path.string());
}

namespace {

std::string quote_if_needed(const std::string& value, char delimiter) {
    if (value.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos) {
        return value;
    }
    std::string out = "\"";
    for (char ch : value) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

}  // namespace

std::string format_table(const Table& table, char delimiter) {
    std::string out;
    auto emit = [&](const std::vector<std::string>& record) {
        for (std::size_t i = 0; i < record.size(); ++i) {
            if (i) out += delimiter;
            out += quote_if_needed(record[i], delimiter);
        }
        out += '\n';
    };
    emit(table.header);
    for (const auto& row : table.rows) emit(row);
    return out;
}

void write_table(const std::filesystem::path& path, const Table& table) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write table " + path.string());
    out << format_table(table, delimiter_for(path));
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

std::string format_real(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) fail(ErrorCode::numeric, "cannot format real value");
    return std::string(buf, ptr);
}

double parse_real(std::string_view text, std::string_view context) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || text.empty()) {
        fail(ErrorCode::validation,
             std::string(context) + ": not a number: '" + std::string(text) + "'");
    }
    if (!std::isfinite(value)) {
        fail(ErrorCode::validation, std::string(context) + ": non-finite value");
    }
    return value;
}

}  // namespace modalprobe
