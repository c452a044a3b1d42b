// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace modalprobe {

// Delimiter-separated text table with a header row. Files ending in ".csv"
// use commas, everything else uses tabs. Fields may be double-quoted; a quote
// inside a quoted field is written as two quotes.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> find_column(std::string_view name) const;
    std::size_t column(std::string_view name) const;  // throws validation error if absent
};

char delimiter_for(const std::filesystem::path& path);

Table parse_table(std::string_view text, char delimiter, std::string_view source = "<memory>");
Table read_table(const std::filesystem::path& path);

std::string format_table(const Table& table, char delimiter);
void write_table(const std::filesystem::path& path, const Table& table);

// Shortest representation that parses back to the same double.
std::string format_real(double value);
double parse_real(std::string_view text, std::string_view context);

}  // namespace modalprobe
