// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modalprobe/behavior.hpp"
#include "modalprobe/stimuli.hpp"

namespace modalprobe {

struct CorrelationCell {
    std::optional<double> value;  // |pearson|; empty when undefined
    std::size_t count = 0;        // stimuli (summed across grids after aggregation)
    std::size_t excluded_grids = 0;
    std::string note;
};

struct CorrelationGrid {
    std::vector<std::string> rows;     // projection names
    std::vector<std::string> columns;  // rating feature names
    std::vector<std::vector<CorrelationCell>> cells;

    const CorrelationCell& at(std::size_t r, std::size_t c) const { return cells.at(r).at(c); }
};

inline constexpr std::size_t kMinCorrelationCount = 3;

// cell[v][f] = |pearson(raw projection v, rating f)| over stimuli that have
// both; fewer than three, or a constant column, leaves the cell undefined.
CorrelationGrid correlate_projections(const FeatureSpace& features, const RatingsTable& ratings);

// Cell-wise mean of the defined values; counts summed. Undefined cells are
// skipped and tallied in excluded_grids.
CorrelationGrid aggregate_grids(std::span<const CorrelationGrid> grids);

// Matrix table: first column is the projection name, one column per feature;
// undefined cells are written as NA.
void write_grid_table(const std::filesystem::path& path, const CorrelationGrid& grid);

}  // namespace modalprobe
