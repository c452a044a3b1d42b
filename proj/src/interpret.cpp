// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/interpret.hpp"

#include <cmath>
#include <unordered_map>

#include "modalprobe/error.hpp"
#include "modalprobe/numerics.hpp"
#include "modalprobe/table.hpp"

namespace modalprobe {

CorrelationGrid correlate_projections(const FeatureSpace& features, const RatingsTable& ratings) {
    std::unordered_map<std::string, const FeatureRatings*> by_id;
    for (const auto& r : ratings.rows) {
        if (r.ratings.size() != ratings.features.size()) {
            fail(ErrorCode::validation, "ratings row '" + r.stimulus_id + "' has the wrong width");
        }
        by_id.emplace(r.stimulus_id, &r);
    }

    CorrelationGrid grid;
    grid.rows = features.column_names;
    grid.columns = ratings.features;
    grid.cells.assign(grid.rows.size(), std::vector<CorrelationCell>(grid.columns.size()));

    for (std::size_t f = 0; f < grid.columns.size(); ++f) {
        std::vector<Eigen::Index> rows;
        std::vector<double> rating;
        for (std::size_t i = 0; i < features.size(); ++i) {
            auto it = by_id.find(features.stimulus_ids[i]);
            if (it == by_id.end() || !it->second->ratings[f]) continue;
            rows.push_back(static_cast<Eigen::Index>(i));
            rating.push_back(*it->second->ratings[f]);
        }
        for (std::size_t v = 0; v < grid.rows.size(); ++v) {
            CorrelationCell& cell = grid.cells[v][f];
            cell.count = rows.size();
            if (rows.size() < kMinCorrelationCount) {
                cell.note = "fewer than " + std::to_string(kMinCorrelationCount) + " rated stimuli";
                continue;
            }
            std::vector<double> projection;
            projection.reserve(rows.size());
            for (Eigen::Index r : rows) projection.push_back(features.raw(r, static_cast<Eigen::Index>(v)));
            try {
                cell.value = std::abs(pearson(projection, rating));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::numeric) throw;
                cell.note = "constant projection or rating";
            }
        }
    }
    return grid;
}

CorrelationGrid aggregate_grids(std::span<const CorrelationGrid> grids) {
    if (grids.empty()) fail(ErrorCode::precondition, "no grids to aggregate");
    CorrelationGrid out;
    out.rows = grids.front().rows;
    out.columns = grids.front().columns;
    for (const auto& g : grids) {
        if (g.rows != out.rows || g.columns != out.columns) {
            fail(ErrorCode::precondition, "grids have mismatched axes");
        }
    }
    out.cells.assign(out.rows.size(), std::vector<CorrelationCell>(out.columns.size()));
    for (std::size_t r = 0; r < out.rows.size(); ++r) {
        for (std::size_t c = 0; c < out.columns.size(); ++c) {
            double sum = 0.0;
            std::size_t defined = 0;
            CorrelationCell& cell = out.cells[r][c];
            for (const auto& g : grids) {
                const CorrelationCell& src = g.at(r, c);
                cell.count += src.count;
                if (src.value) {
                    sum += *src.value;
                    ++defined;
                } else {
                    ++cell.excluded_grids;
                }
                cell.excluded_grids += src.excluded_grids;
            }
            if (defined > 0) cell.value = sum / static_cast<double>(defined);
            if (cell.excluded_grids > 0) {
                cell.note = "undefined in " + std::to_string(cell.excluded_grids) + " of " +
                            std::to_string(grids.size()) + " grids; excluded from the mean";
            }
        }
    }
    return out;
}

void write_grid_table(const std::filesystem::path& path, const CorrelationGrid& grid) {
    Table table;
    table.header.push_back("projection");
    for (const auto& c : grid.columns) table.header.push_back(c);
    for (std::size_t r = 0; r < grid.rows.size(); ++r) {
        std::vector<std::string> row{grid.rows[r]};
        for (std::size_t c = 0; c < grid.columns.size(); ++c) {
            const auto& cell = grid.at(r, c);
            row.push_back(cell.value ? format_real(*cell.value) : "NA");
        }
        table.rows.push_back(std::move(row));
    }
    write_table(path, table);
}

}  // namespace modalprobe
