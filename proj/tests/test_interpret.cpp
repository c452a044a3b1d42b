// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "modalprobe/interpret.hpp"
#include "modalprobe/table.hpp"
#include "support.hpp"

using namespace modalprobe;
using modalprobe::testing::check_error;
using modalprobe::testing::TempDir;

namespace {

FeatureSpace space_of(const Eigen::MatrixXd& raw) {
    FeatureSpace fs;
    for (Eigen::Index i = 0; i < raw.rows(); ++i) fs.stimulus_ids.push_back("s" + std::to_string(i));
    fs.column_names = {"probable-improbable", "improbable-impossible", "impossible-inconceivable"};
    fs.raw = raw;
    fs.features = raw;
    return fs;
}

CorrelationGrid grid_with(double value) {
    CorrelationGrid g;
    g.rows = {"v"};
    g.columns = {"f"};
    g.cells = {{CorrelationCell{value, 10, 0, ""}}};
    return g;
}

}  // namespace

TEST_CASE("an affine rating correlates perfectly; independent ratings do not") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd raw(500, 3);
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = normal(rng);
    const FeatureSpace fs = space_of(raw);
    RatingsTable ratings;
    ratings.features = {"Affine", "Negated", "Noise"};
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        ratings.rows.push_back({fs.stimulus_ids[static_cast<std::size_t>(i)],
                                {2.0 * raw(i, 0) + 1.0, -0.5 * raw(i, 2) + 7.0, normal(rng)}});
    }
    const CorrelationGrid g = correlate_projections(fs, ratings);
    CHECK(std::abs(*g.at(0, 0).value - 1.0) < 1e-12);
    CHECK(std::abs(*g.at(2, 1).value - 1.0) < 1e-12);
    for (std::size_t r = 0; r < 3; ++r) CHECK(*g.at(r, 2).value < 0.2);
    CHECK(g.at(0, 0).count == 500);
    for (const auto& row : g.cells) {
        for (const auto& cell : row) CHECK((*cell.value >= 0.0 && *cell.value <= 1.0));
    }
}

TEST_CASE("missing ratings are excluded per feature and small overlaps are undefined") {
    Eigen::MatrixXd raw(5, 3);
    raw << 1, 2, 3, 2, 1, 0, 3, 5, 1, 4, 4, 4, 5, 0, 2;
    const FeatureSpace fs = space_of(raw);
    RatingsTable ratings;
    ratings.features = {"Full", "Sparse", "Flat"};
    ratings.rows = {{"s0", {1.0, 1.0, 3.0}},
                    {"s1", {2.0, std::nullopt, 3.0}},
                    {"s2", {3.5, std::nullopt, 3.0}},
                    {"s3", {4.0, 2.0, 3.0}},
                    {"s4", {4.5, std::nullopt, 3.0}},
                    {"ghost", {9.0, 9.0, 9.0}}};
    const CorrelationGrid g = correlate_projections(fs, ratings);
    CHECK(g.at(0, 0).count == 5);
    CHECK(g.at(0, 0).value.has_value());
    CHECK(g.at(0, 1).count == 2);
    CHECK_FALSE(g.at(0, 1).value.has_value());
    CHECK_FALSE(g.at(1, 2).value.has_value());
    CHECK(g.at(1, 2).note.find("constant") != std::string::npos);
}

TEST_CASE("grid is invariant to stimulus order, vector scale and rating recoding") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 4 + trial % 20;
        Eigen::MatrixXd raw(n, 3);
        for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = normal(rng);
        RatingsTable ratings;
        ratings.features = {"a", "b"};
        for (Eigen::Index i = 0; i < n; ++i) ratings.rows.push_back({"s" + std::to_string(i), {normal(rng), normal(rng)}});
        const CorrelationGrid base = correlate_projections(space_of(raw), ratings);

        Eigen::MatrixXd scaled = raw;
        scaled.col(1) *= scale(rng);
        RatingsTable recoded = ratings;
        const double slope = (trial % 2 ? 1.0 : -1.0) * scale(rng);
        for (auto& r : recoded.rows) r.ratings[0] = slope * *r.ratings[0] + 3.0;
        std::shuffle(recoded.rows.begin(), recoded.rows.end(), rng);
        const CorrelationGrid other = correlate_projections(space_of(scaled), recoded);
        for (std::size_t r = 0; r < 3; ++r) {
            for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(*base.at(r, c).value - *other.at(r, c).value) < 1e-9);
        }
    }
}

TEST_CASE("aggregation averages defined cells and sums counts") {
    const std::vector<CorrelationGrid> one{grid_with(0.2)};
    CHECK(*aggregate_grids(one).at(0, 0).value == 0.2);
    const std::vector<CorrelationGrid> two{grid_with(0.2), grid_with(0.4)};
    const CorrelationGrid avg = aggregate_grids(two);
    CHECK(std::abs(*avg.at(0, 0).value - 0.3) < 1e-15);
    CHECK(avg.at(0, 0).count == 20);

    CorrelationGrid degenerate = grid_with(0.0);
    degenerate.cells[0][0].value.reset();
    const std::vector<CorrelationGrid> mixed{grid_with(0.2), degenerate, grid_with(0.6)};
    const CorrelationGrid m = aggregate_grids(mixed);
    CHECK(std::abs(*m.at(0, 0).value - 0.4) < 1e-15);
    CHECK(m.at(0, 0).excluded_grids == 1);

    CorrelationGrid renamed = grid_with(0.1);
    renamed.columns = {"g"};
    const std::vector<CorrelationGrid> bad{grid_with(0.2), renamed};
    check_error([&] { aggregate_grids(bad); }, ErrorCode::precondition, "mismatched axes");
}

TEST_CASE("grid table writes NA for undefined cells") {
    TempDir dir;
    CorrelationGrid g = grid_with(0.25);
    g.columns.push_back("h");
    g.cells[0].push_back(CorrelationCell{});
    write_grid_table(dir / "grid.tsv", g);
    const Table t = read_table(dir / "grid.tsv");
    CHECK(t.header == std::vector<std::string>{"projection", "f", "h"});
    CHECK(t.rows[0] == std::vector<std::string>{"v", "0.25", "NA"});
}
