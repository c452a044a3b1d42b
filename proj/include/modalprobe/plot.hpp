// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace modalprobe {

// Static SVG figures. Every figure is accompanied by a results table written
// by the caller; nothing downstream should parse these images.

void write_heatmap_svg(const std::filesystem::path& path, const std::string& title,
                       const std::vector<std::string>& row_names,
                       const std::vector<std::string>& column_names,
                       const std::vector<std::vector<std::optional<double>>>& values);

struct LineSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

void write_line_plot_svg(const std::filesystem::path& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<LineSeries>& series,
                         const std::vector<std::string>& x_tick_labels = {});

}  // namespace modalprobe
