// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "modalprobe/error.hpp"

namespace modalprobe {

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

void save(const std::filesystem::path& path, const std::string& body) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out << body;
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

// White (0) to dark blue (1).
std::string shade(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255 - 225 * t));
    const int g = static_cast<int>(std::lround(255 - 175 * t));
    const int b = static_cast<int>(std::lround(255 - 75 * t));
    return "rgb(" + std::to_string(r) + "," + std::to_string(g) + "," + std::to_string(b) + ")";
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_heatmap_svg(const std::filesystem::path& path, const std::string& title,
                       const std::vector<std::string>& row_names,
                       const std::vector<std::string>& column_names,
                       const std::vector<std::vector<std::optional<double>>>& values) {
    if (values.size() != row_names.size()) fail(ErrorCode::precondition, "heatmap row count mismatch");
    for (const auto& row : values) {
        if (row.size() != column_names.size()) fail(ErrorCode::precondition, "heatmap column count mismatch");
    }
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const auto& row : values) {
        for (const auto& v : row) {
            if (!v) continue;
            lo = any ? std::min(lo, *v) : *v;
            hi = any ? std::max(hi, *v) : *v;
            any = true;
        }
    }
    const int cell = 48, left = 160, top = 50;
    const int width = left + cell * static_cast<int>(column_names.size()) + 20;
    const int height = top + cell * static_cast<int>(row_names.size()) + 120;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<text x=\"10\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
    for (std::size_t i = 0; i < row_names.size(); ++i) {
        const int y = top + cell * static_cast<int>(i);
        svg << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
            << escape(row_names[i]) << "</text>\n";
        for (std::size_t j = 0; j < column_names.size(); ++j) {
            const int x = left + cell * static_cast<int>(j);
            const auto& v = values[i][j];
            const double t = (v && hi > lo) ? (*v - lo) / (hi - lo) : (v ? 1.0 : 0.0);
            svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
                << "\" fill=\"" << (v ? shade(t) : std::string("#dddddd")) << "\" stroke=\"#ffffff\"/>\n";
            svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
                << "\" text-anchor=\"middle\" fill=\"" << (t > 0.6 ? "#ffffff" : "#000000") << "\">"
                << (v ? num(*v) : "NA") << "</text>\n";
        }
    }
    const int label_y = top + cell * static_cast<int>(row_names.size()) + 8;
    for (std::size_t j = 0; j < column_names.size(); ++j) {
        const int x = left + cell * static_cast<int>(j) + cell / 2;
        svg << "<text transform=\"translate(" << x << "," << label_y << ") rotate(45)\">"
            << escape(column_names[j]) << "</text>\n";
    }
    svg << "</svg>\n";
    save(path, svg.str());
}

void write_line_plot_svg(const std::filesystem::path& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<LineSeries>& series,
                         const std::vector<std::string>& x_tick_labels) {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool any = false;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) fail(ErrorCode::precondition, "line series '" + s.name + "' has unequal x/y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = any ? std::min(x0, s.x[i]) : s.x[i];
            x1 = any ? std::max(x1, s.x[i]) : s.x[i];
            y0 = any ? std::min(y0, s.y[i]) : s.y[i];
            y1 = any ? std::max(y1, s.y[i]) : s.y[i];
            any = true;
        }
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double w = 480, h = 300, left = 60, top = 40;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * w; };
    auto py = [&](double y) { return top + h - (y - y0) / (y1 - y0) * h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + w + 180 << "\" height=\""
        << top + h + 70 << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<text x=\"10\" y=\"20\" font-size=\"14\">" << escape(title) << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
        << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << num(y1) << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + h << "\" text-anchor=\"end\">" << num(y0) << "</text>\n";
    if (!x_tick_labels.empty()) {
        for (std::size_t i = 0; i < x_tick_labels.size(); ++i) {
            svg << "<text x=\"" << px(static_cast<double>(i)) << "\" y=\"" << top + h + 16
                << "\" text-anchor=\"middle\">" << escape(x_tick_labels[i]) << "</text>\n";
        }
    } else {
        svg << "<text x=\"" << left << "\" y=\"" << top + h + 16 << "\">" << num(x0) << "</text>\n";
        svg << "<text x=\"" << left + w << "\" y=\"" << top + h + 16 << "\" text-anchor=\"end\">" << num(x1)
            << "</text>\n";
    }
    svg << "<text x=\"" << left + w / 2 << "\" y=\"" << top + h + 40 << "\" text-anchor=\"middle\">"
        << escape(x_label) << "</text>\n";
    svg << "<text transform=\"translate(16," << top + h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = kPalette[k % std::size(kPalette)];
        svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) svg << px(s.x[i]) << "," << py(s.y[i]) << " ";
        svg << "\"/>\n";
        svg << "<text x=\"" << left + w + 10 << "\" y=\"" << top + 14 * (k + 1) << "\" fill=\"" << colour << "\">"
            << escape(s.name) << "</text>\n";
    }
    svg << "</svg>\n";
    save(path, svg.str());
}

}  // namespace modalprobe
