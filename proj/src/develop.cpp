// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/develop.hpp"

#include <algorithm>

#include "modalprobe/error.hpp"
#include "modalprobe/parallel.hpp"
#include "modalprobe/table.hpp"

namespace modalprobe {

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::checkpoint: return "checkpoint";
        case SweepAxis::layer: return "layer";
        case SweepAxis::scale: return "scale";
    }
    return "?";
}

SweepAxis parse_sweep_axis(std::string_view text) {
    if (text == "checkpoint") return SweepAxis::checkpoint;
    if (text == "layer") return SweepAxis::layer;
    if (text == "scale") return SweepAxis::scale;
    fail(ErrorCode::usage, "unknown sweep axis '" + std::string(text) + "' (checkpoint, layer, scale)");
}

SweepResult run_sweep(SweepAxis axis, std::span<const SweepInput> inputs,
                      std::span<const CategoryPair> pairs, std::size_t folds, std::uint64_t seed) {
    if (inputs.empty()) fail(ErrorCode::precondition, "sweep needs at least one archive");
    if (pairs.empty()) fail(ErrorCode::precondition, "sweep needs at least one category pair");
    if (axis == SweepAxis::layer && inputs.size() != 1) {
        fail(ErrorCode::precondition, "a layer sweep takes exactly one archive");
    }
    for (const auto& p : pairs) {
        if (p.positive == p.negative) fail(ErrorCode::precondition, "sweep pair needs distinct categories");
    }

    const std::size_t P = pairs.size();
    std::vector<CVReport> reports(inputs.size() * P);
    // Each cell is fit fresh; nothing is shared between archives.
    parallel_for(reports.size(), [&](std::size_t cell) {
        const auto& in = inputs[cell / P];
        if (!in.archive || !in.stimuli) fail(ErrorCode::precondition, "sweep input '" + in.label + "' is incomplete");
        const LabeledPairs lp = labeled_pairs(*in.stimuli, pairs[cell % P]);
        try {
            reports[cell] = crossval_select_layer(*in.archive, lp, folds, seed);
        } catch (const Error& e) {
            throw Error(e.code(), "sweep entry '" + in.label + "', pair " + to_string(pairs[cell % P]) +
                                      ": " + e.what());
        }
    });

    SweepResult result;
    result.axis = axis;
    for (std::size_t e = 0; e < inputs.size(); ++e) {
        for (std::size_t p = 0; p < P; ++p) {
            const CVReport& cv = reports[e * P + p];
            if (axis == SweepAxis::layer) {
                for (std::size_t l = 0; l < cv.mean_accuracy.size(); ++l) {
                    result.rows.push_back({l, std::to_string(l), pairs[p], cv.mean_accuracy[l], std::nullopt});
                }
            } else {
                result.rows.push_back({e, inputs[e].label, pairs[p], cv.best_accuracy(), cv.best_layer});
            }
        }
    }
    result.reports = std::move(reports);
    return result;
}

SweepResult run_sweep(const SweepSpec& spec) {
    std::vector<ActivationArchive> archives;
    std::vector<StimulusSet> stimuli;
    archives.reserve(spec.entries.size());
    stimuli.reserve(spec.entries.size());
    for (const auto& entry : spec.entries) {
        try {
            archives.push_back(read_archive(entry.archive));
            const auto& table = entry.stimuli.empty() ? spec.stimuli : entry.stimuli;
            if (table.empty()) fail(ErrorCode::usage, "no stimulus table given");
            stimuli.push_back(read_stimuli(table));
        } catch (const Error& e) {
            throw Error(e.code(), "sweep entry '" + entry.label + "' (" + entry.archive.string() + "): " + e.what());
        }
    }
    std::vector<SweepInput> inputs;
    for (std::size_t i = 0; i < spec.entries.size(); ++i) {
        inputs.push_back({spec.entries[i].label, &archives[i], &stimuli[i]});
    }
    return run_sweep(spec.axis, inputs, spec.pairs, spec.folds, spec.seed);
}

std::vector<EmergencePoint> emergence_order(const SweepResult& result, double threshold) {
    std::vector<EmergencePoint> out;
    for (const auto& row : result.rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const EmergencePoint& e) { return e.pair == row.pair; });
        if (it == out.end()) {
            out.push_back({row.pair, std::nullopt});
            it = std::prev(out.end());
        }
        if (row.accuracy >= threshold && (!it->first_position || row.position < *it->first_position)) {
            it->first_position = row.position;
        }
    }
    return out;
}

void write_sweep_table(const std::filesystem::path& path, const SweepResult& result) {
    Table table;
    table.header = {"axis", "position", "axis_value", "pair", "accuracy", "best_layer"};
    for (const auto& row : result.rows) {
        table.rows.push_back({std::string(to_string(result.axis)), std::to_string(row.position), row.axis_value,
                              to_string(row.pair), format_real(row.accuracy),
                              row.best_layer ? std::to_string(*row.best_layer) : std::string("NA")});
    }
    write_table(path, table);
}

}  // namespace modalprobe
