// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "modalprobe/archive.hpp"
#include "modalprobe/category.hpp"
#include "modalprobe/diffvec.hpp"
#include "modalprobe/stimuli.hpp"

namespace modalprobe {

enum class SweepAxis { checkpoint, layer, scale };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view text);

struct SweepEntry {
    std::string label;  // axis value, e.g. a step count or parameter count
    std::filesystem::path archive;
    std::filesystem::path stimuli;  // empty: use SweepSpec::stimuli
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::checkpoint;
    std::vector<SweepEntry> entries;  // sweep order
    std::filesystem::path stimuli;
    std::vector<CategoryPair> pairs;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
};

struct SweepRow {
    std::size_t position = 0;  // index along the sweep
    std::string axis_value;
    CategoryPair pair;
    double accuracy = 0.0;
    std::optional<std::size_t> best_layer;  // checkpoint/scale axes
};

struct SweepResult {
    SweepAxis axis = SweepAxis::checkpoint;
    std::vector<SweepRow> rows;
    std::vector<CVReport> reports;  // one per (entry, pair), entry-major
};

// In-memory inputs for one sweep position.
struct SweepInput {
    std::string label;
    const ActivationArchive* archive = nullptr;
    const StimulusSet* stimuli = nullptr;
};

SweepResult run_sweep(SweepAxis axis, std::span<const SweepInput> inputs,
                      std::span<const CategoryPair> pairs, std::size_t folds, std::uint64_t seed);

// Reads every archive/stimulus table first; a failure names the entry.
SweepResult run_sweep(const SweepSpec& spec);

struct EmergencePoint {
    CategoryPair pair;
    std::optional<std::size_t> first_position;  // first sweep position with accuracy >= threshold
};

std::vector<EmergencePoint> emergence_order(const SweepResult& result, double threshold = 0.9);

// Long format: axis, position, axis_value, pair, accuracy, best_layer.
void write_sweep_table(const std::filesystem::path& path, const SweepResult& result);

}  // namespace modalprobe
