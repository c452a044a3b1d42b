// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "modalprobe/category.hpp"

namespace modalprobe {

enum class Adversarial { none, lexical, semantic };

struct Stimulus {
    std::string id;
    std::string text;
    std::optional<Category> category;
    std::optional<std::string> pair_id;
    std::string source;
    std::optional<Adversarial> adversarial;
};

class StimulusSet {
public:
    StimulusSet() = default;
    explicit StimulusSet(std::vector<Stimulus> items);

    const std::vector<Stimulus>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    // First stimulus with this id, or nullptr.
    const Stimulus* find(std::string_view id) const;

    // Only stimuli whose source tag equals `source`.
    StimulusSet filter_source(std::string_view source) const;

private:
    std::vector<Stimulus> items_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// Stimulus-level population response proportions over an ordered label set.
struct HumanResponses {
    std::string stimulus_id;
    std::vector<double> distribution;
    int respondent_count = 0;
};

struct ResponseTable {
    std::vector<std::string> labels;
    std::vector<HumanResponses> rows;

    const HumanResponses* find(std::string_view id) const;
};

// Per-stimulus mean ratings. A feature may be missing for a stimulus
// (written as "NA" in the table); missing cells are excluded per feature.
struct FeatureRatings {
    std::string stimulus_id;
    std::vector<std::optional<double>> ratings;  // aligned with RatingsTable::features
};

struct RatingsTable {
    std::vector<std::string> features;
    std::vector<FeatureRatings> rows;
};

// Table I/O. Stimuli columns: id, text, category, pair_id, source, adversarial
// (the last four may be empty). Responses: id, one column per label,
// respondent_count. Ratings: id, one column per feature.
StimulusSet read_stimuli(const std::filesystem::path& path);
void write_stimuli(const std::filesystem::path& path, const StimulusSet& stimuli);
ResponseTable read_responses(const std::filesystem::path& path);
void write_responses(const std::filesystem::path& path, const ResponseTable& responses);
RatingsTable read_ratings(const std::filesystem::path& path);
void write_ratings(const std::filesystem::path& path, const RatingsTable& ratings);

struct ValidationIssue {
    std::string rule;  // e.g. "duplicate id", "dangling pair_id", "sum != 1"
    std::string stimulus_id;
    std::string message;
};

struct Exclusion {
    std::string stimulus_id;
    std::string reason;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    std::vector<Exclusion> excluded;
    StimulusSet kept_stimuli;
    ResponseTable kept_responses;

    bool clean() const { return issues.empty() && excluded.empty(); }
};

inline constexpr int kMinRespondents = 4;

// Flags duplicate ids, dangling pair_ids, same-category pair members, response
// rows that are not probability vectors, and responses for unknown stimuli.
// When responses are supplied, stimuli with fewer than four respondents, no
// response row, or an invalid distribution are dropped and listed in `excluded`.
ValidationReport validate_stimuli(const StimulusSet& stimuli,
                                  const ResponseTable* responses = nullptr);

// Minimal pair of stimulus ids, positive category first.
struct MinimalPair {
    std::string positive_id;
    std::string negative_id;

    MinimalPair swapped() const { return {negative_id, positive_id}; }
    friend bool operator==(const MinimalPair&, const MinimalPair&) = default;
};

// For every pair_id group holding one stimulus of each category in `pair`,
// emits (positive member, negative member). Groups are visited in order of
// first appearance.
std::vector<MinimalPair> minimal_pairs(const StimulusSet& stimuli, const CategoryPair& pair);

}  // namespace modalprobe
