// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "modalprobe/stimuli.hpp"

namespace modalprobe {

// One row per stimulus, one column per hidden unit. Row-major so a layer maps
// byte-for-byte onto its on-disk blob.
using LayerMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::string_view kDefaultStreamPoint = "residual_block_output";
inline constexpr int kArchiveFormatVersion = 1;

std::vector<std::string> canonical_labels();

// Final-"." hidden states for every layer of one model checkpoint, plus the
// summed token log-probability of each sentence. Row i of every layer belongs
// to stimulus_ids[i].
struct ActivationArchive {
    std::string model_id;
    std::string checkpoint_id;
    std::string stream_point{kDefaultStreamPoint};
    std::vector<std::string> labels = canonical_labels();
    std::vector<std::string> stimulus_ids;
    std::vector<LayerMatrix> layers;
    std::vector<double> summed_logprob;

    std::size_t layer_count() const { return layers.size(); }
    std::size_t hidden_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().cols()); }
    std::size_t size() const { return stimulus_ids.size(); }
};

// Throws a validation error naming the first violated rule.
void validate_archive(const ActivationArchive& archive);

// Throws unless the archive ids and the stimulus set ids are the same set.
void check_matches_stimuli(const ActivationArchive& archive, const StimulusSet& stimuli);

// Directory layout:
//   manifest.json     model_id, checkpoint_id, stream_point, layer_count,
//                     hidden_dim, n, labels, stimulus_ids, summed_logprob
//   layer_<k>.f32     n*d float32 little-endian values, row-major, no header
void write_archive(const ActivationArchive& archive, const std::filesystem::path& dir);
ActivationArchive read_archive(const std::filesystem::path& dir);

// Raw float32 little-endian blob helpers shared with the vector formats.
void write_f32_blob(const std::filesystem::path& path, std::span<const float> values);
std::vector<float> read_f32_blob(const std::filesystem::path& path, std::size_t expected_count);

// id -> row lookup for one archive.
class RowIndex {
public:
    explicit RowIndex(const ActivationArchive& archive);
    std::optional<std::size_t> find(std::string_view id) const;
    std::size_t at(std::string_view id) const;  // throws precondition error

private:
    std::unordered_map<std::string, std::size_t> rows_;
};

}  // namespace modalprobe
