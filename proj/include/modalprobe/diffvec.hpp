// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "modalprobe/archive.hpp"
#include "modalprobe/category.hpp"
#include "modalprobe/stimuli.hpp"

namespace modalprobe {

// Minimal pairs for one ordered category pair.
struct LabeledPairs {
    CategoryPair categories;
    std::vector<MinimalPair> pairs;

    LabeledPairs swapped() const;
};

LabeledPairs labeled_pairs(const StimulusSet& stimuli, const CategoryPair& categories);

// Mean of (positive state - negative state) over minimal pairs at one layer.
struct DifferenceVector {
    CategoryPair category_pair;
    std::size_t layer = 0;
    Eigen::VectorXd vector;
    std::size_t n_pairs = 0;
    std::string model_id;
    std::string checkpoint_id;

    bool is_zero() const { return vector.size() == 0 || vector.isZero(0.0); }
};

enum class Outcome { correct, incorrect };

DifferenceVector estimate_vector(const ActivationArchive& archive, const LabeledPairs& pairs,
                                 std::size_t layer);

// correct iff state[pos] . v > state[neg] . v, evaluated as (state[pos] - state[neg]) . v > 0.
// Exact ties are incorrect. A zero vector is rejected as uninformative.
Outcome classify_pair(const DifferenceVector& v, const ActivationArchive& archive,
                      std::string_view positive_id, std::string_view negative_id);

double pairwise_accuracy(const DifferenceVector& v, const ActivationArchive& archive,
                         std::span<const MinimalPair> pairs);

// Deterministic seeded shuffle of pair indices followed by a contiguous split.
// Fold sizes differ by at most one; earlier folds take the remainder.
class FoldPlan {
public:
    FoldPlan(std::size_t n_items, std::size_t folds, std::uint64_t seed);

    std::size_t folds() const { return folds_.size(); }
    const std::vector<std::size_t>& held_out(std::size_t fold) const { return folds_[fold]; }
    std::vector<std::size_t> training(std::size_t fold) const;

private:
    std::size_t n_items_;
    std::vector<std::vector<std::size_t>> folds_;
};

struct CVReport {
    CategoryPair category_pair;
    std::size_t folds = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> fold_accuracy;  // [layer][fold]
    std::vector<double> mean_accuracy;               // [layer]
    std::size_t best_layer = 0;
    std::vector<std::size_t> tie_set;                // ascending
    std::vector<std::string> warnings;

    double best_accuracy() const { return mean_accuracy.at(best_layer); }
};

// Lower median of an ascending, nonempty list of layers.
std::size_t median_layer(std::span<const std::size_t> tie_set);

// Layers whose score equals the maximum (within 1e-12), ascending.
std::vector<std::size_t> max_tie_set(std::span<const double> scores);

CVReport crossval_select_layer(const ActivationArchive& archive, const LabeledPairs& pairs,
                               std::size_t folds = 5, std::uint64_t seed = 0);

DifferenceVector refit_full(const ActivationArchive& archive, const LabeledPairs& pairs,
                            const CVReport& cv);

// Vector bundle: manifest.json plus one <positive>-<negative>.f32 blob per
// vector (d float32 little-endian values).
void write_vectors(const std::filesystem::path& dir, std::span<const DifferenceVector> vectors);
std::vector<DifferenceVector> read_vectors(const std::filesystem::path& dir);

namespace detail {

struct RowPair {
    std::size_t positive;
    std::size_t negative;
};

std::vector<RowPair> resolve_pairs(const ActivationArchive& archive,
                                   std::span<const MinimalPair> pairs);

// m x d matrix of (positive - negative) states at one layer, in double.
Eigen::MatrixXd pair_differences(const LayerMatrix& states, std::span<const RowPair> pairs);

// Fraction of rows with margin strictly above zero.
double fraction_positive(const Eigen::VectorXd& margins);

}  // namespace detail

}  // namespace modalprobe
