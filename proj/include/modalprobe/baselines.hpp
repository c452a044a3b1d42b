// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "modalprobe/archive.hpp"
#include "modalprobe/diffvec.hpp"
#include "modalprobe/numerics.hpp"

namespace modalprobe {

// Summed log-probability ordering: the stimulus whose category ranks higher in
// inconceivable < impossible < improbable < probable must have strictly greater
// summed log-probability. Ties are incorrect.
Outcome logprob_classify_pair(const ActivationArchive& archive,
                              std::string_view id_a, Category cat_a,
                              std::string_view id_b, Category cat_b);

struct MethodScore {
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
};

// Log-probability accuracy on the held-out folds of the same split the
// projection methods use, so scores are paired.
MethodScore logprob_crossval(const ActivationArchive& archive, const LabeledPairs& pairs,
                             std::size_t folds, std::uint64_t seed);

double logprob_accuracy(const ActivationArchive& archive, const LabeledPairs& pairs);

// Per-layer candidate directions: each layer holds a d x k matrix of unit columns.
struct ReferenceDirections {
    std::string source;
    std::vector<PrincipalComponents> layers;

    std::size_t components() const;
    std::size_t hidden_dim() const;
};

inline constexpr std::size_t kReferenceComponents = 3;
inline constexpr std::size_t kReferenceSentenceCap = 2000;

ReferenceDirections fit_reference_pcs(const ActivationArchive& reference,
                                       std::size_t k = kReferenceComponents);

// One standard-normal direction per layer, unit-normalized. Variances are left at 1.
ReferenceDirections sample_random_directions(std::size_t layers, std::size_t hidden_dim,
                                             std::uint64_t seed);

// manifest.json plus layer_<k>.f32 holding k x d row-major float32 (one direction per row).
void write_reference_directions(const std::filesystem::path& dir, const ReferenceDirections& dirs);
ReferenceDirections read_reference_directions(const std::filesystem::path& dir);

struct ProjectionSelection {
    std::size_t layer = 0;
    std::size_t component = 0;
    int orientation = 1;  // fit on all pairs for the selected candidate
    // Per-layer rows hold the best component of that layer.
    CVReport cv;
    std::vector<std::vector<double>> component_mean_accuracy;  // [layer][component]
    Eigen::VectorXd direction;  // orientation * selected unit direction

    double held_out_accuracy() const { return cv.best_accuracy(); }
};

// Cross-validated selection over candidates (layer, component, +/-1). The sign
// is fit on the training folds; the best mean held-out accuracy wins, with the
// median-layer tie-break and then the lowest component index.
ProjectionSelection projection_select(const ActivationArchive& archive, const LabeledPairs& pairs,
                                      const ReferenceDirections& directions, std::size_t folds,
                                      std::uint64_t seed);

ProjectionSelection pc_baseline_select(const ActivationArchive& archive, const LabeledPairs& pairs,
                                       const ReferenceDirections& directions, std::size_t folds,
                                       std::uint64_t seed);

// Directions come from sample_random_directions(derive_direction_seed(seed)).
ProjectionSelection random_baseline_select(const ActivationArchive& archive,
                                           const LabeledPairs& pairs, std::size_t folds,
                                           std::uint64_t seed);

std::uint64_t derive_direction_seed(std::uint64_t seed);

// Orientation that maximises accuracy on the given difference rows; ties go to
// the sign of the summed margin, then +1.
int fit_orientation(const Eigen::MatrixXd& differences, const Eigen::VectorXd& direction);

}  // namespace modalprobe
