// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "modalprobe/archive.hpp"
#include "modalprobe/category.hpp"
#include "modalprobe/stimuli.hpp"

namespace modalprobe {

// Planted linear class structure. At the planted layer category c is drawn
// from N(mu_c, sigma^2 I) with mu_c = (separation / sqrt 2) w_c for random
// orthonormal w_c, so every pair of category means is `separation` apart.
// All other layers are N(0, sigma^2 I).
struct SynthSpec {
    std::size_t layers = 6;
    std::size_t hidden_dim = 32;
    std::size_t per_category = 100;
    std::size_t planted_layer = 3;
    double noise_sd = 1.0;
    double separation = 10.0;
    // summed_logprob = min(0, -base - gap * (3 - rank) + N(0, logprob_sd^2)),
    // rank as in probability_rank; gap 0 removes the ordering signal.
    double logprob_base = 40.0;
    double logprob_gap = 2.0;
    double logprob_sd = 2.0;
    std::uint64_t seed = 0;
    std::string model_id = "synth";
    std::string checkpoint_id = "final";

    void validate() const;
};

struct GroundTruth {
    std::size_t planted_layer = 0;
    std::array<Eigen::VectorXd, 4> category_means;  // canonical category order

    // Unit vector along mu_positive - mu_negative (zero when separation is 0).
    Eigen::VectorXd direction(const CategoryPair& pair) const;
    Eigen::VectorXd mean(Category c) const;

    // Chance that the log-probability ordering is violated for a pair whose
    // ranks differ by `rank_gap`.
    double logprob_violation_rate(int rank_gap) const;

    double logprob_gap = 0.0;
    double logprob_sd = 0.0;
};

struct SynthData {
    ActivationArchive archive;
    StimulusSet stimuli;
    GroundTruth truth;
};

// Stimulus i of each category shares pair_id "p<i>", so every category pair
// yields per_category minimal pairs. Deterministic in spec.seed.
SynthData generate(const SynthSpec& spec);

struct ReferenceSpec {
    std::size_t sentences = 400;
    double dominant_sd = 6.0;
    // Direction given the dominant variance at the planted layer; other layers
    // get a random dominant direction.
    CategoryPair planted_pair{Category::probable, Category::impossible};
    std::uint64_t seed = 1;
};

struct ReferenceData {
    ActivationArchive archive;
    std::vector<Eigen::VectorXd> dominant_directions;  // per layer, unit norm
};

ReferenceData generate_reference(const SynthSpec& spec, const GroundTruth& truth,
                                 const ReferenceSpec& reference);

// Known softmax generator over (standardized) feature columns.
struct SoftResponseGenerator {
    Eigen::MatrixXd weights;  // K x p
    Eigen::VectorXd bias;     // K
    std::vector<std::string> labels;
};

// K = 4 canonical labels over the three feature-space columns.
SoftResponseGenerator default_response_generator();

// softmax(W x + b) for every row of X.
Eigen::MatrixXd generate_soft_targets(const Eigen::MatrixXd& X, const SoftResponseGenerator& gen);

// Projections of the archive's planted layer onto the three feature-space
// mean differences (mu_a - mu_b), unstandardized.
Eigen::MatrixXd planted_projections(const SynthData& data);

// Responses from the generator applied to the z-scored planted projections.
ResponseTable planted_responses(const SynthData& data, const SoftResponseGenerator& gen,
                                int respondent_count = 20);

// Ratings with known relations to the planted projections:
// EventLikelihood = 2 * z(probable-improbable) + 1 + noise,
// Imageability    = -1.5 * z(impossible-inconceivable) + 4 + noise,
// Unrelated       = independent noise.
RatingsTable planted_ratings(const SynthData& data, double noise_sd = 0.1,
                             std::uint64_t seed = 7);

}  // namespace modalprobe
