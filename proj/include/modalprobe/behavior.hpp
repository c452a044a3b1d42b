// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "modalprobe/archive.hpp"
#include "modalprobe/diffvec.hpp"
#include "modalprobe/numerics.hpp"
#include "modalprobe/stimuli.hpp"

namespace modalprobe {

struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;  // population standard deviation

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

// Column means and (population) standard deviations; a zero-variance column
// is a numeric error.
Standardization fit_standardization(const Eigen::MatrixXd& X);

// Projections of every archived stimulus onto a set of difference vectors,
// each taken at its own layer. `raw` always holds the plain dot products;
// `features` equals `raw` or its z-scored version.
struct FeatureSpace {
    std::vector<std::string> stimulus_ids;
    std::vector<std::string> column_names;
    Eigen::MatrixXd raw;
    Eigen::MatrixXd features;
    std::optional<Standardization> standardization;

    std::size_t size() const { return stimulus_ids.size(); }
    // Rows for the given ids, in that order. Standardization is recomputed
    // over the subset when the source was standardized.
    FeatureSpace subset(std::span<const std::string> ids) const;
    Eigen::VectorXd column(std::size_t j) const { return raw.col(static_cast<Eigen::Index>(j)); }
};

FeatureSpace build_feature_space(const ActivationArchive& archive,
                                 std::span<const DifferenceVector> vectors, bool standardize);

// Softmax regression: p(k | x) = softmax(W x + b)_k.
struct SoftLogisticModel {
    Eigen::MatrixXd weights;  // K x p
    Eigen::VectorXd bias;     // K
    std::vector<std::string> labels;

    Eigen::MatrixXd predict(const Eigen::MatrixXd& X) const;  // n x K
};

// Row-wise softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Mean over rows of -sum_k T_ik ln p_ik.
double soft_cross_entropy(const SoftLogisticModel& model, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& targets);

// Full-batch Adam from zero initialization on the soft-label cross-entropy.
SoftLogisticModel fit_soft_logreg(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                                  std::vector<std::string> labels, const AdamConfig& config = {});

// Targets are looked up by stimulus id; every feature row needs a response row.
SoftLogisticModel fit_soft_logreg(const FeatureSpace& features, const ResponseTable& targets,
                                  const AdamConfig& config = {});

// n x K empirical distributions aligned with the feature rows.
Eigen::MatrixXd align_targets(const FeatureSpace& features, const ResponseTable& targets);

struct LooOptions {
    bool standardize = true;  // z-score on each training fold
    AdamConfig adam;
};

// For every row i, fits on all other rows and predicts row i. Uses raw features.
// With standardization on, a column that is constant within a training fold is
// centred but not scaled.
Eigen::MatrixXd loo_predict(const Eigen::MatrixXd& raw_features, const Eigen::MatrixXd& targets,
                            const LooOptions& options = {});

Eigen::MatrixXd loo_predict(const FeatureSpace& features, const ResponseTable& targets,
                            const LooOptions& options = {});

struct BehaviorReport {
    std::vector<std::string> stimulus_ids;
    std::vector<std::string> labels;
    Eigen::MatrixXd predicted;  // n x K
    Eigen::MatrixXd empirical;  // n x K
    // Empty when the correlation is undefined (a constant side); `warnings`
    // then says which input to inspect.
    std::optional<double> pearson_nminus1;
    double mse = 0.0;
    std::optional<double> entropy_pearson;
    std::vector<std::string> warnings;
};

// pearson_nminus1: Pearson over the stacked first K-1 columns (last label
// dropped) of predicted vs. empirical. mse: mean over stimuli of the mean
// squared difference over all K entries. entropy_pearson: Pearson between
// per-stimulus entropies.
BehaviorReport evaluate_predictions(const Eigen::MatrixXd& predicted,
                                    const Eigen::MatrixXd& empirical,
                                    std::vector<std::string> labels,
                                    std::vector<std::string> stimulus_ids = {});

// Writes <dir>/behavior.tsv (id, empirical_<label>..., predicted_<label>...,
// empirical_entropy, predicted_entropy) and <dir>/metrics.json.
void write_behavior_report(const std::filesystem::path& dir, const BehaviorReport& report);

}  // namespace modalprobe
