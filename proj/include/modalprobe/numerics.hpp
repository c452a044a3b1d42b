// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include <Eigen/Core>

namespace modalprobe {

// Sample Pearson correlation. Throws on length mismatch, fewer than two
// points, or a constant input ("undefined correlation").
double pearson(std::span<const double> x, std::span<const double> y);

// Shannon entropy in nats; 0 ln 0 is taken as 0.
double entropy(std::span<const double> p);

// Throws unless entries are nonnegative, finite and sum to 1 within tol.
void check_distribution(std::span<const double> p, double tol = 1e-9);

double mean_squared_error(std::span<const double> a, std::span<const double> b);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct PrincipalComponents {
    Eigen::MatrixXd directions;  // d x k, unit-norm columns
    Eigen::VectorXd variances;   // k, descending
};

// Top-k principal directions of the column-centred sample covariance of X
// (n x d). Each column's largest-magnitude entry is made positive.
// When n - 1 < d the eigenproblem is solved on the n x n Gram matrix instead,
// which spans the same nonzero spectrum.
PrincipalComponents pca_directions(const Eigen::MatrixXd& X, std::size_t k);

struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 200;

    void validate() const;
};

using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
// Called after every epoch with the 1-based epoch number and current parameters.
using EpochObserver = std::function<void(int, const Eigen::VectorXd&)>;

// Exactly config.epochs full-batch Adam updates with bias-corrected moments.
// A non-finite gradient aborts with a numeric error naming the epoch and the
// parameter norm at that point.
Eigen::VectorXd adam_fit(const GradientFn& gradient, Eigen::VectorXd init,
                         const AdamConfig& config, const EpochObserver& observer = {});

}  // namespace modalprobe
