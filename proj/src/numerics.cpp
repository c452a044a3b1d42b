// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "modalprobe/error.hpp"
#include "modalprobe/table.hpp"

namespace modalprobe {

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        fail(ErrorCode::precondition, "pearson: length mismatch (" + std::to_string(x.size()) +
                                          " vs " + std::to_string(y.size()) + ")");
    }
    const std::size_t n = x.size();
    if (n < 2) fail(ErrorCode::precondition, "pearson: need at least two points");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        fail(ErrorCode::numeric, "undefined correlation: constant input");
    }
    const double r = sxy / std::sqrt(sxx * syy);
    if (!std::isfinite(r)) fail(ErrorCode::numeric, "undefined correlation: non-finite input");
    return std::clamp(r, -1.0, 1.0);
}

void check_distribution(std::span<const double> p, double tol) {
    if (p.empty()) fail(ErrorCode::precondition, "empty probability vector");
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0) {
            fail(ErrorCode::precondition, "probability vector has a negative or non-finite entry");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
        fail(ErrorCode::precondition, "probability vector sums to " + format_real(sum));
    }
}

double entropy(std::span<const double> p) {
    check_distribution(p);
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        fail(ErrorCode::precondition, "mean_squared_error: need equal, nonzero lengths");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) fail(ErrorCode::precondition, "cosine_similarity: dimension mismatch");
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) fail(ErrorCode::numeric, "cosine_similarity: zero vector");
    return a.dot(b) / (na * nb);
}

namespace {

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
}

}  // namespace

PrincipalComponents pca_directions(const Eigen::MatrixXd& X, std::size_t k) {
    const auto n = static_cast<std::size_t>(X.rows());
    const auto d = static_cast<std::size_t>(X.cols());
    if (n < 2) fail(ErrorCode::precondition, "pca_directions: need at least two rows");
    if (k == 0 || k > std::min(n - 1, d)) {
        fail(ErrorCode::precondition, "pca_directions: k = " + std::to_string(k) +
                                          " must satisfy 1 <= k <= min(n-1, d) = " +
                                          std::to_string(std::min(n - 1, d)));
    }
    if (!X.allFinite()) fail(ErrorCode::numeric, "pca_directions: non-finite input");

    const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
    const double total = centered.squaredNorm();
    if (!(total > 0.0)) fail(ErrorCode::numeric, "degenerate data: zero total variance");
    const double denom = static_cast<double>(n - 1);
    const auto ki = static_cast<Eigen::Index>(k);

    PrincipalComponents out;
    out.directions.resize(static_cast<Eigen::Index>(d), ki);
    out.variances.resize(ki);

    if (n - 1 >= d) {
        const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        if (eig.info() != Eigen::Success) fail(ErrorCode::numeric, "pca_directions: eigensolver failed");
        for (Eigen::Index j = 0; j < ki; ++j) {
            const Eigen::Index src = static_cast<Eigen::Index>(d) - 1 - j;
            out.directions.col(j) = eig.eigenvectors().col(src);
            out.variances[j] = std::max(0.0, eig.eigenvalues()[src]);
        }
    } else {
        // Gram route: G = Xc Xc^T shares the nonzero spectrum of Xc^T Xc, and
        // Xc^T u maps each Gram eigenvector onto the matching covariance eigenvector.
        const Eigen::MatrixXd gram = centered * centered.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success) fail(ErrorCode::numeric, "pca_directions: eigensolver failed");
        for (Eigen::Index j = 0; j < ki; ++j) {
            const Eigen::Index src = static_cast<Eigen::Index>(n) - 1 - j;
            out.directions.col(j) = centered.transpose() * eig.eigenvectors().col(src);
            out.variances[j] = std::max(0.0, eig.eigenvalues()[src]) / denom;
        }
        // Re-orthonormalize; near-null components lose orthogonality otherwise.
        for (Eigen::Index j = 0; j < ki; ++j) {
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index i = 0; i < j; ++i) {
                    out.directions.col(j) -= out.directions.col(i).dot(out.directions.col(j)) *
                                             out.directions.col(i);
                }
            }
            const double norm = out.directions.col(j).norm();
            if (!(norm > 0.0)) fail(ErrorCode::numeric, "degenerate data: rank below k");
            out.directions.col(j) /= norm;
        }
    }
    for (Eigen::Index j = 0; j < ki; ++j) fix_sign(out.directions.col(j));
    return out;
}

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) fail(ErrorCode::precondition, "adam: learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) fail(ErrorCode::precondition, "adam: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) fail(ErrorCode::precondition, "adam: beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) fail(ErrorCode::precondition, "adam: epsilon must be > 0");
    if (epochs <= 0) fail(ErrorCode::precondition, "adam: epochs must be positive");
}

Eigen::VectorXd adam_fit(const GradientFn& gradient, Eigen::VectorXd params,
                         const AdamConfig& config, const EpochObserver& observer) {
    config.validate();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
    double beta1_t = 1.0;
    double beta2_t = 1.0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const Eigen::VectorXd g = gradient(params);
        if (g.size() != params.size()) {
            fail(ErrorCode::precondition, "adam: gradient has " + std::to_string(g.size()) +
                                              " entries, parameters have " + std::to_string(params.size()));
        }
        if (!g.allFinite()) {
            fail(ErrorCode::numeric, "adam: non-finite gradient at epoch " + std::to_string(epoch) +
                                         " (parameter norm " + format_real(params.norm()) + ")");
        }
        beta1_t *= config.beta1;
        beta2_t *= config.beta2;
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
        const Eigen::VectorXd m_hat = m / (1.0 - beta1_t);
        const Eigen::VectorXd v_hat = v / (1.0 - beta2_t);
        params.array() -= config.learning_rate * m_hat.array() / (v_hat.array().sqrt() + config.epsilon);
        if (observer) observer(epoch, params);
    }
    return params;
}

}  // namespace modalprobe
