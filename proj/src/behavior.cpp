// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/behavior.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "modalprobe/error.hpp"
#include "modalprobe/parallel.hpp"
#include "modalprobe/table.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace modalprobe {

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) fail(ErrorCode::precondition, "standardization: column count mismatch");
    return (X.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

namespace {

Standardization fit_columns(const Eigen::MatrixXd& X, bool allow_constant) {
    if (X.rows() < 2) fail(ErrorCode::precondition, "standardization needs at least two rows");
    Standardization s;
    s.mean = X.colwise().mean().transpose();
    s.sd.resize(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double var = (X.col(j).array() - s.mean[j]).square().mean();
        if (!(var > 0.0)) {
            if (!allow_constant) {
                fail(ErrorCode::numeric, "zero-variance column " + std::to_string(j) + " under standardization");
            }
            s.sd[j] = 1.0;
        } else {
            s.sd[j] = std::sqrt(var);
        }
    }
    return s;
}

std::string column_name(const CategoryPair& pair) {
    return std::string(to_string(pair.positive)) + "-" + std::string(to_string(pair.negative));
}

}  // namespace

Standardization fit_standardization(const Eigen::MatrixXd& X) { return fit_columns(X, false); }

FeatureSpace FeatureSpace::subset(std::span<const std::string> ids) const {
    std::unordered_map<std::string, Eigen::Index> row;
    for (std::size_t i = 0; i < stimulus_ids.size(); ++i) row.emplace(stimulus_ids[i], static_cast<Eigen::Index>(i));
    FeatureSpace out;
    out.column_names = column_names;
    out.raw.resize(static_cast<Eigen::Index>(ids.size()), raw.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = row.find(ids[i]);
        if (it == row.end()) fail(ErrorCode::precondition, "feature space has no stimulus '" + ids[i] + "'");
        out.raw.row(static_cast<Eigen::Index>(i)) = raw.row(it->second);
        out.stimulus_ids.push_back(ids[i]);
    }
    if (standardization) {
        out.standardization = fit_standardization(out.raw);
        out.features = out.standardization->apply(out.raw);
    } else {
        out.features = out.raw;
    }
    return out;
}

FeatureSpace build_feature_space(const ActivationArchive& archive,
                                 std::span<const DifferenceVector> vectors, bool standardize) {
    if (vectors.empty()) fail(ErrorCode::precondition, "feature space needs at least one vector");
    FeatureSpace fs;
    fs.stimulus_ids = archive.stimulus_ids;
    fs.raw.resize(static_cast<Eigen::Index>(archive.size()), static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t j = 0; j < vectors.size(); ++j) {
        const auto& v = vectors[j];
        if (v.layer >= archive.layer_count()) {
            fail(ErrorCode::precondition, "vector " + column_name(v.category_pair) + " uses layer " +
                                              std::to_string(v.layer) + " beyond the archive");
        }
        if (static_cast<std::size_t>(v.vector.size()) != archive.hidden_dim()) {
            fail(ErrorCode::precondition, "vector " + column_name(v.category_pair) +
                                              " does not match the archive hidden_dim");
        }
        if (!v.model_id.empty() && !archive.model_id.empty() && v.model_id != archive.model_id) {
            fail(ErrorCode::precondition, "vector " + column_name(v.category_pair) + " comes from model '" +
                                              v.model_id + "', archive is '" + archive.model_id + "'");
        }
        fs.raw.col(static_cast<Eigen::Index>(j)) = archive.layers[v.layer].cast<double>() * v.vector;
        fs.column_names.push_back(column_name(v.category_pair));
    }
    if (standardize) {
        fs.standardization = fit_standardization(fs.raw);
        fs.features = fs.standardization->apply(fs.raw);
    } else {
        fs.features = fs.raw;
    }
    return fs;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out = logits.colwise() - logits.rowwise().maxCoeff();
    out = out.array().exp();
    out = out.array().colwise() / out.rowwise().sum().array();
    return out;
}

Eigen::MatrixXd SoftLogisticModel::predict(const Eigen::MatrixXd& X) const {
    if (X.cols() != weights.cols()) fail(ErrorCode::precondition, "predict: feature count mismatch");
    return softmax_rows((X * weights.transpose()).rowwise() + bias.transpose());
}

namespace {

Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits) {
    const Eigen::MatrixXd shifted = logits.colwise() - logits.rowwise().maxCoeff();
    const Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
    return shifted.colwise() - lse;
}

void check_targets(const Eigen::MatrixXd& targets) {
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
        const Eigen::VectorXd row = targets.row(i).transpose();
        check_distribution(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    }
}

}  // namespace

double soft_cross_entropy(const SoftLogisticModel& model, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& targets) {
    const Eigen::MatrixXd logp = log_softmax_rows((X * model.weights.transpose()).rowwise() + model.bias.transpose());
    return -(targets.array() * logp.array()).sum() / static_cast<double>(X.rows());
}

SoftLogisticModel fit_soft_logreg(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                                  std::vector<std::string> labels, const AdamConfig& config) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const Eigen::Index K = targets.cols();
    if (K < 2) fail(ErrorCode::precondition, "soft logistic regression needs at least two labels");
    if (targets.rows() != n || n == 0) fail(ErrorCode::precondition, "one target distribution per stimulus required");
    if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != K) {
        fail(ErrorCode::precondition, "label count does not match target width");
    }
    if (!X.allFinite()) fail(ErrorCode::numeric, "non-finite features");
    check_targets(targets);

    // theta = [vec(W) column-major (K x p), b]
    const Eigen::Index nw = K * p;
    auto unpack = [&](const Eigen::VectorXd& theta, Eigen::MatrixXd& W, Eigen::VectorXd& b) {
        W = Eigen::Map<const Eigen::MatrixXd>(theta.data(), K, p);
        b = theta.tail(K);
    };
    const double inv_n = 1.0 / static_cast<double>(n);
    auto gradient = [&](const Eigen::VectorXd& theta) {
        Eigen::MatrixXd W;
        Eigen::VectorXd b;
        unpack(theta, W, b);
        const Eigen::MatrixXd P = softmax_rows((X * W.transpose()).rowwise() + b.transpose());
        const Eigen::MatrixXd G = (P - targets) * inv_n;  // n x K
        Eigen::VectorXd g(nw + K);
        Eigen::Map<Eigen::MatrixXd>(g.data(), K, p) = G.transpose() * X;
        g.tail(K) = G.colwise().sum().transpose();
        return g;
    };

    const Eigen::VectorXd theta = adam_fit(gradient, Eigen::VectorXd::Zero(nw + K), config);

    SoftLogisticModel model;
    unpack(theta, model.weights, model.bias);
    model.labels = std::move(labels);
    const double loss = soft_cross_entropy(model, X, targets);
    if (!std::isfinite(loss)) fail(ErrorCode::numeric, "non-finite loss after fitting");
    return model;
}

Eigen::MatrixXd align_targets(const FeatureSpace& features, const ResponseTable& targets) {
    std::unordered_map<std::string, const HumanResponses*> by_id;
    for (const auto& h : targets.rows) by_id.emplace(h.stimulus_id, &h);
    const auto K = static_cast<Eigen::Index>(targets.labels.size());
    Eigen::MatrixXd T(static_cast<Eigen::Index>(features.size()), K);
    for (std::size_t i = 0; i < features.size(); ++i) {
        auto it = by_id.find(features.stimulus_ids[i]);
        if (it == by_id.end()) {
            fail(ErrorCode::precondition, "no response distribution for stimulus '" + features.stimulus_ids[i] + "'");
        }
        if (static_cast<Eigen::Index>(it->second->distribution.size()) != K) {
            fail(ErrorCode::validation, "response row for '" + features.stimulus_ids[i] + "' has the wrong width");
        }
        for (Eigen::Index k = 0; k < K; ++k) {
            T(static_cast<Eigen::Index>(i), k) = it->second->distribution[static_cast<std::size_t>(k)];
        }
    }
    return T;
}

SoftLogisticModel fit_soft_logreg(const FeatureSpace& features, const ResponseTable& targets,
                                  const AdamConfig& config) {
    return fit_soft_logreg(features.features, align_targets(features, targets), targets.labels, config);
}

namespace {

Eigen::MatrixXd loo_impl(const Eigen::MatrixXd& X, const Eigen::MatrixXd& T, const LooOptions& options,
                         const std::vector<std::string>* ids) {
    const Eigen::Index n = X.rows();
    if (n < 3) fail(ErrorCode::precondition, "leave-one-out needs at least three stimuli");
    if (T.rows() != n) fail(ErrorCode::precondition, "one target distribution per stimulus required");
    Eigen::MatrixXd predictions(n, T.cols());

    parallel_for(static_cast<std::size_t>(n), [&](std::size_t held) {
        const auto h = static_cast<Eigen::Index>(held);
        Eigen::MatrixXd Xtr(n - 1, X.cols());
        Eigen::MatrixXd Ttr(n - 1, T.cols());
        for (Eigen::Index i = 0, r = 0; i < n; ++i) {
            if (i == h) continue;
            Xtr.row(r) = X.row(i);
            Ttr.row(r) = T.row(i);
            ++r;
        }
        Eigen::MatrixXd xtest = X.row(h);
        try {
            if (options.standardize) {
                const Standardization s = fit_columns(Xtr, true);
                Xtr = s.apply(Xtr);
                xtest = s.apply(xtest);
            }
            const SoftLogisticModel model = fit_soft_logreg(Xtr, Ttr, {}, options.adam);
            predictions.row(h) = model.predict(xtest).row(0);
        } catch (const Error& e) {
            std::string where = "leave-one-out fit for held-out index " + std::to_string(held);
            if (ids) where += " ('" + (*ids)[held] + "')";
            throw Error(e.code(), where + ": " + e.what());
        }
    });
    return predictions;
}

}  // namespace

Eigen::MatrixXd loo_predict(const Eigen::MatrixXd& raw_features, const Eigen::MatrixXd& targets,
                            const LooOptions& options) {
    return loo_impl(raw_features, targets, options, nullptr);
}

Eigen::MatrixXd loo_predict(const FeatureSpace& features, const ResponseTable& targets,
                            const LooOptions& options) {
    return loo_impl(features.raw, align_targets(features, targets), options, &features.stimulus_ids);
}

namespace {

std::optional<double> guarded_pearson(std::span<const double> a, std::span<const double> b,
                                      const std::string& metric, std::vector<std::string>& warnings) {
    try {
        return pearson(a, b);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::numeric) throw;
        warnings.push_back(metric + " undefined (" + e.what() +
                           "); inspect the predicted and empirical distributions for constant columns");
        return std::nullopt;
    }
}

}  // namespace

BehaviorReport evaluate_predictions(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& empirical,
                                    std::vector<std::string> labels,
                                    std::vector<std::string> stimulus_ids) {
    const Eigen::Index n = predicted.rows();
    const Eigen::Index K = predicted.cols();
    if (empirical.rows() != n || empirical.cols() != K) {
        fail(ErrorCode::precondition, "predicted and empirical distributions differ in shape");
    }
    if (K < 2 || n < 2) fail(ErrorCode::precondition, "evaluation needs K >= 2 labels and n >= 2 stimuli");
    if (static_cast<Eigen::Index>(labels.size()) != K) fail(ErrorCode::precondition, "label count does not match K");
    if (!stimulus_ids.empty() && static_cast<Eigen::Index>(stimulus_ids.size()) != n) {
        fail(ErrorCode::precondition, "stimulus id count does not match rows");
    }
    check_targets(predicted);
    check_targets(empirical);

    BehaviorReport report;
    report.labels = std::move(labels);
    report.stimulus_ids = std::move(stimulus_ids);
    report.predicted = predicted;
    report.empirical = empirical;

    std::vector<double> pred_flat, emp_flat, pred_h, emp_h;
    double mse_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k + 1 < K; ++k) {
            pred_flat.push_back(predicted(i, k));
            emp_flat.push_back(empirical(i, k));
        }
        mse_sum += (predicted.row(i) - empirical.row(i)).squaredNorm() / static_cast<double>(K);
        const Eigen::VectorXd p = predicted.row(i).transpose();
        const Eigen::VectorXd e = empirical.row(i).transpose();
        pred_h.push_back(entropy(std::span<const double>(p.data(), static_cast<std::size_t>(K))));
        emp_h.push_back(entropy(std::span<const double>(e.data(), static_cast<std::size_t>(K))));
    }
    report.mse = mse_sum / static_cast<double>(n);
    report.pearson_nminus1 = guarded_pearson(pred_flat, emp_flat, "pearson_nminus1", report.warnings);
    report.entropy_pearson = guarded_pearson(pred_h, emp_h, "entropy_pearson", report.warnings);
    return report;
}

void write_behavior_report(const fs::path& dir, const BehaviorReport& report) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());

    Table table;
    table.header.push_back("id");
    for (const auto& l : report.labels) table.header.push_back("empirical_" + l);
    for (const auto& l : report.labels) table.header.push_back("predicted_" + l);
    table.header.push_back("empirical_entropy");
    table.header.push_back("predicted_entropy");
    const auto K = static_cast<std::size_t>(report.predicted.cols());
    for (Eigen::Index i = 0; i < report.predicted.rows(); ++i) {
        std::vector<std::string> row;
        row.push_back(report.stimulus_ids.empty() ? std::to_string(i) : report.stimulus_ids[static_cast<std::size_t>(i)]);
        const Eigen::VectorXd e = report.empirical.row(i).transpose();
        const Eigen::VectorXd p = report.predicted.row(i).transpose();
        for (Eigen::Index k = 0; k < e.size(); ++k) row.push_back(format_real(e[k]));
        for (Eigen::Index k = 0; k < p.size(); ++k) row.push_back(format_real(p[k]));
        row.push_back(format_real(entropy(std::span<const double>(e.data(), K))));
        row.push_back(format_real(entropy(std::span<const double>(p.data(), K))));
        table.rows.push_back(std::move(row));
    }
    write_table(dir / "behavior.tsv", table);

    json metrics;
    metrics["n"] = report.predicted.rows();
    metrics["labels"] = report.labels;
    metrics["dropped_label"] = report.labels.back();
    metrics["pearson_nminus1"] = report.pearson_nminus1 ? json(*report.pearson_nminus1) : json(nullptr);
    metrics["mse"] = report.mse;
    metrics["entropy_pearson"] = report.entropy_pearson ? json(*report.entropy_pearson) : json(nullptr);
    metrics["warnings"] = report.warnings;
    std::ofstream out(dir / "metrics.json", std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write metrics in " + dir.string());
    out << metrics.dump(2) << '\n';
}

}  // namespace modalprobe
