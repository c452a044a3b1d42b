// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/baselines.hpp"

#include <fstream>
#include <random>

#include <json.hpp>

#include "modalprobe/error.hpp"
#include "modalprobe/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace modalprobe {

Outcome logprob_classify_pair(const ActivationArchive& archive, std::string_view id_a,
                              Category cat_a, std::string_view id_b, Category cat_b) {
    if (cat_a == cat_b) fail(ErrorCode::precondition, "logprob comparison needs two different categories");
    const RowIndex index(archive);
    const double lp_a = archive.summed_logprob[index.at(id_a)];
    const double lp_b = archive.summed_logprob[index.at(id_b)];
    const bool a_higher = probability_rank(cat_a) > probability_rank(cat_b);
    const bool correct = a_higher ? lp_a > lp_b : lp_b > lp_a;
    return correct ? Outcome::correct : Outcome::incorrect;
}

namespace {

// +1 where the more probable category is the positive member.
Eigen::VectorXd logprob_margins(const ActivationArchive& archive, const LabeledPairs& pairs) {
    if (pairs.categories.positive == pairs.categories.negative) {
        fail(ErrorCode::precondition, "logprob comparison needs two different categories");
    }
    const auto rows = detail::resolve_pairs(archive, pairs.pairs);
    const double sign = probability_rank(pairs.categories.positive) >
                                probability_rank(pairs.categories.negative)
                            ? 1.0
                            : -1.0;
    Eigen::VectorXd margins(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        margins[static_cast<Eigen::Index>(i)] =
            sign * (archive.summed_logprob[rows[i].positive] - archive.summed_logprob[rows[i].negative]);
    }
    return margins;
}

double accuracy_on(const Eigen::VectorXd& margins, std::span<const std::size_t> rows, int sign = 1) {
    Eigen::VectorXd sub(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        sub[static_cast<Eigen::Index>(i)] = sign * margins[static_cast<Eigen::Index>(rows[i])];
    }
    return detail::fraction_positive(sub);
}

int orientation_of(const Eigen::VectorXd& margins, std::span<const std::size_t> rows) {
    std::size_t above = 0, below = 0;
    double sum = 0.0;
    for (std::size_t r : rows) {
        const double m = margins[static_cast<Eigen::Index>(r)];
        above += m > 0.0;
        below += m < 0.0;
        sum += m;
    }
    if (above != below) return above > below ? 1 : -1;
    return sum < 0.0 ? -1 : 1;
}

}  // namespace

MethodScore logprob_crossval(const ActivationArchive& archive, const LabeledPairs& pairs,
                             std::size_t folds, std::uint64_t seed) {
    const FoldPlan plan(pairs.pairs.size(), folds, seed);
    const Eigen::VectorXd margins = logprob_margins(archive, pairs);
    MethodScore score;
    for (std::size_t f = 0; f < folds; ++f) {
        score.fold_accuracy.push_back(accuracy_on(margins, plan.held_out(f)));
        score.mean_accuracy += score.fold_accuracy.back();
    }
    score.mean_accuracy /= static_cast<double>(folds);
    return score;
}

double logprob_accuracy(const ActivationArchive& archive, const LabeledPairs& pairs) {
    if (pairs.pairs.empty()) fail(ErrorCode::precondition, "empty pair list");
    return detail::fraction_positive(logprob_margins(archive, pairs));
}

std::size_t ReferenceDirections::components() const {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().directions.cols());
}

std::size_t ReferenceDirections::hidden_dim() const {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().directions.rows());
}

ReferenceDirections fit_reference_pcs(const ActivationArchive& reference, std::size_t k) {
    if (reference.size() < k + 1) {
        fail(ErrorCode::precondition, "reference archive has " + std::to_string(reference.size()) +
                                          " sentences; need k <= n - 1 for k = " + std::to_string(k));
    }
    ReferenceDirections out;
    out.source = reference.model_id + "/" + reference.checkpoint_id;
    out.layers.resize(reference.layer_count());
    parallel_for(reference.layer_count(), [&](std::size_t l) {
        try {
            out.layers[l] = pca_directions(reference.layers[l].cast<double>(), k);
        } catch (const Error& e) {
            throw Error(e.code(), "reference layer " + std::to_string(l) + ": " + e.what());
        }
    });
    return out;
}

std::uint64_t derive_direction_seed(std::uint64_t seed) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ReferenceDirections sample_random_directions(std::size_t layers, std::size_t hidden_dim,
                                             std::uint64_t seed) {
    if (layers == 0 || hidden_dim == 0) fail(ErrorCode::precondition, "random directions need L, d > 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ReferenceDirections out;
    out.source = "random:" + std::to_string(seed);
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(hidden_dim));
        do {
            for (auto& x : v) x = normal(rng);
        } while (v.norm() == 0.0);
        PrincipalComponents pc;
        pc.directions = v / v.norm();
        pc.variances = Eigen::VectorXd::Ones(1);
        out.layers.push_back(std::move(pc));
    }
    return out;
}

int fit_orientation(const Eigen::MatrixXd& differences, const Eigen::VectorXd& direction) {
    const Eigen::VectorXd margins = differences * direction;
    std::vector<std::size_t> all(static_cast<std::size_t>(margins.size()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return orientation_of(margins, all);
}

ProjectionSelection projection_select(const ActivationArchive& archive, const LabeledPairs& pairs,
                                      const ReferenceDirections& directions, std::size_t folds,
                                      std::uint64_t seed) {
    const std::size_t L = archive.layer_count();
    if (directions.layers.size() != L) {
        fail(ErrorCode::precondition, "directions cover " + std::to_string(directions.layers.size()) +
                                          " layers, archive has " + std::to_string(L));
    }
    if (directions.hidden_dim() != archive.hidden_dim()) {
        fail(ErrorCode::precondition, "direction dimension does not match archive hidden_dim");
    }
    const FoldPlan plan(pairs.pairs.size(), folds, seed);
    const auto rows = detail::resolve_pairs(archive, pairs.pairs);
    const std::size_t K = directions.components();

    std::vector<std::vector<std::size_t>> training(folds);
    for (std::size_t f = 0; f < folds; ++f) training[f] = plan.training(f);

    // [layer][component][fold]
    std::vector<std::vector<std::vector<double>>> acc(
        L, std::vector<std::vector<double>>(K, std::vector<double>(folds, 0.0)));

    parallel_for(L, [&](std::size_t l) {
        const Eigen::MatrixXd diff = detail::pair_differences(archive.layers[l], rows);
        for (std::size_t c = 0; c < K; ++c) {
            const Eigen::VectorXd margins = diff * directions.layers[l].directions.col(static_cast<Eigen::Index>(c));
            for (std::size_t f = 0; f < folds; ++f) {
                const int sign = orientation_of(margins, training[f]);
                acc[l][c][f] = accuracy_on(margins, plan.held_out(f), sign);
            }
        }
    });

    ProjectionSelection sel;
    sel.cv.category_pair = pairs.categories;
    sel.cv.folds = folds;
    sel.cv.seed = seed;
    sel.component_mean_accuracy.assign(L, std::vector<double>(K, 0.0));
    std::vector<std::size_t> best_component(L, 0);
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t c = 0; c < K; ++c) {
            double total = 0.0;
            for (double a : acc[l][c]) total += a;
            sel.component_mean_accuracy[l][c] = total / static_cast<double>(folds);
        }
        best_component[l] = max_tie_set(sel.component_mean_accuracy[l]).front();
        sel.cv.fold_accuracy.push_back(acc[l][best_component[l]]);
        sel.cv.mean_accuracy.push_back(sel.component_mean_accuracy[l][best_component[l]]);
    }
    sel.cv.tie_set = max_tie_set(sel.cv.mean_accuracy);
    sel.cv.best_layer = median_layer(sel.cv.tie_set);
    sel.layer = sel.cv.best_layer;
    sel.component = best_component[sel.layer];

    const Eigen::VectorXd u =
        directions.layers[sel.layer].directions.col(static_cast<Eigen::Index>(sel.component));
    sel.orientation = fit_orientation(detail::pair_differences(archive.layers[sel.layer], rows), u);
    sel.direction = static_cast<double>(sel.orientation) * u;
    return sel;
}

ProjectionSelection pc_baseline_select(const ActivationArchive& archive, const LabeledPairs& pairs,
                                       const ReferenceDirections& directions, std::size_t folds,
                                       std::uint64_t seed) {
    return projection_select(archive, pairs, directions, folds, seed);
}

ProjectionSelection random_baseline_select(const ActivationArchive& archive,
                                           const LabeledPairs& pairs, std::size_t folds,
                                           std::uint64_t seed) {
    const auto dirs = sample_random_directions(archive.layer_count(), archive.hidden_dim(),
                                               derive_direction_seed(seed));
    return projection_select(archive, pairs, dirs, folds, seed);
}

namespace {

// Gram-Schmidt on the columns; float32 storage leaves ~1e-7 cross terms.
void orthonormalize(Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < j; ++i) m.col(j) -= m.col(i).dot(m.col(j)) * m.col(i);
        }
        const double norm = m.col(j).norm();
        if (!(norm > 0.0)) fail(ErrorCode::validation, "reference direction has zero norm");
        m.col(j) /= norm;
    }
}

}  // namespace

void write_reference_directions(const fs::path& dir, const ReferenceDirections& dirs) {
    if (dirs.layers.empty()) fail(ErrorCode::precondition, "no reference directions to write");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());

    const std::size_t d = dirs.hidden_dim();
    const std::size_t k = dirs.components();
    json manifest;
    manifest["kind"] = "reference_directions";
    manifest["format_version"] = 1;
    manifest["dtype"] = "float32";
    manifest["byte_order"] = "little";
    manifest["source"] = dirs.source;
    manifest["layer_count"] = dirs.layers.size();
    manifest["hidden_dim"] = d;
    manifest["components"] = k;
    manifest["variances"] = json::array();
    for (std::size_t l = 0; l < dirs.layers.size(); ++l) {
        const auto& pc = dirs.layers[l];
        if (static_cast<std::size_t>(pc.directions.rows()) != d ||
            static_cast<std::size_t>(pc.directions.cols()) != k) {
            fail(ErrorCode::precondition, "reference layer " + std::to_string(l) + " has a different shape");
        }
        // k x d row-major == d x k column-major
        const Eigen::MatrixXf values = pc.directions.cast<float>();
        write_f32_blob(dir / ("layer_" + std::to_string(l) + ".f32"),
                       std::span<const float>(values.data(), d * k));
        manifest["variances"].push_back(std::vector<double>(pc.variances.data(), pc.variances.data() + pc.variances.size()));
    }
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write reference manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

ReferenceDirections read_reference_directions(const fs::path& dir) {
    const fs::path path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "missing manifest " + path.string());
    ReferenceDirections out;
    try {
        const json m = json::parse(in);
        if (m.at("kind") != "reference_directions") {
            fail(ErrorCode::validation, path.string() + " is not a reference-direction bundle");
        }
        out.source = m.value("source", "");
        const auto L = m.at("layer_count").get<std::size_t>();
        const auto d = m.at("hidden_dim").get<std::size_t>();
        const auto k = m.at("components").get<std::size_t>();
        const auto variances = m.at("variances").get<std::vector<std::vector<double>>>();
        if (variances.size() != L) fail(ErrorCode::validation, path.string() + ": variance table size mismatch");
        for (std::size_t l = 0; l < L; ++l) {
            const auto values = read_f32_blob(dir / ("layer_" + std::to_string(l) + ".f32"), d * k);
            PrincipalComponents pc;
            pc.directions = Eigen::Map<const Eigen::MatrixXf>(values.data(), static_cast<Eigen::Index>(d),
                                                              static_cast<Eigen::Index>(k))
                                .cast<double>();
            orthonormalize(pc.directions);
            if (variances[l].size() != k) fail(ErrorCode::validation, path.string() + ": variance row size mismatch");
            pc.variances = Eigen::Map<const Eigen::VectorXd>(variances[l].data(), static_cast<Eigen::Index>(k));
            out.layers.push_back(std::move(pc));
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, "malformed reference manifest " + path.string() + ": " + e.what());
    }
    return out;
}

}  // namespace modalprobe
