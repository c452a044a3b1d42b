// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/diffvec.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "modalprobe/error.hpp"
#include "modalprobe/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace modalprobe {

LabeledPairs LabeledPairs::swapped() const {
    LabeledPairs out{categories.reversed(), {}};
    out.pairs.reserve(pairs.size());
    for (const auto& p : pairs) out.pairs.push_back(p.swapped());
    return out;
}

LabeledPairs labeled_pairs(const StimulusSet& stimuli, const CategoryPair& categories) {
    return {categories, minimal_pairs(stimuli, categories)};
}

namespace detail {

std::vector<RowPair> resolve_pairs(const ActivationArchive& archive,
                                   std::span<const MinimalPair> pairs) {
    const RowIndex index(archive);
    std::vector<RowPair> rows;
    rows.reserve(pairs.size());
    for (const auto& p : pairs) rows.push_back({index.at(p.positive_id), index.at(p.negative_id)});
    return rows;
}

Eigen::MatrixXd pair_differences(const LayerMatrix& states, std::span<const RowPair> pairs) {
    Eigen::MatrixXd diff(static_cast<Eigen::Index>(pairs.size()), states.cols());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        diff.row(static_cast<Eigen::Index>(i)) =
            states.row(static_cast<Eigen::Index>(pairs[i].positive)).cast<double>() -
            states.row(static_cast<Eigen::Index>(pairs[i].negative)).cast<double>();
    }
    return diff;
}

double fraction_positive(const Eigen::VectorXd& margins) {
    if (margins.size() == 0) fail(ErrorCode::precondition, "accuracy over an empty pair list");
    const auto hits = (margins.array() > 0.0).count();
    return static_cast<double>(hits) / static_cast<double>(margins.size());
}

}  // namespace detail

namespace {

void check_layer(const ActivationArchive& archive, std::size_t layer) {
    if (layer >= archive.layer_count()) {
        fail(ErrorCode::precondition, "layer " + std::to_string(layer) + " out of range [0, " +
                                          std::to_string(archive.layer_count()) + ")");
    }
}

void check_usable(const DifferenceVector& v, const ActivationArchive& archive) {
    check_layer(archive, v.layer);
    if (static_cast<std::size_t>(v.vector.size()) != archive.hidden_dim()) {
        fail(ErrorCode::precondition, "vector dimension " + std::to_string(v.vector.size()) +
                                          " does not match archive hidden_dim " +
                                          std::to_string(archive.hidden_dim()));
    }
    if (v.is_zero()) fail(ErrorCode::precondition, "uninformative vector: all entries are zero");
}

// Mean of the selected difference rows.
Eigen::VectorXd mean_rows(const Eigen::MatrixXd& diff, std::span<const std::size_t> rows) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(diff.cols());
    for (std::size_t r : rows) sum += diff.row(static_cast<Eigen::Index>(r)).transpose();
    return sum / static_cast<double>(rows.size());
}

double held_out_accuracy(const Eigen::MatrixXd& diff, std::span<const std::size_t> rows,
                         const Eigen::VectorXd& v) {
    Eigen::VectorXd margins(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        margins[static_cast<Eigen::Index>(i)] = diff.row(static_cast<Eigen::Index>(rows[i])).dot(v);
    }
    return detail::fraction_positive(margins);
}

}  // namespace

DifferenceVector estimate_vector(const ActivationArchive& archive, const LabeledPairs& pairs,
                                 std::size_t layer) {
    if (pairs.pairs.empty()) fail(ErrorCode::precondition, "empty pair list");
    check_layer(archive, layer);
    const auto rows = detail::resolve_pairs(archive, pairs.pairs);
    const auto& states = archive.layers[layer];

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(states.cols());
    for (const auto& rp : rows) {
        sum += states.row(static_cast<Eigen::Index>(rp.positive)).cast<double>().transpose() -
               states.row(static_cast<Eigen::Index>(rp.negative)).cast<double>().transpose();
    }

    DifferenceVector out;
    out.category_pair = pairs.categories;
    out.layer = layer;
    out.vector = sum / static_cast<double>(rows.size());
    out.n_pairs = rows.size();
    out.model_id = archive.model_id;
    out.checkpoint_id = archive.checkpoint_id;
    return out;
}

Outcome classify_pair(const DifferenceVector& v, const ActivationArchive& archive,
                      std::string_view positive_id, std::string_view negative_id) {
    const MinimalPair pair{std::string(positive_id), std::string(negative_id)};
    return pairwise_accuracy(v, archive, std::span<const MinimalPair>(&pair, 1)) > 0.0
               ? Outcome::correct
               : Outcome::incorrect;
}

double pairwise_accuracy(const DifferenceVector& v, const ActivationArchive& archive,
                         std::span<const MinimalPair> pairs) {
    if (pairs.empty()) fail(ErrorCode::precondition, "empty pair list");
    check_usable(v, archive);
    const auto rows = detail::resolve_pairs(archive, pairs);
    const Eigen::MatrixXd diff = detail::pair_differences(archive.layers[v.layer], rows);
    return detail::fraction_positive(diff * v.vector);
}

FoldPlan::FoldPlan(std::size_t n_items, std::size_t folds, std::uint64_t seed) : n_items_(n_items) {
    if (folds < 2) fail(ErrorCode::precondition, "cross-validation needs at least two folds");
    if (n_items < folds) {
        fail(ErrorCode::precondition, "fewer pairs (" + std::to_string(n_items) + ") than folds (" +
                                          std::to_string(folds) + ")");
    }
    std::vector<std::size_t> order(n_items);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    folds_.resize(folds);
    const std::size_t base = n_items / folds;
    const std::size_t extra = n_items % folds;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        folds_[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                         order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
}

std::vector<std::size_t> FoldPlan::training(std::size_t fold) const {
    std::vector<std::size_t> out;
    out.reserve(n_items_ - folds_.at(fold).size());
    for (std::size_t f = 0; f < folds_.size(); ++f) {
        if (f == fold) continue;
        out.insert(out.end(), folds_[f].begin(), folds_[f].end());
    }
    return out;
}

std::size_t median_layer(std::span<const std::size_t> tie_set) {
    if (tie_set.empty()) fail(ErrorCode::precondition, "median of an empty tie set");
    return tie_set[(tie_set.size() - 1) / 2];
}

std::vector<std::size_t> max_tie_set(std::span<const double> scores) {
    if (scores.empty()) fail(ErrorCode::precondition, "no scores to select from");
    const double best = *std::max_element(scores.begin(), scores.end());
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (best - scores[i] <= 1e-12) ties.push_back(i);
    }
    return ties;
}

CVReport crossval_select_layer(const ActivationArchive& archive, const LabeledPairs& pairs,
                               std::size_t folds, std::uint64_t seed) {
    const FoldPlan plan(pairs.pairs.size(), folds, seed);
    const auto rows = detail::resolve_pairs(archive, pairs.pairs);
    const std::size_t L = archive.layer_count();

    CVReport report;
    report.category_pair = pairs.categories;
    report.folds = folds;
    report.seed = seed;
    report.fold_accuracy.assign(L, std::vector<double>(folds, 0.0));
    report.mean_accuracy.assign(L, 0.0);
    std::vector<std::vector<std::string>> warnings(L);

    std::vector<std::vector<std::size_t>> training(folds);
    for (std::size_t f = 0; f < folds; ++f) training[f] = plan.training(f);

    parallel_for(L, [&](std::size_t layer) {
        const Eigen::MatrixXd diff = detail::pair_differences(archive.layers[layer], rows);
        double total = 0.0;
        for (std::size_t f = 0; f < folds; ++f) {
            const Eigen::VectorXd v = mean_rows(diff, training[f]);
            double acc = 0.0;
            if (v.isZero(0.0)) {
                warnings[layer].push_back("zero difference vector at layer " + std::to_string(layer) +
                                          ", fold " + std::to_string(f) + "; scored as all ties");
            } else {
                acc = held_out_accuracy(diff, plan.held_out(f), v);
            }
            report.fold_accuracy[layer][f] = acc;
            total += acc;
        }
        report.mean_accuracy[layer] = total / static_cast<double>(folds);
    });

    for (auto& w : warnings) report.warnings.insert(report.warnings.end(), w.begin(), w.end());
    report.tie_set = max_tie_set(report.mean_accuracy);
    report.best_layer = median_layer(report.tie_set);
    return report;
}

DifferenceVector refit_full(const ActivationArchive& archive, const LabeledPairs& pairs,
                            const CVReport& cv) {
    if (cv.mean_accuracy.size() != archive.layer_count()) {
        fail(ErrorCode::precondition, "CV report covers " + std::to_string(cv.mean_accuracy.size()) +
                                          " layers, archive has " + std::to_string(archive.layer_count()));
    }
    if (!(cv.category_pair == pairs.categories)) {
        fail(ErrorCode::precondition, "CV report was produced for " + to_string(cv.category_pair) +
                                          ", not " + to_string(pairs.categories));
    }
    return estimate_vector(archive, pairs, cv.best_layer);
}

namespace {

std::string vector_name(const CategoryPair& pair) {
    return std::string(to_string(pair.positive)) + "-" + std::string(to_string(pair.negative));
}

}  // namespace

void write_vectors(const fs::path& dir, std::span<const DifferenceVector> vectors) {
    if (vectors.empty()) fail(ErrorCode::precondition, "no vectors to write");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());

    const auto d = vectors.front().vector.size();
    json manifest;
    manifest["kind"] = "difference_vectors";
    manifest["format_version"] = 1;
    manifest["dtype"] = "float32";
    manifest["byte_order"] = "little";
    manifest["hidden_dim"] = d;
    manifest["vectors"] = json::array();

    std::set<std::string> used;
    std::set<std::pair<std::string, std::size_t>> keys;
    for (const auto& v : vectors) {
        if (v.vector.size() != d) fail(ErrorCode::precondition, "vectors in one bundle must share hidden_dim");
        if (v.n_pairs == 0) fail(ErrorCode::validation, "vector " + vector_name(v.category_pair) + " has n_pairs = 0");
        std::string name = vector_name(v.category_pair);
        if (!keys.insert({name, v.layer}).second) {
            fail(ErrorCode::precondition, "duplicate vector " + name + " at layer " + std::to_string(v.layer));
        }
        // A second layer of the same pair gets a layer suffix.
        if (!used.insert(name).second) {
            name += "-layer" + std::to_string(v.layer);
            used.insert(name);
        }
        const std::string file = name + ".f32";
        const Eigen::VectorXf values = v.vector.cast<float>();
        write_f32_blob(dir / file, std::span<const float>(values.data(), static_cast<std::size_t>(values.size())));
        manifest["vectors"].push_back({{"name", name},
                                       {"positive", to_string(v.category_pair.positive)},
                                       {"negative", to_string(v.category_pair.negative)},
                                       {"layer", v.layer},
                                       {"n_pairs", v.n_pairs},
                                       {"model_id", v.model_id},
                                       {"checkpoint_id", v.checkpoint_id},
                                       {"file", file}});
    }
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

std::vector<DifferenceVector> read_vectors(const fs::path& dir) {
    const fs::path path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "missing manifest " + path.string());
    std::vector<DifferenceVector> out;
    try {
        const json m = json::parse(in);
        if (m.at("kind") != "difference_vectors") {
            fail(ErrorCode::validation, path.string() + " is not a difference-vector bundle");
        }
        const auto d = m.at("hidden_dim").get<std::size_t>();
        for (const auto& e : m.at("vectors")) {
            DifferenceVector v;
            const auto pos = parse_category(e.at("positive").get<std::string>());
            const auto neg = parse_category(e.at("negative").get<std::string>());
            if (!pos || !neg) fail(ErrorCode::validation, path.string() + ": unknown category");
            v.category_pair = {*pos, *neg};
            v.layer = e.at("layer").get<std::size_t>();
            v.n_pairs = e.at("n_pairs").get<std::size_t>();
            v.model_id = e.value("model_id", "");
            v.checkpoint_id = e.value("checkpoint_id", "");
            const auto values = read_f32_blob(dir / e.at("file").get<std::string>(), d);
            v.vector = Eigen::Map<const Eigen::VectorXf>(values.data(), static_cast<Eigen::Index>(d)).cast<double>();
            if (v.n_pairs == 0) fail(ErrorCode::validation, path.string() + ": n_pairs must be >= 1");
            out.push_back(std::move(v));
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, "malformed vector manifest " + path.string() + ": " + e.what());
    }
    return out;
}

}  // namespace modalprobe
