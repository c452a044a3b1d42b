// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/QR>

#include "modalprobe/behavior.hpp"
#include "modalprobe/error.hpp"

namespace modalprobe {

namespace {

std::size_t category_index(Category c) {
    for (std::size_t i = 0; i < kCanonicalCategories.size(); ++i) {
        if (kCanonicalCategories[i] == c) return i;
    }
    return 0;
}

Eigen::VectorXd random_unit(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    do {
        for (auto& x : v) x = normal(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

}  // namespace

void SynthSpec::validate() const {
    if (layers == 0) fail(ErrorCode::precondition, "synth: layers must be positive");
    if (hidden_dim < 4) fail(ErrorCode::precondition, "synth: hidden_dim must be at least 4");
    if (per_category == 0) fail(ErrorCode::precondition, "synth: per_category must be positive");
    if (planted_layer >= layers) fail(ErrorCode::precondition, "synth: planted layer outside [0, layers)");
    if (!(noise_sd > 0.0)) fail(ErrorCode::precondition, "synth: noise_sd must be > 0");
    if (!(separation >= 0.0) || !std::isfinite(separation)) {
        fail(ErrorCode::precondition, "synth: separation must be finite and >= 0");
    }
    if (!(logprob_sd >= 0.0) || !(logprob_gap >= 0.0) || !(logprob_base >= 0.0)) {
        fail(ErrorCode::precondition, "synth: log-probability parameters must be >= 0");
    }
}

Eigen::VectorXd GroundTruth::mean(Category c) const { return category_means[category_index(c)]; }

Eigen::VectorXd GroundTruth::direction(const CategoryPair& pair) const {
    const Eigen::VectorXd diff = mean(pair.positive) - mean(pair.negative);
    const double norm = diff.norm();
    return norm > 0.0 ? Eigen::VectorXd(diff / norm) : Eigen::VectorXd::Zero(diff.size());
}

double GroundTruth::logprob_violation_rate(int rank_gap) const {
    const double shift = logprob_gap * std::abs(rank_gap);
    if (logprob_sd == 0.0) return shift > 0.0 ? 0.0 : 1.0;
    // P(N(shift, 2 sd^2) <= 0)
    return 0.5 * std::erfc(shift / (2.0 * logprob_sd));
}

SynthData generate(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(spec.hidden_dim);

    Eigen::MatrixXd gauss(d, 4);
    for (Eigen::Index j = 0; j < 4; ++j) {
        for (Eigen::Index i = 0; i < d; ++i) gauss(i, j) = normal(rng);
    }
    const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ() *
                                  Eigen::MatrixXd::Identity(d, 4);

    SynthData out;
    out.truth.planted_layer = spec.planted_layer;
    out.truth.logprob_gap = spec.logprob_gap;
    out.truth.logprob_sd = spec.logprob_sd;
    const double scale = spec.separation / std::sqrt(2.0);
    for (std::size_t c = 0; c < 4; ++c) {
        out.truth.category_means[c] = scale * basis.col(static_cast<Eigen::Index>(c));
    }

    std::vector<Stimulus> items;
    std::vector<Category> cats;
    for (std::size_t i = 0; i < spec.per_category; ++i) {
        for (Category c : kCanonicalCategories) {
            Stimulus s;
            s.id = "p" + std::to_string(i) + "-" + std::string(to_string(c));
            s.text = "Synthetic stimulus " + std::to_string(i) + " (" + std::string(to_string(c)) + ").";
            s.category = c;
            s.pair_id = "p" + std::to_string(i);
            s.source = "synth";
            s.adversarial = Adversarial::none;
            items.push_back(std::move(s));
            cats.push_back(c);
        }
    }
    const auto n = static_cast<Eigen::Index>(items.size());

    ActivationArchive& a = out.archive;
    a.model_id = spec.model_id;
    a.checkpoint_id = spec.checkpoint_id;
    a.stream_point = kDefaultStreamPoint;
    for (const auto& s : items) a.stimulus_ids.push_back(s.id);
    for (std::size_t l = 0; l < spec.layers; ++l) {
        LayerMatrix m(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                double value = spec.noise_sd * normal(rng);
                if (l == spec.planted_layer) value += out.truth.mean(cats[static_cast<std::size_t>(i)])[j];
                m(i, j) = static_cast<float>(value);
            }
        }
        a.layers.push_back(std::move(m));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const int rank = probability_rank(cats[static_cast<std::size_t>(i)]);
        const double lp = -spec.logprob_base - spec.logprob_gap * (3 - rank) + spec.logprob_sd * normal(rng);
        a.summed_logprob.push_back(std::min(0.0, lp));
    }
    out.stimuli = StimulusSet(std::move(items));
    validate_archive(a);
    return out;
}

ReferenceData generate_reference(const SynthSpec& spec, const GroundTruth& truth,
                                 const ReferenceSpec& reference) {
    spec.validate();
    if (reference.sentences < 4) fail(ErrorCode::precondition, "synth reference needs at least 4 sentences");
    std::mt19937_64 rng(reference.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(spec.hidden_dim);
    const auto n = static_cast<Eigen::Index>(reference.sentences);

    ReferenceData out;
    ActivationArchive& a = out.archive;
    a.model_id = spec.model_id;
    a.checkpoint_id = spec.checkpoint_id;
    a.stream_point = kDefaultStreamPoint;
    for (Eigen::Index i = 0; i < n; ++i) a.stimulus_ids.push_back("ref" + std::to_string(i));

    for (std::size_t l = 0; l < spec.layers; ++l) {
        Eigen::VectorXd u;
        if (l == truth.planted_layer) u = truth.direction(reference.planted_pair);
        if (u.size() == 0 || u.isZero(0.0)) u = random_unit(rng, spec.hidden_dim);
        LayerMatrix m(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double along = reference.dominant_sd * normal(rng);
            for (Eigen::Index j = 0; j < d; ++j) {
                m(i, j) = static_cast<float>(spec.noise_sd * normal(rng) + along * u[j]);
            }
        }
        a.layers.push_back(std::move(m));
        out.dominant_directions.push_back(std::move(u));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        a.summed_logprob.push_back(std::min(0.0, -spec.logprob_base + spec.logprob_sd * normal(rng)));
    }
    validate_archive(a);
    return out;
}

SoftResponseGenerator default_response_generator() {
    SoftResponseGenerator gen;
    gen.weights.resize(4, 3);
    // rows: probable, improbable, impossible, inconceivable
    gen.weights << 0.9, 0.3, 0.2,
                  -0.3, 0.8, 0.2,
                  -0.4, -0.5, 0.7,
                  -0.2, -0.6, -0.9;
    gen.bias.resize(4);
    gen.bias << 0.2, 0.0, -0.1, -0.1;
    gen.labels = canonical_labels();
    return gen;
}

Eigen::MatrixXd generate_soft_targets(const Eigen::MatrixXd& X, const SoftResponseGenerator& gen) {
    if (X.cols() != gen.weights.cols()) fail(ErrorCode::precondition, "generator feature count mismatch");
    return softmax_rows((X * gen.weights.transpose()).rowwise() + gen.bias.transpose());
}

Eigen::MatrixXd planted_projections(const SynthData& data) {
    const auto pairs = feature_space_pairs();
    const Eigen::MatrixXd states = data.archive.layers.at(data.truth.planted_layer).cast<double>();
    Eigen::MatrixXd out(states.rows(), 3);
    for (std::size_t j = 0; j < 3; ++j) {
        const Eigen::VectorXd diff = data.truth.mean(pairs[j].positive) - data.truth.mean(pairs[j].negative);
        out.col(static_cast<Eigen::Index>(j)) = states * diff;
    }
    return out;
}

ResponseTable planted_responses(const SynthData& data, const SoftResponseGenerator& gen,
                                int respondent_count) {
    const Eigen::MatrixXd raw = planted_projections(data);
    const Eigen::MatrixXd z = fit_standardization(raw).apply(raw);
    const Eigen::MatrixXd targets = generate_soft_targets(z, gen);
    ResponseTable table;
    table.labels = gen.labels;
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
        HumanResponses h;
        h.stimulus_id = data.archive.stimulus_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < targets.cols(); ++k) h.distribution.push_back(targets(i, k));
        h.respondent_count = respondent_count;
        table.rows.push_back(std::move(h));
    }
    return table;
}

RatingsTable planted_ratings(const SynthData& data, double noise_sd, std::uint64_t seed) {
    const Eigen::MatrixXd raw = planted_projections(data);
    const Eigen::MatrixXd z = fit_standardization(raw).apply(raw);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    RatingsTable table;
    table.features = {"EventLikelihood", "Imageability", "Unrelated"};
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        FeatureRatings r;
        r.stimulus_id = data.archive.stimulus_ids[static_cast<std::size_t>(i)];
        r.ratings.emplace_back(2.0 * z(i, 0) + 1.0 + noise_sd * normal(rng));
        r.ratings.emplace_back(-1.5 * z(i, 2) + 4.0 + noise_sd * normal(rng));
        r.ratings.emplace_back(4.0 + normal(rng));
        table.rows.push_back(std::move(r));
    }
    return table;
}

}  // namespace modalprobe
