// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "modalprobe/archive.hpp"
#include "modalprobe/baselines.hpp"
#include "modalprobe/behavior.hpp"
#include "modalprobe/develop.hpp"
#include "modalprobe/diffvec.hpp"
#include "modalprobe/error.hpp"
#include "modalprobe/interpret.hpp"
#include "modalprobe/parallel.hpp"
#include "modalprobe/plot.hpp"
#include "modalprobe/stimuli.hpp"
#include "modalprobe/synth.hpp"
#include "modalprobe/table.hpp"

#ifndef MODALPROBE_VERSION
#define MODALPROBE_VERSION "0.0.0"
#endif

namespace modalprobe {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Options {
    std::vector<std::string> archives;
    std::vector<std::string> stimuli;
    std::vector<std::string> pairs;
    std::vector<std::string> labels;
    std::string responses;
    std::string ratings;
    std::string reference;
    std::string vectors;
    std::string train_source;
    std::string method = "all";
    std::string axis = "checkpoint";
    std::string out;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    bool standardize = true;
    std::optional<std::size_t> layer;

    SynthSpec synth;
    std::size_t reference_sentences = 400;
    int respondents = 20;
};

// Output directory plus the list of files a run produced, for the manifest.
class RunOutput {
public:
    explicit RunOutput(const std::string& dir) : dir_(dir) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) fail(ErrorCode::io, "cannot create output directory " + dir_.string() + ": " + ec.message());
    }
    fs::path file(const std::string& name) {
        files_.push_back(name);
        return dir_ / name;
    }
    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) s += sep;
        s += parts[i];
    }
    return s;
}

std::vector<CategoryPair> selected_pairs(const Options& o) {
    std::vector<CategoryPair> pairs;
    if (o.pairs.empty()) {
        const auto all = all_category_pairs();
        pairs.assign(all.begin(), all.end());
    }
    for (const auto& p : o.pairs) pairs.push_back(parse_category_pair(p));
    return pairs;
}

const std::string& single(const std::vector<std::string>& values, const char* flag) {
    if (values.size() != 1) fail(ErrorCode::usage, std::string(flag) + " takes exactly one path here");
    return values.front();
}

StimulusSet training_stimuli(const Options& o, std::ostream& err) {
    StimulusSet all = read_stimuli(single(o.stimuli, "--stimuli"));
    for (const auto& issue : validate_stimuli(all).issues) {
        err << "warning: " << issue.rule << " (" << issue.stimulus_id << "): " << issue.message << "\n";
    }
    if (o.train_source.empty()) return all;
    StimulusSet subset = all.filter_source(o.train_source);
    if (subset.empty()) fail(ErrorCode::usage, "no stimuli with source '" + o.train_source + "'");
    return subset;
}

json cv_json(const CVReport& cv) {
    return json{{"pair", to_string(cv.category_pair)},
                {"best_layer", cv.best_layer},
                {"best_accuracy", cv.best_accuracy()},
                {"tie_set", cv.tie_set},
                {"mean_accuracy", cv.mean_accuracy},
                {"warnings", cv.warnings}};
}

std::string tie_string(const std::vector<std::size_t>& tie) {
    std::vector<std::string> parts;
    for (auto l : tie) parts.push_back(std::to_string(l));
    return join(parts, ';');
}

std::string fold_string(const std::vector<double>& folds) {
    std::vector<std::string> parts;
    for (double a : folds) parts.push_back(format_real(a));
    return join(parts, ';');
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

// One vector per feature-space pair, either read from a bundle or fitted on
// the training stimuli (CV-selected layer, or --layer when given).
std::vector<DifferenceVector> feature_vectors(const Options& o, const ActivationArchive& archive,
                                              const StimulusSet& training, json& config) {
    std::vector<DifferenceVector> out;
    if (!o.vectors.empty()) {
        const auto bundle = read_vectors(o.vectors);
        for (const auto& pair : feature_space_pairs()) {
            auto it = std::find_if(bundle.begin(), bundle.end(),
                                   [&](const DifferenceVector& v) { return v.category_pair == pair; });
            if (it == bundle.end()) {
                fail(ErrorCode::validation, "vector bundle " + o.vectors + " lacks " + to_string(pair));
            }
            out.push_back(*it);
        }
        config["vectors_from"] = o.vectors;
        return out;
    }
    json fitted = json::array();
    for (const auto& pair : feature_space_pairs()) {
        const LabeledPairs lp = labeled_pairs(training, pair);
        if (o.layer) {
            out.push_back(estimate_vector(archive, lp, *o.layer));
            fitted.push_back({{"pair", to_string(pair)}, {"layer", *o.layer}});
        } else {
            const CVReport cv = crossval_select_layer(archive, lp, o.folds, o.seed);
            out.push_back(refit_full(archive, lp, cv));
            fitted.push_back(cv_json(cv));
        }
    }
    config["fitted_vectors"] = fitted;
    return out;
}

void check_layer(const Options& o, const ActivationArchive& archive) {
    if (o.layer && *o.layer >= archive.layer_count()) {
        fail(ErrorCode::usage, "--layer " + std::to_string(*o.layer) + " outside [0, " +
                                   std::to_string(archive.layer_count()) + ")");
    }
}

void cmd_cv(const Options& o, RunOutput& run, json& result, std::ostream& out, std::ostream& err) {
    const ActivationArchive archive = read_archive(single(o.archives, "--archive"));
    const StimulusSet stimuli = training_stimuli(o, err);

    Table layers;
    layers.header = {"pair", "layer", "mean_accuracy"};
    for (std::size_t f = 0; f < o.folds; ++f) layers.header.push_back("fold_" + std::to_string(f));
    Table summary;
    summary.header = {"pair", "n_pairs", "best_layer", "best_accuracy", "tie_set"};
    std::vector<LineSeries> series;
    json reports = json::array();

    for (const auto& pair : selected_pairs(o)) {
        const LabeledPairs lp = labeled_pairs(stimuli, pair);
        CVReport cv;
        try {
            cv = crossval_select_layer(archive, lp, o.folds, o.seed);
        } catch (const Error& e) {
            throw Error(e.code(), to_string(pair) + ": " + e.what());
        }
        for (const auto& w : cv.warnings) err << "warning: " << to_string(pair) << ": " << w << "\n";
        LineSeries s{to_string(pair), {}, {}};
        for (std::size_t l = 0; l < cv.mean_accuracy.size(); ++l) {
            std::vector<std::string> row{to_string(pair), std::to_string(l), format_real(cv.mean_accuracy[l])};
            for (double a : cv.fold_accuracy[l]) row.push_back(format_real(a));
            layers.rows.push_back(std::move(row));
            s.x.push_back(static_cast<double>(l));
            s.y.push_back(cv.mean_accuracy[l]);
        }
        summary.rows.push_back({to_string(pair), std::to_string(lp.pairs.size()), std::to_string(cv.best_layer),
                                format_real(cv.best_accuracy()), tie_string(cv.tie_set)});
        out << to_string(pair) << "\tbest_layer=" << cv.best_layer << "\taccuracy=" << format_real(cv.best_accuracy())
            << "\n";
        series.push_back(std::move(s));
        reports.push_back(cv_json(cv));
    }
    write_table(run.file("cv_layers.tsv"), layers);
    write_table(run.file("cv_summary.tsv"), summary);
    write_line_plot_svg(run.file("cv.svg"), "Held-out pair accuracy by layer", "layer", "mean accuracy", series);
    result["reports"] = reports;
}

void cmd_classify(const Options& o, RunOutput& run, json& result, std::ostream& out, std::ostream& err) {
    static const std::vector<std::string> kMethods = {"diffvec", "logprob", "pc", "random"};
    std::vector<std::string> methods;
    if (o.method == "all") {
        methods = kMethods;
    } else if (std::find(kMethods.begin(), kMethods.end(), o.method) != kMethods.end()) {
        methods = {o.method};
    } else {
        fail(ErrorCode::usage, "unknown --method '" + o.method + "' (diffvec, logprob, pc, random, all)");
    }

    const ActivationArchive archive = read_archive(single(o.archives, "--archive"));
    const StimulusSet stimuli = training_stimuli(o, err);

    std::optional<ReferenceDirections> reference;
    if (std::find(methods.begin(), methods.end(), "pc") != methods.end()) {
        if (o.reference.empty()) {
            if (o.method == "pc") fail(ErrorCode::usage, "--method pc needs --reference");
            err << "warning: no --reference given; skipping the pc baseline\n";
            methods.erase(std::find(methods.begin(), methods.end(), "pc"));
            result["skipped_methods"] = {"pc"};
        } else {
            std::ifstream probe(fs::path(o.reference) / "manifest.json");
            json manifest = probe ? json::parse(probe, nullptr, false) : json();
            if (manifest.is_object() && manifest.value("kind", "") == "reference_directions") {
                reference = read_reference_directions(o.reference);
            } else {
                reference = fit_reference_pcs(read_archive(o.reference));
                write_reference_directions(run.file("reference_directions"), *reference);
            }
        }
    }

    Table table;
    table.header = {"pair", "method", "accuracy", "layer", "component", "orientation", "fold_accuracy"};
    std::vector<std::string> row_names;
    std::vector<std::vector<std::optional<double>>> grid;
    json rows = json::array();
    for (const auto& pair : selected_pairs(o)) {
        const LabeledPairs lp = labeled_pairs(stimuli, pair);
        row_names.push_back(to_string(pair));
        grid.emplace_back();
        for (const auto& method : methods) {
            double accuracy = 0.0;
            std::string layer = "NA", component = "NA", orientation = "NA";
            std::vector<double> folds;
            try {
                if (method == "diffvec") {
                    const CVReport cv = crossval_select_layer(archive, lp, o.folds, o.seed);
                    accuracy = cv.best_accuracy();
                    layer = std::to_string(cv.best_layer);
                    folds = cv.fold_accuracy[cv.best_layer];
                } else if (method == "logprob") {
                    const MethodScore score = logprob_crossval(archive, lp, o.folds, o.seed);
                    accuracy = score.mean_accuracy;
                    folds = score.fold_accuracy;
                } else {
                    const ProjectionSelection sel =
                        method == "pc" ? pc_baseline_select(archive, lp, *reference, o.folds, o.seed)
                                       : random_baseline_select(archive, lp, o.folds, o.seed);
                    accuracy = sel.held_out_accuracy();
                    layer = std::to_string(sel.layer);
                    component = std::to_string(sel.component);
                    orientation = std::to_string(sel.orientation);
                    folds = sel.cv.fold_accuracy[sel.layer];
                }
            } catch (const Error& e) {
                throw Error(e.code(), to_string(pair) + " (" + method + "): " + e.what());
            }
            table.rows.push_back({to_string(pair), method, format_real(accuracy), layer, component, orientation,
                                  fold_string(folds)});
            grid.back().push_back(accuracy);
            rows.push_back({{"pair", to_string(pair)}, {"method", method}, {"accuracy", accuracy}});
            out << to_string(pair) << "\t" << method << "\t" << format_real(accuracy) << "\n";
        }
    }
    write_table(run.file("classify.tsv"), table);
    write_heatmap_svg(run.file("classify.svg"), "Held-out pair accuracy", row_names, methods, grid);
    result["methods"] = methods;
    result["accuracy"] = rows;
}

void cmd_vectors(const Options& o, RunOutput& run, json& result, std::ostream& out, std::ostream& err) {
    const ActivationArchive archive = read_archive(single(o.archives, "--archive"));
    check_layer(o, archive);
    const StimulusSet stimuli = training_stimuli(o, err);
    std::vector<DifferenceVector> vectors;
    Table table;
    table.header = {"pair", "layer", "n_pairs", "norm", "cv_accuracy"};
    json fitted = json::array();
    for (const auto& pair : selected_pairs(o)) {
        const LabeledPairs lp = labeled_pairs(stimuli, pair);
        std::string accuracy = "NA";
        try {
            if (o.layer) {
                vectors.push_back(estimate_vector(archive, lp, *o.layer));
            } else {
                const CVReport cv = crossval_select_layer(archive, lp, o.folds, o.seed);
                vectors.push_back(refit_full(archive, lp, cv));
                accuracy = format_real(cv.best_accuracy());
                fitted.push_back(cv_json(cv));
            }
        } catch (const Error& e) {
            throw Error(e.code(), to_string(pair) + ": " + e.what());
        }
        const auto& v = vectors.back();
        table.rows.push_back({to_string(pair), std::to_string(v.layer), std::to_string(v.n_pairs),
                              format_real(v.vector.norm()), accuracy});
        out << to_string(pair) << "\tlayer=" << v.layer << "\tnorm=" << format_real(v.vector.norm()) << "\n";
    }
    write_vectors(run.file("vectors"), vectors);
    write_table(run.file("vectors.tsv"), table);
    result["reports"] = fitted;
}

void cmd_human(const Options& o, RunOutput& run, json& result, std::ostream& out, std::ostream& err) {
    if (o.responses.empty()) fail(ErrorCode::usage, "human needs --responses");
    const ActivationArchive archive = read_archive(single(o.archives, "--archive"));
    check_layer(o, archive);
    const StimulusSet all = read_stimuli(single(o.stimuli, "--stimuli"));
    const StimulusSet training = training_stimuli(o, err);
    const ResponseTable responses = read_responses(o.responses);

    // Responses are modelled on every stimulus outside the training source.
    std::vector<Stimulus> eval_items;
    for (const auto& s : all.items()) {
        if (o.train_source.empty() || s.source != o.train_source) eval_items.push_back(s);
    }
    const ValidationReport report = validate_stimuli(StimulusSet(std::move(eval_items)), &responses);
    for (const auto& issue : report.issues) {
        err << "warning: " << issue.rule << " (" << issue.stimulus_id << "): " << issue.message << "\n";
    }
    Table excluded;
    excluded.header = {"id", "reason"};
    for (const auto& x : report.excluded) excluded.rows.push_back({x.stimulus_id, x.reason});
    write_table(run.file("excluded.tsv"), excluded);
    if (report.kept_responses.rows.size() < 3) {
        fail(ErrorCode::precondition, "only " + std::to_string(report.kept_responses.rows.size()) +
                                          " stimuli with usable responses; need at least 3");
    }

    const std::vector<DifferenceVector> vectors = feature_vectors(o, archive, training, result);
    std::vector<std::string> ids;
    for (const auto& row : report.kept_responses.rows) ids.push_back(row.stimulus_id);
    const FeatureSpace features = build_feature_space(archive, vectors, false).subset(ids);

    LooOptions options;
    options.standardize = o.standardize;
    const Eigen::MatrixXd predicted = loo_predict(features, report.kept_responses, options);
    const Eigen::MatrixXd empirical = align_targets(features, report.kept_responses);
    const BehaviorReport behavior = evaluate_predictions(predicted, empirical, responses.labels, ids);
    for (const auto& w : behavior.warnings) err << "warning: " << w << "\n";
    run.file("behavior.tsv");
    run.file("metrics.json");
    write_behavior_report(run.dir(), behavior);

    auto metric = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    result["n_stimuli"] = ids.size();
    result["n_excluded"] = report.excluded.size();
    result["pearson_nminus1"] = metric(behavior.pearson_nminus1);
    result["mse"] = behavior.mse;
    result["entropy_pearson"] = metric(behavior.entropy_pearson);
    auto text = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("NA"); };
    out << "stimuli=" << ids.size() << "\tpearson_nminus1=" << text(behavior.pearson_nminus1)
        << "\tmse=" << format_real(behavior.mse) << "\tentropy_pearson=" << text(behavior.entropy_pearson) << "\n";
}

void cmd_interpret(const Options& o, RunOutput& run, json& result, std::ostream& out, std::ostream& err) {
    if (o.ratings.empty()) fail(ErrorCode::usage, "interpret needs --ratings");
    if (o.archives.empty()) fail(ErrorCode::usage, "interpret needs at least one --archive");
    if (!o.vectors.empty() && o.archives.size() > 1) {
        fail(ErrorCode::usage, "--vectors applies to a single archive");
    }
    const StimulusSet training = training_stimuli(o, err);
    const RatingsTable ratings = read_ratings(o.ratings);
    std::vector<CorrelationGrid> grids;
    json models = json::array();
    for (std::size_t i = 0; i < o.archives.size(); ++i) {
        try {
            const ActivationArchive archive = read_archive(o.archives[i]);
            check_layer(o, archive);
            json model{{"archive", o.archives[i]}, {"model_id", archive.model_id}};
            const auto vectors = feature_vectors(o, archive, training, model);
            grids.push_back(correlate_projections(build_feature_space(archive, vectors, false), ratings));
            if (o.archives.size() > 1) write_grid_table(run.file("grid_" + std::to_string(i) + ".tsv"), grids.back());
            models.push_back(model);
        } catch (const Error& e) {
            throw Error(e.code(), "archive " + o.archives[i] + ": " + e.what());
        }
    }
    const CorrelationGrid grid = aggregate_grids(grids);
    write_grid_table(run.file("grid.tsv"), grid);
    std::vector<std::vector<std::optional<double>>> values;
    for (std::size_t r = 0; r < grid.rows.size(); ++r) {
        values.emplace_back();
        for (std::size_t c = 0; c < grid.columns.size(); ++c) {
            const auto& cell = grid.at(r, c);
            values.back().push_back(cell.value);
            if (!cell.value || cell.excluded_grids) {
                err << "note: " << grid.rows[r] << " x " << grid.columns[c] << ": "
                    << (cell.note.empty() ? "undefined in some models" : cell.note) << " (" << cell.excluded_grids
                    << " excluded)\n";
            }
        }
    }
    write_heatmap_svg(run.file("grid.svg"), "|r| between projections and ratings", grid.rows, grid.columns, values);
    result["models"] = models;
    out << "grid " << grid.rows.size() << "x" << grid.columns.size() << " over " << grids.size() << " model(s)\n";
}

void cmd_sweep(const Options& o, RunOutput& run, json& result, std::ostream& out, std::ostream&) {
    SweepSpec spec;
    spec.axis = parse_sweep_axis(o.axis);
    spec.pairs = selected_pairs(o);
    spec.folds = o.folds;
    spec.seed = o.seed;
    if (o.archives.empty()) fail(ErrorCode::usage, "sweep needs at least one --archive");
    if (!o.labels.empty() && o.labels.size() != o.archives.size()) {
        fail(ErrorCode::usage, "--label must be given once per --archive");
    }
    if (o.stimuli.size() == 1) {
        spec.stimuli = o.stimuli.front();
    } else if (o.stimuli.size() != o.archives.size()) {
        fail(ErrorCode::usage, "give one --stimuli, or one per --archive");
    }
    for (std::size_t i = 0; i < o.archives.size(); ++i) {
        SweepEntry entry;
        entry.archive = o.archives[i];
        entry.label = o.labels.empty() ? fs::path(o.archives[i]).filename().string() : o.labels[i];
        if (o.stimuli.size() > 1) entry.stimuli = o.stimuli[i];
        spec.entries.push_back(std::move(entry));
    }
    const SweepResult sweep = run_sweep(spec);
    write_sweep_table(run.file("sweep.tsv"), sweep);

    Table emergence;
    emergence.header = {"pair", "first_position", "axis_value"};
    for (const auto& e : emergence_order(sweep)) {
        std::string value = "NA";
        if (e.first_position) {
            for (const auto& row : sweep.rows) {
                if (row.pair == e.pair && row.position == *e.first_position) value = row.axis_value;
            }
        }
        emergence.rows.push_back(
            {to_string(e.pair), e.first_position ? std::to_string(*e.first_position) : std::string("NA"), value});
    }
    write_table(run.file("emergence.tsv"), emergence);

    std::vector<LineSeries> series;
    std::vector<std::string> ticks;
    for (const auto& row : sweep.rows) {
        auto it = std::find_if(series.begin(), series.end(),
                               [&](const LineSeries& s) { return s.name == to_string(row.pair); });
        if (it == series.end()) {
            series.push_back({to_string(row.pair), {}, {}});
            it = std::prev(series.end());
        }
        it->x.push_back(static_cast<double>(row.position));
        it->y.push_back(row.accuracy);
        if (ticks.size() <= row.position) ticks.resize(row.position + 1);
        ticks[row.position] = row.axis_value;
    }
    write_line_plot_svg(run.file("sweep.svg"), "Cross-validated accuracy", std::string(to_string(sweep.axis)),
                        "accuracy", series, ticks);
    result["rows"] = sweep.rows.size();
    out << "sweep over " << spec.entries.size() << " archive(s), " << sweep.rows.size() << " rows\n";
}

void cmd_synth(const Options& o, RunOutput& run, json& result, std::ostream& out, std::ostream& err) {
    SynthSpec spec = o.synth;
    spec.seed = o.seed;
    const SynthData data = generate(spec);
    write_archive(data.archive, run.file("archive"));
    write_stimuli(run.file("stimuli.tsv"), data.stimuli);

    json truth{{"planted_layer", data.truth.planted_layer}, {"separation", spec.separation}};
    json directions = json::object();
    for (const auto& pair : all_category_pairs()) {
        const Eigen::VectorXd u = data.truth.direction(pair);
        directions[to_string(pair)] = std::vector<double>(u.data(), u.data() + u.size());
    }
    truth["directions"] = directions;
    write_json(run.file("truth.json"), truth);

    if (spec.separation > 0.0) {
        write_responses(run.file("responses.tsv"),
                        planted_responses(data, default_response_generator(), o.respondents));
        write_ratings(run.file("ratings.tsv"), planted_ratings(data));
    } else {
        err << "note: separation 0 leaves no planted features; responses and ratings are not written\n";
    }
    if (o.reference_sentences > 0) {
        ReferenceSpec ref;
        ref.sentences = o.reference_sentences;
        if (!o.pairs.empty()) ref.planted_pair = parse_category_pair(o.pairs.front());
        ref.seed = o.seed + 1;
        write_archive(generate_reference(spec, data.truth, ref).archive, run.file("reference"));
    }
    result["stimuli"] = data.stimuli.size();
    out << "wrote " << data.stimuli.size() << " stimuli, " << spec.layers << " layers x " << spec.hidden_dim
        << " to " << run.dir().string() << "\n";
}

json options_json(const Options& o, const std::string& command) {
    json j{{"archives", o.archives}, {"stimuli", o.stimuli}, {"pairs", o.pairs}, {"folds", o.folds},
           {"seed", o.seed}, {"out", o.out}};
    if (!o.responses.empty()) j["responses"] = o.responses;
    if (!o.ratings.empty()) j["ratings"] = o.ratings;
    if (!o.reference.empty()) j["reference"] = o.reference;
    if (!o.vectors.empty()) j["vectors"] = o.vectors;
    if (!o.train_source.empty()) j["train_source"] = o.train_source;
    if (o.layer) j["layer"] = *o.layer;
    if (command == "classify") j["method"] = o.method;
    if (command == "human") j["standardize"] = o.standardize;
    if (command == "sweep") {
        j["axis"] = o.axis;
        j["labels"] = o.labels;
    }
    if (command == "synth") {
        const SynthSpec& s = o.synth;
        j["synth"] = {{"layers", s.layers}, {"hidden_dim", s.hidden_dim}, {"per_category", s.per_category},
                      {"planted_layer", s.planted_layer}, {"noise_sd", s.noise_sd}, {"separation", s.separation},
                      {"logprob_gap", s.logprob_gap}, {"logprob_sd", s.logprob_sd},
                      {"reference_sentences", o.reference_sentences}, {"respondents", o.respondents}};
    }
    return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Modal difference vectors: layer selection, baselines, behavior and interpretation", "modalprobe"};
    app.require_subcommand(1);
    app.set_version_flag("--version", MODALPROBE_VERSION);

    auto common = [&](CLI::App* sub, bool archives_required) {
        auto* a = sub->add_option("--archive", o.archives, "Activation archive directory");
        if (archives_required) a->required();
        sub->add_option("--stimuli", o.stimuli, "Stimulus table (.tsv or .csv)")->required();
        sub->add_option("--pair", o.pairs, "Category pair, e.g. probable:impossible (default: all six)");
        sub->add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
        sub->add_option("--seed", o.seed, "Fold shuffling seed")->capture_default_str();
        sub->add_option("--out", o.out, "Output directory")->required();
        sub->add_option("--train-source", o.train_source, "Fit vectors only on stimuli with this source tag");
    };
    auto feature_flags = [&](CLI::App* sub) {
        sub->add_option("--vectors", o.vectors, "Vector bundle to use instead of fitting");
        sub->add_option("--layer", o.layer, "Fit vectors at this layer instead of the CV-selected one");
    };

    auto* cv = app.add_subcommand("cv", "Per-pair layer selection by cross-validation");
    common(cv, true);
    auto* classify = app.add_subcommand("classify", "Held-out pair accuracy for diffvec and the baselines");
    common(classify, true);
    classify->add_option("--method", o.method, "diffvec|logprob|pc|random|all")->capture_default_str();
    classify->add_option("--reference", o.reference, "Reference archive or reference-direction bundle for pc");
    auto* vectors = app.add_subcommand("vectors", "Refit and serialize difference vectors");
    common(vectors, true);
    vectors->add_option("--layer", o.layer, "Use this layer instead of the CV-selected one");
    auto* human = app.add_subcommand("human", "Leave-one-out soft-label model of human responses");
    common(human, true);
    feature_flags(human);
    human->add_option("--responses", o.responses, "Human response table")->required();
    human->add_flag("--standardize,!--no-standardize", o.standardize, "z-score features per training fold");
    auto* interpret = app.add_subcommand("interpret", "Correlate projections with feature ratings");
    common(interpret, true);
    feature_flags(interpret);
    interpret->add_option("--ratings", o.ratings, "Feature ratings table")->required();
    auto* sweep = app.add_subcommand("sweep", "Accuracy across checkpoints, layers or model scale");
    common(sweep, true);
    sweep->add_option("--axis", o.axis, "checkpoint|layer|scale")->capture_default_str();
    sweep->add_option("--label", o.labels, "Axis value for each --archive, in order");

    auto* synth = app.add_subcommand("synth", "Write a planted-structure synthetic dataset");
    synth->add_option("--out", o.out, "Output directory")->required();
    synth->add_option("--seed", o.seed, "Generator seed")->capture_default_str();
    synth->add_option("--layers", o.synth.layers)->capture_default_str();
    synth->add_option("--dim", o.synth.hidden_dim)->capture_default_str();
    synth->add_option("--per-category", o.synth.per_category)->capture_default_str();
    synth->add_option("--planted-layer", o.synth.planted_layer)->capture_default_str();
    synth->add_option("--separation", o.synth.separation)->capture_default_str();
    synth->add_option("--noise", o.synth.noise_sd)->capture_default_str();
    synth->add_option("--logprob-gap", o.synth.logprob_gap)->capture_default_str();
    synth->add_option("--logprob-sd", o.synth.logprob_sd)->capture_default_str();
    synth->add_option("--reference-sentences", o.reference_sentences, "0 disables the reference archive")
        ->capture_default_str();
    synth->add_option("--respondents", o.respondents)->capture_default_str();
    synth->add_option("--pair", o.pairs, "Pair whose direction dominates the reference archive");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << MODALPROBE_VERSION << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        CLI::App* failing = &app;
        for (auto* sub : app.get_subcommands()) failing = sub;
        err << failing->help();
        err << "error " << error_code_name(ErrorCode::usage) << ": " << e.what() << "\n";
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        if (o.folds < 2) fail(ErrorCode::usage, "--folds must be at least 2");
        RunOutput run(o.out);
        json result = json::object();
        if (command == "cv") cmd_cv(o, run, result, out, err);
        else if (command == "classify") cmd_classify(o, run, result, out, err);
        else if (command == "vectors") cmd_vectors(o, run, result, out, err);
        else if (command == "human") cmd_human(o, run, result, out, err);
        else if (command == "interpret") cmd_interpret(o, run, result, out, err);
        else if (command == "sweep") cmd_sweep(o, run, result, out, err);
        else if (command == "synth") cmd_synth(o, run, result, out, err);

        json manifest{{"tool", "modalprobe"},
                      {"version", MODALPROBE_VERSION},
                      {"subcommand", command},
                      {"argv", args},
                      {"config", options_json(o, command)},
                      {"threads", thread_budget()},
                      {"outputs", run.files()},
                      {"result", result}};
        write_json(run.dir() / "run.json", manifest);
        return 0;
    } catch (const Error& e) {
        err << "error " << error_code_name(e.code()) << ": " << e.what() << "\n";
        return e.code() == ErrorCode::usage ? 2 : 1;
    } catch (const fs::filesystem_error& e) {
        err << "error " << error_code_name(ErrorCode::io) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error E_INTERNAL: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace modalprobe
