// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "modalprobe/stimuli.hpp"
#include "support.hpp"

using namespace modalprobe;
using modalprobe::testing::check_error;
using modalprobe::testing::TempDir;
using modalprobe::testing::write_text;

namespace {

ResponseTable responses_for(const StimulusSet& stimuli, int respondents) {
    ResponseTable t;
    t.labels = {"possible", "impossible"};
    for (const auto& s : stimuli.items()) t.rows.push_back({s.id, {0.75, 0.25}, respondents});
    return t;
}

bool has_rule(const ValidationReport& r, std::string_view rule) {
    return std::any_of(r.issues.begin(), r.issues.end(), [&](const ValidationIssue& i) { return i.rule == rule; });
}

}  // namespace

TEST_CASE("clean set gives an empty report") {
    const StimulusSet s = modalprobe::testing::grouped_stimuli(3, {Category::probable, Category::impossible});
    const ResponseTable r = responses_for(s, 10);
    const ValidationReport report = validate_stimuli(s, &r);
    CHECK(report.clean());
    CHECK(report.kept_stimuli.size() == s.size());
    CHECK(report.kept_responses.rows.size() == s.size());
}

TEST_CASE("three respondents exclude the stimulus and list it") {
    const StimulusSet s = modalprobe::testing::grouped_stimuli(2, {Category::probable, Category::impossible});
    ResponseTable r = responses_for(s, 10);
    r.rows[1].respondent_count = 3;
    const ValidationReport report = validate_stimuli(s, &r);
    REQUIRE(report.excluded.size() == 1);
    CHECK(report.excluded[0].stimulus_id == r.rows[1].stimulus_id);
    CHECK(report.excluded[0].reason.find("respondent_count 3") != std::string::npos);
    CHECK(report.kept_stimuli.size() == 3);

    r.rows[1].respondent_count = kMinRespondents;
    CHECK(validate_stimuli(s, &r).excluded.empty());
}

TEST_CASE("a distribution not summing to one is a violation") {
    const StimulusSet s = modalprobe::testing::grouped_stimuli(1, {Category::probable, Category::impossible});
    ResponseTable r;
    r.labels = {"a", "b", "c"};
    r.rows.push_back({s.items()[0].id, {0.5, 0.5, 0.1}, 10});
    r.rows.push_back({s.items()[1].id, {0.5, 0.6, -0.1}, 10});
    const ValidationReport report = validate_stimuli(s, &r);
    CHECK(has_rule(report, "sum != 1"));
    CHECK(has_rule(report, "negative probability"));
    CHECK(report.kept_stimuli.empty());
}

TEST_CASE("structural violations are all reported") {
    std::vector<Stimulus> items = modalprobe::testing::grouped_stimuli(2, {Category::probable, Category::impossible}).items();
    items.push_back(items[0]);                       // duplicate id
    Stimulus lonely{"x", "Alone.", Category::probable, std::string("solo"), "test", std::nullopt};
    items.push_back(lonely);                          // dangling pair_id
    Stimulus twin{"y", "Twin.", Category::impossible, std::string("g1"), "test", std::nullopt};
    items.push_back(twin);                            // same category within g1
    const StimulusSet s(items);
    const ValidationReport report = validate_stimuli(s);
    CHECK(has_rule(report, "duplicate id"));
    CHECK(has_rule(report, "dangling pair_id"));
    CHECK(has_rule(report, "pair categories not distinct"));

    ResponseTable r;
    r.labels = {"a", "b"};
    r.rows.push_back({"ghost", {0.5, 0.5}, 5});
    CHECK(has_rule(validate_stimuli(s, &r), "unknown stimulus"));
}

TEST_CASE("minimal pairs follow first appearance and orientation") {
    const StimulusSet s = modalprobe::testing::grouped_stimuli(
        3, {Category::inconceivable, Category::probable, Category::improbable});
    const auto pairs = minimal_pairs(s, {Category::probable, Category::inconceivable});
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0] == MinimalPair{"s0-probable", "s0-inconceivable"});
    CHECK(pairs[2] == MinimalPair{"s2-probable", "s2-inconceivable"});
    CHECK(minimal_pairs(s, {Category::probable, Category::impossible}).empty());
    CHECK(pairs[1].swapped() == MinimalPair{"s1-inconceivable", "s1-probable"});
}

TEST_CASE("stimulus, response and rating tables round-trip") {
    TempDir dir;
    std::vector<Stimulus> items = modalprobe::testing::grouped_stimuli(2, {Category::probable, Category::impossible}).items();
    items[0].text = "He said, \"fine\".";
    items[1].adversarial = Adversarial::semantic;
    items.push_back({"free", "No category.", std::nullopt, std::nullopt, "other", std::nullopt});
    const StimulusSet s(items);
    write_stimuli(dir / "stimuli.csv", s);
    const StimulusSet back = read_stimuli(dir / "stimuli.csv");
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back.items()[i].id == s.items()[i].id);
        CHECK(back.items()[i].text == s.items()[i].text);
        CHECK(back.items()[i].category == s.items()[i].category);
        CHECK(back.items()[i].pair_id == s.items()[i].pair_id);
        CHECK(back.items()[i].source == s.items()[i].source);
    }
    CHECK(back.items()[1].adversarial == Adversarial::semantic);
    CHECK(back.filter_source("other").size() == 1);
    CHECK(back.find("free") != nullptr);

    ResponseTable r = responses_for(s, 7);
    r.rows[0].distribution = {0.1, 0.9};
    write_responses(dir / "responses.tsv", r);
    const ResponseTable rb = read_responses(dir / "responses.tsv");
    CHECK(rb.labels == r.labels);
    REQUIRE(rb.rows.size() == r.rows.size());
    CHECK(rb.rows[0].distribution == r.rows[0].distribution);
    CHECK(rb.rows[0].respondent_count == 7);

    write_text(dir / "ratings.tsv", "id\tEventLikelihood\tImageability\na\t4.5\tNA\nb\t2\t3.25\n");
    const RatingsTable ratings = read_ratings(dir / "ratings.tsv");
    CHECK(ratings.features == std::vector<std::string>{"EventLikelihood", "Imageability"});
    CHECK(ratings.rows[0].ratings[1] == std::nullopt);
    CHECK(*ratings.rows[1].ratings[1] == 3.25);
    write_ratings(dir / "ratings2.tsv", ratings);
    CHECK(read_ratings(dir / "ratings2.tsv").rows[0].ratings[1] == std::nullopt);

    write_text(dir / "bad.tsv", "id\tEventLikelihood\na\t\n");
    check_error([&] { read_ratings(dir / "bad.tsv"); }, ErrorCode::validation, "empty rating");
    write_text(dir / "badcat.tsv", "id\ttext\tcategory\tpair_id\tsource\tadversarial\na\tA.\tlikely\t\t\t\n");
    check_error([&] { read_stimuli(dir / "badcat.tsv"); }, ErrorCode::validation, "unknown category 'likely'");
    check_error([&] { read_stimuli(dir / "missing.tsv"); }, ErrorCode::io, "cannot open");
}
