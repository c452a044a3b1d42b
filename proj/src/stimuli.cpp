// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/stimuli.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <unordered_set>

#include "modalprobe/error.hpp"
#include "modalprobe/table.hpp"

namespace modalprobe {

StimulusSet::StimulusSet(std::vector<Stimulus> items) : items_(std::move(items)) {
    for (std::size_t i = 0; i < items_.size(); ++i) by_id_.emplace(items_[i].id, i);
}

const Stimulus* StimulusSet::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &items_[it->second];
}

StimulusSet StimulusSet::filter_source(std::string_view source) const {
    std::vector<Stimulus> kept;
    for (const auto& s : items_) {
        if (s.source == source) kept.push_back(s);
    }
    return StimulusSet(std::move(kept));
}

const HumanResponses* ResponseTable::find(std::string_view id) const {
    for (const auto& row : rows) {
        if (row.stimulus_id == id) return &row;
    }
    return nullptr;
}

namespace {

std::string_view to_string(Adversarial a) {
    switch (a) {
        case Adversarial::none: return "none";
        case Adversarial::lexical: return "lexical";
        case Adversarial::semantic: return "semantic";
    }
    return "";
}

std::optional<Adversarial> parse_adversarial(std::string_view text, const std::string& where) {
    if (text.empty()) return std::nullopt;
    if (text == "none") return Adversarial::none;
    if (text == "lexical") return Adversarial::lexical;
    if (text == "semantic") return Adversarial::semantic;
    fail(ErrorCode::validation, where + ": unknown adversarial tag '" + std::string(text) + "'");
}

int parse_count(std::string_view text, const std::string& where) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value < 0) {
        fail(ErrorCode::validation, where + ": respondent_count must be a nonnegative integer");
    }
    return value;
}

}  // namespace

StimulusSet read_stimuli(const std::filesystem::path& path) {
    const Table table = read_table(path);
    const std::size_t c_id = table.column("id");
    const std::size_t c_text = table.column("text");
    const auto c_cat = table.find_column("category");
    const auto c_pair = table.find_column("pair_id");
    const auto c_source = table.find_column("source");
    const auto c_adv = table.find_column("adversarial");

    std::vector<Stimulus> items;
    items.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path.string() + " row " + std::to_string(r + 1);
        Stimulus s;
        s.id = row[c_id];
        if (s.id.empty()) fail(ErrorCode::validation, where + ": empty id");
        s.text = row[c_text];
        if (c_cat && !row[*c_cat].empty()) {
            s.category = parse_category(row[*c_cat]);
            if (!s.category) {
                fail(ErrorCode::validation, where + ": unknown category '" + row[*c_cat] + "'");
            }
        }
        if (c_pair && !row[*c_pair].empty()) s.pair_id = row[*c_pair];
        if (c_source) s.source = row[*c_source];
        if (c_adv) s.adversarial = parse_adversarial(row[*c_adv], where);
        items.push_back(std::move(s));
    }
    return StimulusSet(std::move(items));
}

void write_stimuli(const std::filesystem::path& path, const StimulusSet& stimuli) {
    Table table;
    table.header = {"id", "text", "category", "pair_id", "source", "adversarial"};
    for (const auto& s : stimuli.items()) {
        table.rows.push_back({s.id, s.text,
                              s.category ? std::string(to_string(*s.category)) : std::string(),
                              s.pair_id.value_or(""), s.source,
                              s.adversarial ? std::string(to_string(*s.adversarial)) : std::string()});
    }
    write_table(path, table);
}

ResponseTable read_responses(const std::filesystem::path& path) {
    const Table table = read_table(path);
    const std::size_t c_id = table.column("id");
    const std::size_t c_count = table.column("respondent_count");
    ResponseTable out;
    std::vector<std::size_t> label_cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == c_id || c == c_count) continue;
        out.labels.push_back(table.header[c]);
        label_cols.push_back(c);
    }
    if (out.labels.size() < 2) {
        fail(ErrorCode::validation, path.string() + ": responses need at least two label columns");
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path.string() + " row " + std::to_string(r + 1);
        HumanResponses h;
        h.stimulus_id = row[c_id];
        for (std::size_t c : label_cols) h.distribution.push_back(parse_real(row[c], where));
        h.respondent_count = parse_count(row[c_count], where);
        out.rows.push_back(std::move(h));
    }
    return out;
}

void write_responses(const std::filesystem::path& path, const ResponseTable& responses) {
    Table table;
    table.header.push_back("id");
    for (const auto& l : responses.labels) table.header.push_back(l);
    table.header.push_back("respondent_count");
    for (const auto& h : responses.rows) {
        std::vector<std::string> row{h.stimulus_id};
        for (double p : h.distribution) row.push_back(format_real(p));
        row.push_back(std::to_string(h.respondent_count));
        table.rows.push_back(std::move(row));
    }
    write_table(path, table);
}

RatingsTable read_ratings(const std::filesystem::path& path) {
    const Table table = read_table(path);
    const std::size_t c_id = table.column("id");
    RatingsTable out;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == c_id) continue;
        out.features.push_back(table.header[c]);
        cols.push_back(c);
    }
    if (out.features.empty()) fail(ErrorCode::validation, path.string() + ": no feature columns");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path.string() + " row " + std::to_string(r + 1);
        FeatureRatings fr;
        fr.stimulus_id = row[c_id];
        for (std::size_t c : cols) {
            if (row[c] == "NA") {
                fr.ratings.emplace_back(std::nullopt);
            } else if (row[c].empty()) {
                fail(ErrorCode::validation, where + ": empty rating for '" + table.header[c] +
                                                "' (write NA for a missing rating)");
            } else {
                fr.ratings.emplace_back(parse_real(row[c], where));
            }
        }
        out.rows.push_back(std::move(fr));
    }
    return out;
}

void write_ratings(const std::filesystem::path& path, const RatingsTable& ratings) {
    Table table;
    table.header.push_back("id");
    for (const auto& f : ratings.features) table.header.push_back(f);
    for (const auto& fr : ratings.rows) {
        std::vector<std::string> row{fr.stimulus_id};
        for (const auto& v : fr.ratings) row.push_back(v ? format_real(*v) : "NA");
        table.rows.push_back(std::move(row));
    }
    write_table(path, table);
}

ValidationReport validate_stimuli(const StimulusSet& stimuli, const ResponseTable* responses) {
    ValidationReport report;
    std::unordered_set<std::string> seen;
    std::map<std::string, std::vector<const Stimulus*>> groups;

    for (const auto& s : stimuli.items()) {
        if (!seen.insert(s.id).second) {
            report.issues.push_back({"duplicate id", s.id, "id '" + s.id + "' appears more than once"});
        }
        if (s.pair_id) groups[*s.pair_id].push_back(&s);
    }
    for (const auto& [pair_id, members] : groups) {
        if (members.size() < 2) {
            report.issues.push_back({"dangling pair_id", members.front()->id,
                                     "pair_id '" + pair_id + "' has no partner"});
            continue;
        }
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                if (members[i]->category == members[j]->category) {
                    report.issues.push_back(
                        {"pair categories not distinct", members[j]->id,
                         "'" + members[i]->id + "' and '" + members[j]->id + "' share pair_id '" +
                             pair_id + "' and category"});
                }
            }
        }
    }

    if (!responses) {
        report.kept_stimuli = stimuli;
        return report;
    }

    std::unordered_set<std::string> bad_distribution;
    for (const auto& h : responses->rows) {
        if (!stimuli.find(h.stimulus_id)) {
            report.issues.push_back({"unknown stimulus", h.stimulus_id,
                                     "response row for an id not in the stimulus set"});
        }
        if (h.distribution.size() != responses->labels.size()) {
            report.issues.push_back({"label count", h.stimulus_id, "distribution length differs from label set"});
            bad_distribution.insert(h.stimulus_id);
            continue;
        }
        double sum = 0.0;
        bool negative = false;
        for (double p : h.distribution) {
            sum += p;
            negative = negative || p < 0.0 || !std::isfinite(p);
        }
        if (negative) {
            report.issues.push_back({"negative probability", h.stimulus_id, "distribution has a negative or non-finite entry"});
            bad_distribution.insert(h.stimulus_id);
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            report.issues.push_back({"sum != 1", h.stimulus_id,
                                     "distribution sums to " + format_real(sum)});
            bad_distribution.insert(h.stimulus_id);
        }
    }

    report.kept_responses.labels = responses->labels;
    std::vector<Stimulus> kept;
    for (const auto& s : stimuli.items()) {
        const HumanResponses* h = responses->find(s.id);
        if (!h) {
            report.excluded.push_back({s.id, "no responses"});
        } else if (h->respondent_count < kMinRespondents) {
            report.excluded.push_back(
                {s.id, "respondent_count " + std::to_string(h->respondent_count) + " < " +
                           std::to_string(kMinRespondents)});
        } else if (bad_distribution.count(s.id)) {
            report.excluded.push_back({s.id, "invalid distribution"});
        } else {
            kept.push_back(s);
            report.kept_responses.rows.push_back(*h);
        }
    }
    report.kept_stimuli = StimulusSet(std::move(kept));
    return report;
}

std::vector<MinimalPair> minimal_pairs(const StimulusSet& stimuli, const CategoryPair& pair) {
    std::vector<std::string> order;
    std::map<std::string, std::pair<const Stimulus*, const Stimulus*>> groups;
    for (const auto& s : stimuli.items()) {
        if (!s.pair_id || !s.category) continue;
        auto [it, inserted] = groups.try_emplace(*s.pair_id, nullptr, nullptr);
        if (inserted) order.push_back(*s.pair_id);
        if (*s.category == pair.positive && !it->second.first) it->second.first = &s;
        if (*s.category == pair.negative && !it->second.second) it->second.second = &s;
    }
    std::vector<MinimalPair> out;
    for (const auto& key : order) {
        const auto& [pos, neg] = groups[key];
        if (pos && neg) out.push_back({pos->id, neg->id});
    }
    return out;
}

}  // namespace modalprobe
