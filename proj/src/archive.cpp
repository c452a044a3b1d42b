// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/archive.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "modalprobe/error.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace modalprobe {

std::vector<std::string> canonical_labels() {
    std::vector<std::string> out;
    for (Category c : kCanonicalCategories) out.emplace_back(to_string(c));
    return out;
}

void validate_archive(const ActivationArchive& a) {
    const std::size_t n = a.stimulus_ids.size();
    if (n == 0) fail(ErrorCode::validation, "empty stimulus set");
    if (a.layers.empty()) fail(ErrorCode::validation, "archive has no layers");
    const auto d = a.layers.front().cols();
    if (d <= 0) fail(ErrorCode::validation, "hidden_dim must be positive");
    for (std::size_t k = 0; k < a.layers.size(); ++k) {
        const auto& m = a.layers[k];
        if (static_cast<std::size_t>(m.rows()) != n || m.cols() != d) {
            fail(ErrorCode::validation,
                 "layer " + std::to_string(k) + " is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(n) + "x" +
                     std::to_string(d));
        }
        if (!m.allFinite()) {
            fail(ErrorCode::validation, "non-finite hidden state in layer " + std::to_string(k));
        }
    }
    if (a.summed_logprob.size() != n) {
        fail(ErrorCode::validation, "summed_logprob has " + std::to_string(a.summed_logprob.size()) +
                                        " entries, expected " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double lp = a.summed_logprob[i];
        if (!std::isfinite(lp) || lp > 0.0) {
            fail(ErrorCode::validation,
                 "summed_logprob must be finite and <= 0 (stimulus '" + a.stimulus_ids[i] + "')");
        }
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : a.stimulus_ids) {
        if (!seen.insert(id).second) fail(ErrorCode::validation, "duplicate stimulus id '" + id + "'");
    }
    if (a.labels.size() < 2) fail(ErrorCode::validation, "label set needs at least two labels");
}

void check_matches_stimuli(const ActivationArchive& archive, const StimulusSet& stimuli) {
    if (archive.size() != stimuli.size()) {
        fail(ErrorCode::validation, "manifest/stimulus mismatch: archive has " +
                                        std::to_string(archive.size()) + " stimuli, table has " +
                                        std::to_string(stimuli.size()));
    }
    for (const auto& id : archive.stimulus_ids) {
        if (!stimuli.find(id)) {
            fail(ErrorCode::validation, "manifest/stimulus mismatch: '" + id + "' not in stimulus table");
        }
    }
}

void write_f32_blob(const fs::path& path, std::span<const float> values) {
    std::vector<std::uint32_t> words(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t w = std::bit_cast<std::uint32_t>(values[i]);
        if constexpr (std::endian::native == std::endian::big) w = __builtin_bswap32(w);
        words[i] = w;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

std::vector<float> read_f32_blob(const fs::path& path, std::size_t expected_count) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) fail(ErrorCode::io, "missing layer file " + path.string());
    const auto bytes = fs::file_size(path, ec);
    if (ec) fail(ErrorCode::io, "cannot stat " + path.string());
    if (bytes != expected_count * sizeof(float)) {
        fail(ErrorCode::validation, "payload size mismatch: " + path.filename().string() + " has " +
                                        std::to_string(bytes) + " bytes, expected " +
                                        std::to_string(expected_count * sizeof(float)));
    }
    std::vector<std::uint32_t> words(expected_count);
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
    if (!in) fail(ErrorCode::io, "short read from " + path.string());
    std::vector<float> values(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        std::uint32_t w = words[i];
        if constexpr (std::endian::native == std::endian::big) w = __builtin_bswap32(w);
        values[i] = std::bit_cast<float>(w);
    }
    return values;
}

namespace {

fs::path layer_path(const fs::path& dir, std::size_t k) {
    return dir / ("layer_" + std::to_string(k) + ".f32");
}

void prepare_directory(const fs::path& dir) {
    std::error_code ec;
    if (fs::exists(dir, ec) && !fs::is_directory(dir, ec)) {
        fail(ErrorCode::io, dir.string() + " exists and is not a directory");
    }
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "missing manifest " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, "malformed manifest " + path.string() + ": " + e.what());
    }
}

template <typename T>
T field(const json& j, const char* key, const fs::path& path) {
    if (!j.contains(key)) fail(ErrorCode::validation, path.string() + ": manifest lacks '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::validation, path.string() + ": manifest field '" + key + "' has the wrong type");
    }
}

}  // namespace

void write_archive(const ActivationArchive& archive, const fs::path& dir) {
    validate_archive(archive);
    prepare_directory(dir);

    const std::size_t n = archive.size();
    const std::size_t d = archive.hidden_dim();
    for (std::size_t k = 0; k < archive.layer_count(); ++k) {
        const auto& m = archive.layers[k];
        write_f32_blob(layer_path(dir, k), std::span<const float>(m.data(), n * d));
    }

    json manifest;
    manifest["format_version"] = kArchiveFormatVersion;
    manifest["dtype"] = "float32";
    manifest["byte_order"] = "little";
    manifest["model_id"] = archive.model_id;
    manifest["checkpoint_id"] = archive.checkpoint_id;
    manifest["stream_point"] = archive.stream_point;
    manifest["layer_count"] = archive.layer_count();
    manifest["hidden_dim"] = d;
    manifest["n"] = n;
    manifest["labels"] = archive.labels;
    manifest["stimulus_ids"] = archive.stimulus_ids;
    manifest["summed_logprob"] = archive.summed_logprob;

    const fs::path path = dir / "manifest.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out << manifest.dump(2) << '\n';
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

ActivationArchive read_archive(const fs::path& dir) {
    const fs::path path = dir / "manifest.json";
    const json m = read_json(path);

    const int version = field<int>(m, "format_version", path);
    if (version != kArchiveFormatVersion) {
        fail(ErrorCode::validation, path.string() + ": unsupported format_version " + std::to_string(version));
    }
    if (m.contains("dtype") && m.at("dtype") != "float32") {
        fail(ErrorCode::validation, path.string() + ": only float32 payloads are supported");
    }
    if (m.contains("byte_order") && m.at("byte_order") != "little") {
        fail(ErrorCode::validation, path.string() + ": only little-endian payloads are supported");
    }

    ActivationArchive a;
    a.model_id = field<std::string>(m, "model_id", path);
    a.checkpoint_id = field<std::string>(m, "checkpoint_id", path);
    a.stream_point = m.value("stream_point", std::string(kDefaultStreamPoint));
    if (m.contains("labels")) a.labels = field<std::vector<std::string>>(m, "labels", path);
    a.stimulus_ids = field<std::vector<std::string>>(m, "stimulus_ids", path);
    a.summed_logprob = field<std::vector<double>>(m, "summed_logprob", path);

    const auto L = field<std::size_t>(m, "layer_count", path);
    const auto d = field<std::size_t>(m, "hidden_dim", path);
    const auto n = field<std::size_t>(m, "n", path);
    if (n != a.stimulus_ids.size()) {
        fail(ErrorCode::validation, path.string() + ": n = " + std::to_string(n) + " but " +
                                        std::to_string(a.stimulus_ids.size()) + " stimulus_ids");
    }
    if (n == 0) fail(ErrorCode::validation, "empty stimulus set");
    if (L == 0 || d == 0) fail(ErrorCode::validation, path.string() + ": layer_count and hidden_dim must be positive");

    a.layers.reserve(L);
    for (std::size_t k = 0; k < L; ++k) {
        const auto values = read_f32_blob(layer_path(dir, k), n * d);
        LayerMatrix layer(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
        std::memcpy(layer.data(), values.data(), values.size() * sizeof(float));
        a.layers.push_back(std::move(layer));
    }
    validate_archive(a);
    return a;
}

RowIndex::RowIndex(const ActivationArchive& archive) {
    rows_.reserve(archive.size());
    for (std::size_t i = 0; i < archive.size(); ++i) rows_.emplace(archive.stimulus_ids[i], i);
}

std::optional<std::size_t> RowIndex::find(std::string_view id) const {
    auto it = rows_.find(std::string(id));
    if (it == rows_.end()) return std::nullopt;
    return it->second;
}

std::size_t RowIndex::at(std::string_view id) const {
    if (auto row = find(id)) return *row;
    fail(ErrorCode::precondition, "unknown stimulus id '" + std::string(id) + "'");
}

}  // namespace modalprobe
