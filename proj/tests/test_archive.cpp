// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <filesystem>

#include <json.hpp>

#include "modalprobe/archive.hpp"
#include "support.hpp"

using namespace modalprobe;
using modalprobe::testing::check_error;
using modalprobe::testing::read_bytes;
using modalprobe::testing::TempDir;

namespace {

ActivationArchive tiny_archive() {
    ActivationArchive a;
    a.model_id = "m";
    a.checkpoint_id = "c";
    a.stimulus_ids = {"only"};
    LayerMatrix l0(1, 3), l1(1, 3);
    l0 << 1.0f, 2.0f, 3.0f;
    l1 << -0.5f, 0.0f, 1e-30f;
    a.layers = {l0, l1};
    a.summed_logprob = {-4.25};
    return a;
}

}  // namespace

TEST_CASE("single-row layer file is exactly 12 little-endian bytes") {
    TempDir dir;
    write_archive(tiny_archive(), dir / "a");
    const std::string bytes = read_bytes(dir / "a" / "layer_0.f32");
    REQUIRE(bytes.size() == 12);
    const unsigned char expected[12] = {0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0x40, 0x00, 0x00, 0x40, 0x40};
    CHECK(std::memcmp(bytes.data(), expected, 12) == 0);

    const ActivationArchive back = read_archive(dir / "a");
    CHECK(back.layers[0](0, 0) == 1.0f);
    CHECK(back.layers[0](0, 1) == 2.0f);
    CHECK(back.layers[0](0, 2) == 3.0f);
}

TEST_CASE("empty stimulus set is rejected") {
    ActivationArchive a = tiny_archive();
    a.stimulus_ids.clear();
    a.layers = {LayerMatrix(0, 3)};
    a.summed_logprob.clear();
    check_error([&] { validate_archive(a); }, ErrorCode::validation, "empty stimulus set");
}

TEST_CASE("archive validation rules") {
    ActivationArchive a = tiny_archive();
    a.summed_logprob = {0.5};
    check_error([&] { validate_archive(a); }, ErrorCode::validation, "summed_logprob");
    a = tiny_archive();
    a.layers[1](0, 1) = std::numeric_limits<float>::quiet_NaN();
    check_error([&] { validate_archive(a); }, ErrorCode::validation, "non-finite");
    a = tiny_archive();
    a.layers[1] = LayerMatrix::Zero(1, 4);
    check_error([&] { validate_archive(a); }, ErrorCode::validation, "");
    a = tiny_archive();
    a.stimulus_ids = {"x", "x"};
    a.layers = {LayerMatrix::Zero(2, 3)};
    a.summed_logprob = {-1, -1};
    check_error([&] { validate_archive(a); }, ErrorCode::validation, "duplicate stimulus id");
}

TEST_CASE("round trip reproduces every value and every byte") {
    TempDir dir;
    const StimulusSet s = modalprobe::testing::grouped_stimuli(5, {Category::probable, Category::impossible});
    std::mt19937_64 rng(11);
    std::normal_distribution<float> normal(0.0f, 3.0f);
    ActivationArchive a = modalprobe::testing::random_archive(s, 3, 7, [&] { return normal(rng); });
    a.layers[2](0, 0) = -0.0f;
    a.layers[2](1, 0) = std::numeric_limits<float>::denorm_min();
    write_archive(a, dir / "one");
    const ActivationArchive b = read_archive(dir / "one");
    CHECK(b.model_id == a.model_id);
    CHECK(b.stimulus_ids == a.stimulus_ids);
    CHECK(b.summed_logprob == a.summed_logprob);
    CHECK(b.labels == a.labels);
    CHECK(b.stream_point == std::string(kDefaultStreamPoint));
    for (std::size_t l = 0; l < a.layer_count(); ++l) {
        CHECK(std::memcmp(a.layers[l].data(), b.layers[l].data(), sizeof(float) * a.layers[l].size()) == 0);
    }
    write_archive(b, dir / "two");
    for (const auto& entry : std::filesystem::directory_iterator(dir / "one")) {
        CHECK(read_bytes(entry.path()) == read_bytes(dir / "two" / entry.path().filename()));
    }
    check_matches_stimuli(b, s);
}

TEST_CASE("truncated payload is a size mismatch") {
    TempDir dir;
    const StimulusSet s = modalprobe::testing::grouped_stimuli(2, {Category::probable, Category::impossible});
    int k = 0;
    write_archive(modalprobe::testing::random_archive(s, 2, 4, [&] { return k++; }), dir / "a");
    const auto layer1 = dir / "a" / "layer_1.f32";
    std::filesystem::resize_file(layer1, std::filesystem::file_size(layer1) - 4);
    check_error([&] { read_archive(dir / "a"); }, ErrorCode::validation, "payload size mismatch");
    std::filesystem::remove(layer1);
    check_error([&] { read_archive(dir / "a"); }, ErrorCode::io, "missing layer file");
}

TEST_CASE("manifest with d = 32, n = 1 accepts a 128-byte layer") {
    TempDir dir;
    ActivationArchive a;
    a.model_id = "m";
    a.checkpoint_id = "c";
    a.stimulus_ids = {"s"};
    a.layers = {LayerMatrix::Constant(1, 32, 0.25f)};
    a.summed_logprob = {-1.0};
    write_archive(a, dir / "a");
    CHECK(std::filesystem::file_size(dir / "a" / "layer_0.f32") == 128);
    const ActivationArchive b = read_archive(dir / "a");
    CHECK(b.hidden_dim() == 32);
    CHECK(b.size() == 1);
}

TEST_CASE("manifest problems are validation errors") {
    TempDir dir;
    write_archive(tiny_archive(), dir / "a");
    const auto manifest = dir / "a" / "manifest.json";
    auto edit = [&](auto&& fn) {
        std::ifstream in(manifest);
        nlohmann::json j = nlohmann::json::parse(in);
        in.close();
        fn(j);
        std::ofstream(manifest) << j.dump();
    };
    edit([](nlohmann::json& j) { j["byte_order"] = "big"; });
    check_error([&] { read_archive(dir / "a"); }, ErrorCode::validation, "little-endian");
    edit([](nlohmann::json& j) { j["byte_order"] = "little"; j["n"] = 2; });
    check_error([&] { read_archive(dir / "a"); }, ErrorCode::validation, "n = 2");
    edit([](nlohmann::json& j) { j["n"] = 1; j.erase("hidden_dim"); });
    check_error([&] { read_archive(dir / "a"); }, ErrorCode::validation, "hidden_dim");
    modalprobe::testing::write_text(manifest, "{not json");
    check_error([&] { read_archive(dir / "a"); }, ErrorCode::validation, "malformed manifest");
    check_error([&] { read_archive(dir / "absent"); }, ErrorCode::io, "missing manifest");
}

TEST_CASE("archive ids must match the stimulus table") {
    const StimulusSet s = modalprobe::testing::grouped_stimuli(2, {Category::probable, Category::impossible});
    ActivationArchive a = modalprobe::testing::random_archive(s, 1, 2, [] { return 1.0; });
    check_matches_stimuli(a, s);
    a.stimulus_ids[0] = "other";
    check_error([&] { check_matches_stimuli(a, s); }, ErrorCode::validation, "manifest/stimulus mismatch");

    const RowIndex index(a);
    CHECK(index.at("other") == 0);
    CHECK_FALSE(index.find("s0-probable").has_value());
    check_error([&] { (void)index.at("nope"); }, ErrorCode::precondition, "unknown stimulus id");
}
