// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <doctest.h>

#include "modalprobe/archive.hpp"
#include "modalprobe/error.hpp"
#include "modalprobe/stimuli.hpp"

namespace modalprobe::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("modalprobe-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Runs fn and checks it throws modalprobe::Error with the given code and a
// message containing `needle`.
template <class Fn>
void check_error(Fn&& fn, ErrorCode code, std::string_view needle) {
    try {
        fn();
        FAIL("expected an error containing '" << std::string(needle) << "'");
    } catch (const Error& e) {
        CHECK(e.code() == code);
        INFO("message: " << e.what());
        CHECK(std::string_view(e.what()).find(needle) != std::string_view::npos);
    }
}

// Stimuli s<i>-<category> grouped into pair_ids "g<i>" with one member of
// each listed category per group.
inline StimulusSet grouped_stimuli(std::size_t groups, const std::vector<Category>& categories) {
    std::vector<Stimulus> items;
    for (std::size_t g = 0; g < groups; ++g) {
        for (Category c : categories) {
            Stimulus s;
            s.id = "s" + std::to_string(g) + "-" + std::string(to_string(c));
            s.text = "Sentence " + std::to_string(g) + ".";
            s.category = c;
            s.pair_id = "g" + std::to_string(g);
            s.source = "test";
            items.push_back(std::move(s));
        }
    }
    return StimulusSet(std::move(items));
}

// Archive over the ids of `stimuli` with i.i.d. states drawn by `draw`.
template <class Draw>
ActivationArchive random_archive(const StimulusSet& stimuli, std::size_t layers, std::size_t dim,
                                 Draw&& draw) {
    ActivationArchive a;
    a.model_id = "test-model";
    a.checkpoint_id = "final";
    for (const auto& s : stimuli.items()) a.stimulus_ids.push_back(s.id);
    const auto n = static_cast<Eigen::Index>(a.stimulus_ids.size());
    for (std::size_t l = 0; l < layers; ++l) {
        LayerMatrix m(n, static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<float>(draw());
        }
        a.layers.push_back(std::move(m));
    }
    for (Eigen::Index i = 0; i < n; ++i) a.summed_logprob.push_back(-10.0 - static_cast<double>(i % 7));
    return a;
}

}  // namespace modalprobe::testing
