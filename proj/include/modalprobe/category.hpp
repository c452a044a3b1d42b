// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace modalprobe {

enum class Category { probable, improbable, impossible, inconceivable };

inline constexpr std::array<Category, 4> kCanonicalCategories = {
    Category::probable, Category::improbable, Category::impossible, Category::inconceivable};

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view text);

// Position in the expected probability ordering, least probable first:
// inconceivable (0) < impossible (1) < improbable (2) < probable (3).
int probability_rank(Category c);

// An ordered (positive, negative) pair of distinct categories.
struct CategoryPair {
    Category positive;
    Category negative;

    CategoryPair reversed() const { return {negative, positive}; }
    friend bool operator==(const CategoryPair&, const CategoryPair&) = default;
};

// "probable:impossible" form used on the command line and in manifests.
std::string to_string(const CategoryPair& pair);
CategoryPair parse_category_pair(std::string_view text);

// The six unordered pairs, each oriented more-probable first.
std::array<CategoryPair, 6> all_category_pairs();

// The three adjacent pairs spanning the behavioral feature space, in column order:
// probable-improbable, improbable-impossible, impossible-inconceivable.
std::array<CategoryPair, 3> feature_space_pairs();

}  // namespace modalprobe
