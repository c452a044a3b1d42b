// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include "modalprobe/category.hpp"

#include "modalprobe/error.hpp"

namespace modalprobe {

std::string_view to_string(Category c) {
    switch (c) {
        case Category::probable: return "probable";
        case Category::improbable: return "improbable";
        case Category::impossible: return "impossible";
        case Category::inconceivable: return "inconceivable";
    }
    return "?";
}

std::optional<Category> parse_category(std::string_view text) {
    for (Category c : kCanonicalCategories) {
        if (text == to_string(c)) return c;
    }
    return std::nullopt;
}

int probability_rank(Category c) {
    switch (c) {
        case Category::inconceivable: return 0;
        case Category::impossible: return 1;
        case Category::improbable: return 2;
        case Category::probable: return 3;
    }
    return -1;
}

std::string to_string(const CategoryPair& pair) {
    std::string out(to_string(pair.positive));
    out += ':';
    out += to_string(pair.negative);
    return out;
}

CategoryPair parse_category_pair(std::string_view text) {
    const auto sep = text.find_first_of(":-");
    if (sep == std::string_view::npos) {
        fail(ErrorCode::usage, "category pair must look like probable:impossible, got '" +
                                   std::string(text) + "'");
    }
    const auto pos = parse_category(text.substr(0, sep));
    const auto neg = parse_category(text.substr(sep + 1));
    if (!pos || !neg) fail(ErrorCode::usage, "unknown category in pair '" + std::string(text) + "'");
    if (*pos == *neg) fail(ErrorCode::usage, "category pair needs two distinct categories");
    return {*pos, *neg};
}

std::array<CategoryPair, 6> all_category_pairs() {
    using C = Category;
    return {{{C::probable, C::improbable},
             {C::probable, C::impossible},
             {C::probable, C::inconceivable},
             {C::improbable, C::impossible},
             {C::improbable, C::inconceivable},
             {C::impossible, C::inconceivable}}};
}

std::array<CategoryPair, 3> feature_space_pairs() {
    using C = Category;
    return {{{C::probable, C::improbable},
             {C::improbable, C::impossible},
             {C::impossible, C::inconceivable}}};
}

}  // namespace modalprobe
