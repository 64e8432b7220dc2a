// Copyright 2026 The phibench Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "phibench/geometry.hpp"
#include "phibench/rng.hpp"
#include "phibench/taxonomy.hpp"

namespace phibench {
namespace {

TEST(Taxonomy, SixteenCategoriesSixPhi) {
    EXPECT_EQ(kAllCategories.size(), 16u);
    const auto phi = std::count_if(kAllCategories.begin(), kAllCategories.end(), [](Category c) { return is_phi(c); });
    EXPECT_EQ(phi, 6);
    std::set<std::string_view> names;
    for (auto c : kAllCategories) names.insert(render_name(c));
    EXPECT_EQ(names.size(), 16u);
}

TEST(Taxonomy, EightAnalyzerTypesOneNonPhi) {
    EXPECT_EQ(kAllAnalyzerTypes.size(), 8u);
    const auto non = std::count_if(kAllAnalyzerTypes.begin(), kAllAnalyzerTypes.end(),
                                   [](AnalyzerType t) { return !is_phi(t); });
    EXPECT_EQ(non, 1);
    EXPECT_EQ(render_name(AnalyzerType::non_phi), "non-phi");
    EXPECT_EQ(render_name(AnalyzerType::phone_nr), "phone_nr");
}

TEST(Taxonomy, IsPhiExamples) {
    EXPECT_TRUE(is_phi(Category::date));
    EXPECT_FALSE(is_phi(Category::marker));
    EXPECT_FALSE(is_phi(Category::age_under_90));
    const std::set<Category> expected = {Category::date,    Category::identifier,   Category::patient_name,
                                         Category::address, Category::phone_number, Category::email};
    for (auto c : kAllCategories) EXPECT_EQ(is_phi(c), expected.count(c) == 1) << render_name(c);
}

TEST(Taxonomy, AnalyzerMapping) {
    EXPECT_EQ(to_analyzer_type(Category::phone_number), AnalyzerType::phone_nr);
    EXPECT_EQ(to_analyzer_type(Category::hospital), AnalyzerType::non_phi);
    EXPECT_EQ(to_analyzer_type(Category::identifier), AnalyzerType::identifier);
    for (auto c : kAllCategories) {
        EXPECT_EQ(is_phi(c), to_analyzer_type(c) != AnalyzerType::non_phi) << render_name(c);
        if (is_phi(c)) EXPECT_NE(to_analyzer_type(c), AnalyzerType::other);
    }
}

TEST(Taxonomy, ParseCategory) {
    EXPECT_EQ(parse_category("Patient Name"), Category::patient_name);
    EXPECT_EQ(parse_category("phone_nr"), Category::phone_number);
    EXPECT_EQ(parse_category("EMAIL"), Category::email);
    EXPECT_EQ(parse_category("imaging-personnel"), Category::imaging_personnel);
    EXPECT_THROW(parse_category("ssn"), UnknownCategory);
    EXPECT_THROW(parse_category(""), UnknownCategory);
    try {
        parse_category("ssn");
    } catch (const UnknownCategory& e) {
        EXPECT_EQ(e.label(), "ssn");
    }
}

TEST(Taxonomy, RenderParseRoundTrip) {
    for (auto c : kAllCategories) EXPECT_EQ(parse_category(render_name(c)), c);
    for (auto t : kAllAnalyzerTypes) EXPECT_EQ(parse_analyzer_type(render_name(t)), t);
    EXPECT_FALSE(parse_analyzer_type("ssn").has_value());
    EXPECT_FALSE(parse_analyzer_type("Date").has_value());
}

TEST(Rng, DeterministicStreams) {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        (void)c.next();
    }
    EXPECT_NE(derive_seed(1, "img_00001"), derive_seed(1, "img_00002"));
    EXPECT_EQ(derive_seed(1, "img_00001"), derive_seed(1, "img_00001"));
    EXPECT_NE(derive_seed(1, "x"), derive_seed(2, "x"));
}

TEST(Rng, UniformIntInclusiveRange) {
    Rng rng(7);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.uniform_int(-2, 3);
        ASSERT_GE(v, -2);
        ASSERT_LE(v, 3);
        seen.insert(v);
    }
    EXPECT_EQ(seen.size(), 6u);
    EXPECT_EQ(rng.uniform_int(5, 5), 5);
}

TEST(Rng, BernoulliBoundaries) {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        EXPECT_FALSE(rng.bernoulli(0.0));
        EXPECT_TRUE(rng.bernoulli(1.0));
    }
}

TEST(Geometry, IntersectionAndIou) {
    const BoundingBox a{0, 0, 10, 10}, b{5, 5, 10, 10}, c{20, 20, 5, 5};
    EXPECT_EQ(intersection_area(a, b), 25);
    EXPECT_DOUBLE_EQ(iou(a, b), 25.0 / 175.0);
    EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
    EXPECT_DOUBLE_EQ(iou(a, c), 0.0);
    // Touching edges do not intersect.
    EXPECT_EQ(intersection_area(a, BoundingBox{10, 0, 5, 5}), 0);
}

TEST(Geometry, CanonicalSortIsReadingOrder) {
    std::vector<BoundingBox> boxes = {{50, 10, 5, 5}, {0, 40, 5, 5}, {10, 10, 5, 5}, {0, 0, 8, 4}};
    canonical_sort(boxes);
    const std::vector<BoundingBox> expected = {{0, 0, 8, 4}, {10, 10, 5, 5}, {50, 10, 5, 5}, {0, 40, 5, 5}};
    EXPECT_EQ(boxes, expected);
}

TEST(Geometry, FitsIn) {
    EXPECT_TRUE((BoundingBox{0, 0, 10, 10}.fits_in(10, 10)));
    EXPECT_FALSE((BoundingBox{1, 0, 10, 10}.fits_in(10, 10)));
    EXPECT_FALSE((BoundingBox{0, 0, 0, 10}.valid()));
    EXPECT_FALSE((BoundingBox{-1, 0, 3, 3}.valid()));
}

}  // namespace
}  // namespace phibench
