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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phibench/content.hpp"
#include "phibench/error.hpp"
#include "phibench/rng.hpp"
#include "phibench/taxonomy.hpp"

namespace phibench {

enum class PlacementPolicy { non_overlapping, unconstrained };

struct SizeRange {
    int min = 12;
    int max = 22;
};

/// Everything that determines a generated dataset. Font sizes are glyph cap
/// heights in pixels.
struct GenerationConfig {
    std::uint64_t seed = 0;
    std::string dataset_id = "radphi-sim";
    int image_count = 1000;
    double phi_ratio = 0.85;
    int max_imprints = 8;
    double accompanying_omission_prob = 0.2;
    // Among images without PHI, the share that carries no imprint at all.
    double empty_ratio = 0.3;

    // Empty means synthetic backgrounds.
    std::optional<std::filesystem::path> background_dir;
    int synthetic_min_side = 512;
    int synthetic_max_side = 1024;
    int max_background_boxes = 6;

    std::vector<int> font_pool = {0, 1, 2, 3, 4, 5};  // OpenCV Hershey faces
    SizeRange size_range;
    PlacementPolicy placement = PlacementPolicy::non_overlapping;

    // Relative category frequencies; uniform when empty.
    std::map<Category, double> category_weights;
    ContentPools pools = default_pools();

    void validate() const {
        if (image_count < 0) throw ConfigError("image_count must be non-negative");
        if (!(phi_ratio >= 0.0 && phi_ratio <= 1.0)) throw ConfigError("phi_ratio must lie in [0, 1]");
        if (max_imprints < 0) throw ConfigError("max_imprints must be non-negative");
        if (max_imprints == 0 && phi_quota() > 0) {
            throw ConfigError("phi quota is infeasible with max_imprints = 0");
        }
        if (!(accompanying_omission_prob >= 0.0 && accompanying_omission_prob <= 1.0)) {
            throw ConfigError("accompanying_omission_prob must lie in [0, 1]");
        }
        if (!(empty_ratio >= 0.0 && empty_ratio <= 1.0)) throw ConfigError("empty_ratio must lie in [0, 1]");
        if (synthetic_min_side < 64 || synthetic_max_side < synthetic_min_side) {
            throw ConfigError("synthetic background sides must satisfy 64 <= min <= max");
        }
        if (font_pool.empty()) throw ConfigError("font_pool is empty");
        if (size_range.min < 6 || size_range.max < size_range.min) throw ConfigError("invalid size_range");
        bool any_phi_weight = category_weights.empty();
        for (const auto& [c, w] : category_weights) {
            if (w < 0.0) throw ConfigError("category weights must be non-negative");
            if (w > 0.0 && is_phi(c)) any_phi_weight = true;
        }
        if (!any_phi_weight && phi_quota() > 0) throw ConfigError("no PHI category has positive weight");
    }

    /// Number of images that must contain at least one PHI imprint.
    int phi_quota() const { return static_cast<int>(std::llround(phi_ratio * image_count)); }
};

enum class ImageKind { empty, non_phi, phi };

struct ImagePlan {
    std::string image_id;
    ImageKind kind = ImageKind::empty;
    std::vector<Category> categories;  // distinct, in draw order

    friend bool operator==(const ImagePlan&, const ImagePlan&) = default;
};

inline std::string format_image_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%05d", index);
    return buf;
}

namespace detail {

// Weighted draw of k distinct categories from candidates.
inline std::vector<Category> draw_distinct(std::vector<Category> candidates, std::size_t k,
                                           const std::map<Category, double>& weights, Rng& rng) {
    std::vector<Category> out;
    while (out.size() < k && !candidates.empty()) {
        double total = 0.0;
        for (Category c : candidates) total += weights.empty() ? 1.0 : (weights.count(c) ? weights.at(c) : 0.0);
        if (total <= 0.0) break;
        double u = rng.uniform() * total;
        std::size_t pick = candidates.size() - 1;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const double w = weights.empty() ? 1.0 : (weights.count(candidates[i]) ? weights.at(candidates[i]) : 0.0);
            if (u < w) {
                pick = i;
                break;
            }
            u -= w;
        }
        out.push_back(candidates[pick]);
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return out;
}

inline std::vector<Category> select(bool phi) {
    std::vector<Category> out;
    for (Category c : kAllCategories) {
        if (is_phi(c) == phi) out.push_back(c);
    }
    return out;
}

}  // namespace detail

/// Plans one image from its own RNG stream.
inline ImagePlan plan_image(const GenerationConfig& config, const std::string& image_id, bool needs_phi) {
    Rng rng(derive_seed(config.seed, image_id));
    ImagePlan plan;
    plan.image_id = image_id;
    const auto& weights = config.category_weights;

    if (needs_phi) {
        plan.kind = ImageKind::phi;
        const int cap = std::min<int>(config.max_imprints, static_cast<int>(kAllCategories.size()));
        const auto k = static_cast<std::size_t>(rng.uniform_int(1, cap));
        // One PHI category is guaranteed; the rest are drawn from the full pool.
        auto phi = detail::draw_distinct(detail::select(true), 1, weights, rng);
        std::vector<Category> rest;
        for (Category c : kAllCategories) {
            if (c != phi.front()) rest.push_back(c);
        }
        auto others = detail::draw_distinct(rest, k - 1, weights, rng);
        plan.categories = phi;
        plan.categories.insert(plan.categories.end(), others.begin(), others.end());
        rng.shuffle(plan.categories);
        return plan;
    }

    const auto non_phi = detail::select(false);
    const int cap = std::min<int>(config.max_imprints, static_cast<int>(non_phi.size()));
    if (cap == 0 || rng.bernoulli(config.empty_ratio)) {
        plan.kind = ImageKind::empty;
        return plan;
    }
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, cap));
    plan.categories = detail::draw_distinct(non_phi, k, weights, rng);
    plan.kind = plan.categories.empty() ? ImageKind::empty : ImageKind::non_phi;
    return plan;
}

/// Plans every image of a dataset. The set of PHI images is an exact quota
/// drawn from the dataset seed; each image's contents come from its own stream.
inline std::vector<ImagePlan> plan_dataset(const GenerationConfig& config) {
    config.validate();
    const int n = config.image_count;
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng quota_rng(derive_seed(config.seed, "phi-quota"));
    quota_rng.shuffle(order);
    std::vector<bool> phi(static_cast<std::size_t>(n), false);
    for (int i = 0; i < config.phi_quota(); ++i) phi[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

    std::vector<ImagePlan> plans;
    plans.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        plans.push_back(plan_image(config, format_image_id(i), phi[static_cast<std::size_t>(i)]));
    }
    return plans;
}

}  // namespace phibench
