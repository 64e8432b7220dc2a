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
#include <filesystem>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "phibench/content.hpp"
#include "phibench/error.hpp"
#include "phibench/image.hpp"
#include "phibench/manifest.hpp"
#include "phibench/parallel.hpp"
#include "phibench/planner.hpp"
#include "phibench/render.hpp"
#include "phibench/rng.hpp"

namespace phibench {

/// Background images available to the generator, in a fixed order.
class BackgroundSet {
public:
    BackgroundSet() = default;

    static BackgroundSet from_directory(const std::filesystem::path& dir) {
        if (!std::filesystem::is_directory(dir)) throw IoError("background directory not found: " + dir.string());
        BackgroundSet set;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            auto ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".tif" || ext == ".tiff") {
                set.files_.push_back(entry.path());
            }
        }
        std::sort(set.files_.begin(), set.files_.end());
        if (set.files_.empty()) throw IoError("no background images in " + dir.string());
        return set;
    }

    bool synthetic() const { return files_.empty(); }
    const std::vector<std::filesystem::path>& files() const { return files_; }

private:
    std::vector<std::filesystem::path> files_;
};

namespace detail {

// Cap height floor when a line has to shrink to fit a small image.
inline constexpr int kMinTextSize = 4;

inline TextStyle draw_style(const GenerationConfig& config, const std::string& text, int image_width, Rng& rng) {
    TextStyle style;
    style.font = rng.pick(config.font_pool);
    style.size = static_cast<int>(rng.uniform_int(config.size_range.min, config.size_range.max));
    style.thickness = style.size >= 16 && rng.bernoulli(0.5) ? 2 : 1;
    // Shrink long lines until they take at most 90% of the width.
    while (style.size > kMinTextSize) {
        const int w = cv::getTextSize(text, style.font, style.scale(), style.thickness, nullptr).width;
        if (w <= image_width * 9 / 10) break;
        --style.size;
        if (style.size < 12) style.thickness = 1;
    }
    return style;
}

}  // namespace detail

/// Renders one planned image. Uses only the image's own RNG stream, so images
/// can be produced in any order or in parallel.
inline std::pair<Image, ManifestEntry> render_planned_image(const GenerationConfig& config, const ImagePlan& plan,
                                                            const BackgroundSet& backgrounds) {
    Rng rng(derive_seed(config.seed, plan.image_id + "/render"));
    Image background;
    if (backgrounds.synthetic()) {
        const int w = static_cast<int>(rng.uniform_int(config.synthetic_min_side, config.synthetic_max_side));
        const int h = static_cast<int>(rng.uniform_int(config.synthetic_min_side, config.synthetic_max_side));
        background = synth_background(rng, w, h, config.max_background_boxes);
    } else {
        background = read_image(backgrounds.files()[rng.index(backgrounds.files().size())]);
        if (background.channels == 4) background = to_gray(background);
    }

    std::vector<ImprintSpec> specs;
    for (Category c : plan.categories) {
        ImprintSpec spec;
        spec.category = c;
        spec.text = generate_content(c, rng, config.accompanying_omission_prob, config.pools);
        spec.style = detail::draw_style(config, spec.rendered_text(), background.width, rng);
        specs.push_back(std::move(spec));
    }

    // Crowded or small images get progressively smaller text.
    for (int round = 0;; ++round) {
        try {
            auto [img, labels] = place_and_render(background, specs, rng, config.placement);
            ManifestEntry entry{plan.image_id, "images/" + plan.image_id + ".png", img.width, img.height,
                                std::move(labels)};
            return {std::move(img), std::move(entry)};
        } catch (const PlacementError&) {
            if (round >= 4) throw;
            for (auto& s : specs) {
                s.style.size = std::max(detail::kMinTextSize, s.style.size * 4 / 5);
                if (s.style.size < 12) s.style.thickness = 1;
            }
        }
    }
}

/// Plans, renders and writes a dataset to out_dir (images/ and manifest.jsonl).
inline DatasetManifest generate_dataset(const GenerationConfig& config, const std::filesystem::path& out_dir,
                                        std::size_t workers = std::max(1u, std::thread::hardware_concurrency())) {
    const auto plans = plan_dataset(config);
    const BackgroundSet backgrounds =
        config.background_dir ? BackgroundSet::from_directory(*config.background_dir) : BackgroundSet{};

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

    DatasetManifest manifest;
    manifest.dataset_id = config.dataset_id;
    manifest.seed = config.seed;
    manifest.root = out_dir;
    manifest.entries.resize(plans.size());
    parallel_for(plans.size(), workers, [&](std::size_t i) {
        auto [img, entry] = render_planned_image(config, plans[i], backgrounds);
        write_png(img, out_dir / entry.path);
        manifest.entries[i] = std::move(entry);
    });
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.image_id < b.image_id; });
    write_manifest(manifest, out_dir / "manifest.jsonl");
    return manifest;
}

}  // namespace phibench
