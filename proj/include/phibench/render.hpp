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
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "phibench/content.hpp"
#include "phibench/error.hpp"
#include "phibench/geometry.hpp"
#include "phibench/image.hpp"
#include "phibench/planner.hpp"
#include "phibench/rng.hpp"
#include "phibench/taxonomy.hpp"

namespace phibench {

/// Plain grayscale canvas with up to max_boxes rectangles of other shades.
inline Image synth_background(Rng& rng, int width, int height, int max_boxes = 6) {
    if (width < 64 || height < 64) throw ConfigError("background must be at least 64x64");
    const auto base = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    Image img(width, height, 1, base);
    const auto boxes = max_boxes > 0 ? rng.uniform_int(0, max_boxes) : 0;
    cv::Mat canvas = img.view();
    for (std::int64_t b = 0; b < boxes; ++b) {
        // Keep every box at least 32 levels away from the base shade.
        std::int64_t shade = rng.uniform_int(0, 255 - 64);
        if (shade > base - 32) shade += 64;
        shade = std::clamp<std::int64_t>(shade, 0, 255);
        const int w = static_cast<int>(rng.uniform_int(width / 8, width / 2));
        const int h = static_cast<int>(rng.uniform_int(height / 8, height / 2));
        const int x = static_cast<int>(rng.uniform_int(0, width - w));
        const int y = static_cast<int>(rng.uniform_int(0, height - h));
        cv::rectangle(canvas, cv::Rect(x, y, w, h), cv::Scalar(static_cast<double>(shade)), cv::FILLED);
    }
    return img;
}

struct TextStyle {
    int font = 0;       // cv::HersheyFonts value
    int size = 16;      // cap height in pixels
    int thickness = 1;
    // Ink intensity; chosen against the local background when absent.
    std::optional<std::uint8_t> color;

    double scale() const {
        const int base = cv::getTextSize("H", font, 1.0, 1, nullptr).height;
        return static_cast<double>(size) / std::max(1, base);
    }
};

/// A planned imprint: its category, text and appearance.
struct ImprintSpec {
    Category category = Category::date;
    ImprintText text;
    TextStyle style;
    // Preferred top-left corner of the tight box; ignored if it does not fit.
    std::optional<std::pair<int, int>> anchor;

    std::string rendered_text() const { return text.rendered(); }
};

/// Ground-truth annotation of one imprint.
struct LabelRecord {
    BoundingBox bbox;
    Category category = Category::date;
    bool phi = true;
    AnalyzerType analyzer_type = AnalyzerType::date;
    std::string text;

    friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

inline LabelRecord make_label(const BoundingBox& bbox, Category c, std::string text) {
    return {bbox, c, is_phi(c), to_analyzer_type(c), std::move(text)};
}

/// Binary glyph mask of a line of text, cropped to its ink extent.
struct GlyphMask {
    cv::Mat mask;  // CV_8UC1, 255 where ink
    int width() const { return mask.cols; }
    int height() const { return mask.rows; }
};

inline GlyphMask rasterize_text(const std::string& text, const TextStyle& style) {
    int baseline = 0;
    const double scale = style.scale();
    const cv::Size sz = cv::getTextSize(text, style.font, scale, style.thickness, &baseline);
    const int pad = style.thickness + 4;
    cv::Mat canvas = cv::Mat::zeros(sz.height + baseline + 2 * pad, sz.width + 2 * pad, CV_8UC1);
    cv::putText(canvas, text, cv::Point(pad, pad + sz.height), style.font, scale, cv::Scalar(255),
                style.thickness, cv::LINE_8);
    const cv::Rect ink = cv::boundingRect(canvas);
    if (ink.area() == 0) return {};
    return {canvas(ink).clone()};
}

namespace detail {

inline std::uint8_t contrasting_ink(const Image& img, const BoundingBox& box, Rng& rng) {
    const cv::Scalar per_channel = cv::mean(img.view()(cv::Rect(box.x, box.y, box.w, box.h)));
    double mean = 0.0;
    for (int ch = 0; ch < img.channels; ++ch) mean += per_channel[ch] / img.channels;
    return mean < 128.0 ? static_cast<std::uint8_t>(rng.uniform_int(200, 255))
                           : static_cast<std::uint8_t>(rng.uniform_int(0, 55));
}

inline std::size_t ink_changes(const Image& img, const cv::Mat& mask, const BoundingBox& box, std::uint8_t ink) {
    std::size_t changed = 0;
    for (int r = 0; r < box.h; ++r) {
        for (int c = 0; c < box.w; ++c) {
            if (!mask.at<std::uint8_t>(r, c)) continue;
            for (int ch = 0; ch < img.channels; ++ch) {
                if (img.at(box.x + c, box.y + r, ch) != ink) {
                    ++changed;
                    break;
                }
            }
        }
    }
    return changed;
}

}  // namespace detail

/// Rasterizes each imprint at a position where its tight box fits inside the
/// image; with non_overlapping placement the boxes are pairwise disjoint.
/// Returns the rendered image and one label per spec, in spec order.
inline std::pair<Image, std::vector<LabelRecord>> place_and_render(const Image& image,
                                                                   const std::vector<ImprintSpec>& specs, Rng& rng,
                                                                   PlacementPolicy policy, int max_attempts = 500) {
    if (image.channels != 1 && image.channels != 3) throw ConfigError("image must be grayscale or RGB");
    Image out = image;
    std::vector<LabelRecord> labels;
    labels.reserve(specs.size());
    // Clearance between imprints so neighbouring lines do not touch.
    constexpr int kGap = 2;

    for (const auto& spec : specs) {
        const std::string text = spec.rendered_text();
        if (spec.text.main.empty()) throw ConfigError("imprint main text is empty");
        const GlyphMask glyphs = rasterize_text(text, spec.style);
        if (glyphs.mask.empty()) throw PlacementError("text renders without ink: '" + text + "'");
        const int w = glyphs.width(), h = glyphs.height();
        if (w > out.width || h > out.height) {
            throw PlacementError("imprint '" + text + "' is larger than the image");
        }

        auto admissible = [&](const BoundingBox& b) {
            if (!b.fits_in(out.width, out.height)) return false;
            if (policy == PlacementPolicy::unconstrained) return true;
            const BoundingBox grown{b.x - kGap, b.y - kGap, b.w + 2 * kGap, b.h + 2 * kGap};
            return std::none_of(labels.begin(), labels.end(),
                                [&](const LabelRecord& l) { return intersection_area(grown, l.bbox) > 0; });
        };

        std::optional<BoundingBox> slot;
        if (spec.anchor) {
            BoundingBox b{spec.anchor->first, spec.anchor->second, w, h};
            if (admissible(b)) slot = b;
        }
        for (int attempt = 0; !slot && attempt < max_attempts; ++attempt) {
            BoundingBox b{static_cast<int>(rng.uniform_int(0, out.width - w)),
                          static_cast<int>(rng.uniform_int(0, out.height - h)), w, h};
            if (admissible(b)) slot = b;
        }
        if (!slot) {
            throw PlacementError("could not place imprint '" + text + "' after " + std::to_string(max_attempts) +
                                 " attempts");
        }

        std::uint8_t ink = spec.style.color ? *spec.style.color : detail::contrasting_ink(out, *slot, rng);
        if (detail::ink_changes(out, glyphs.mask, *slot, ink) == 0) ink = static_cast<std::uint8_t>(255 - ink);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (!glyphs.mask.at<std::uint8_t>(r, c)) continue;
                for (int ch = 0; ch < out.channels; ++ch) out.at(slot->x + c, slot->y + r, ch) = ink;
            }
        }
        labels.push_back(make_label(*slot, spec.category, text));
    }
    return {std::move(out), std::move(labels)};
}

}  // namespace phibench
