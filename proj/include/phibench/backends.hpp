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

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "phibench/error.hpp"
#include "phibench/geometry.hpp"
#include "phibench/image.hpp"
#include "phibench/manifest.hpp"
#include "phibench/noise.hpp"
#include "phibench/policy.hpp"
#include "phibench/render.hpp"
#include "phibench/rng.hpp"
#include "phibench/rule_analyzer.hpp"
#include "phibench/verdict.hpp"

namespace phibench {

/// One line of extracted text, optionally with the box it came from.
struct TextRegion {
    std::optional<BoundingBox> bbox;
    std::string text;
    std::optional<double> confidence;

    friend bool operator==(const TextRegion&, const TextRegion&) = default;
};

/// Token usage reported by a backend. In-process backends report zero.
struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t response_tokens = 0;

    Usage& operator+=(const Usage& o) {
        prompt_tokens += o.prompt_tokens;
        response_tokens += o.response_tokens;
        return *this;
    }
};

/// Per-request information shared by every backend call for one image.
struct RequestContext {
    std::string image_id;
    int run_index = 0;
    // Ground truth, present only when the caller runs oracle backends.
    const std::vector<LabelRecord>* labels = nullptr;
};

struct ExtractResult {
    std::vector<TextRegion> regions;
    Usage usage;
};

struct AnalysisResult {
    std::vector<Verdict> verdicts;
    Usage usage;
};

class Localizer {
public:
    virtual ~Localizer() = default;
    virtual std::string name() const = 0;
    /// Boxes around single text lines, in reading order.
    virtual std::vector<BoundingBox> localize(const RequestContext& ctx, const Image& image) = 0;
};

class Extractor {
public:
    virtual ~Extractor() = default;
    virtual std::string name() const = 0;

    /// With regions: one TextRegion per box, in order, box echoed. Without:
    /// the extractor detects text itself and returns its native regions.
    virtual ExtractResult extract(const RequestContext& ctx, const Image& image,
                                  const std::optional<std::vector<BoundingBox>>& regions) = 0;

    /// Reads the text of a single crop. origin is the crop's box in the full image.
    virtual ExtractResult extract_crop(const RequestContext& ctx, const Image& crop, const BoundingBox& origin) = 0;

    virtual bool detects_text() const { return true; }
};

class TextAnalyzer {
public:
    virtual ~TextAnalyzer() = default;
    virtual std::string name() const = 0;
    /// Exactly one verdict per input text, in input order.
    virtual AnalysisResult analyze(const RequestContext& ctx, const AnalysisPolicy& policy,
                                   const std::vector<std::string>& texts) = 0;
};

/// Multimodal analyzer that reads and classifies a whole image at once.
class ImageAnalyzer {
public:
    virtual ~ImageAnalyzer() = default;
    virtual std::string name() const = 0;
    virtual AnalysisResult analyze_image(const RequestContext& ctx, const AnalysisPolicy& policy,
                                         const Image& image) = 0;
};

namespace detail {

inline const std::vector<LabelRecord>& require_labels(const RequestContext& ctx, const char* who) {
    if (!ctx.labels) throw Error(std::string(who) + " needs ground-truth labels for image " + ctx.image_id);
    return *ctx.labels;
}

inline void check_regions(const Image& image, const std::vector<BoundingBox>& regions) {
    for (const auto& b : regions) {
        if (!b.fits_in(image.width, image.height)) {
            throw RegionOutOfBounds("region [" + std::to_string(b.x) + "," + std::to_string(b.y) + "," +
                                    std::to_string(b.w) + "," + std::to_string(b.h) + "] outside image");
        }
    }
}

// Label whose box overlaps `box` the most; null if none overlaps.
inline const LabelRecord* best_label(const std::vector<LabelRecord>& labels, const BoundingBox& box) {
    const LabelRecord* best = nullptr;
    double best_iou = 0.0;
    for (const auto& l : labels) {
        const double v = iou(l.bbox, box);
        if (v > best_iou) {
            best_iou = v;
            best = &l;
        }
    }
    return best;
}

}  // namespace detail

/// Replays ground-truth boxes.
class OracleLocalizer final : public Localizer {
public:
    std::string name() const override { return "oracle"; }
    std::vector<BoundingBox> localize(const RequestContext& ctx, const Image&) override {
        std::vector<BoundingBox> boxes;
        for (const auto& l : detail::require_labels(ctx, "oracle localizer")) boxes.push_back(l.bbox);
        canonical_sort(boxes);
        return boxes;
    }
};

/// Replays ground-truth texts, optionally corrupted with OCR-style noise.
/// Noise for a region depends only on (seed, image id, region index).
class OracleExtractor final : public Extractor {
public:
    explicit OracleExtractor(double char_error_rate = 0.0, std::uint64_t noise_seed = 0)
        : rate_(char_error_rate), seed_(noise_seed) {
        if (!(rate_ >= 0.0 && rate_ <= 1.0)) throw ConfigError("char_error_rate must lie in [0, 1]");
    }

    std::string name() const override { return "oracle"; }

    ExtractResult extract(const RequestContext& ctx, const Image& image,
                          const std::optional<std::vector<BoundingBox>>& regions) override {
        const auto& labels = detail::require_labels(ctx, "oracle extractor");
        ExtractResult out;
        if (regions) {
            detail::check_regions(image, *regions);
            for (std::size_t i = 0; i < regions->size(); ++i) {
                out.regions.push_back(read((*regions)[i], labels, ctx.image_id, i));
            }
            return out;
        }
        std::vector<BoundingBox> boxes;
        for (const auto& l : labels) boxes.push_back(l.bbox);
        canonical_sort(boxes);
        for (std::size_t i = 0; i < boxes.size(); ++i) out.regions.push_back(read(boxes[i], labels, ctx.image_id, i));
        return out;
    }

    ExtractResult extract_crop(const RequestContext& ctx, const Image&, const BoundingBox& origin) override {
        const auto& labels = detail::require_labels(ctx, "oracle extractor");
        // Crops are keyed by their origin so noise matches region-driven reads.
        std::vector<BoundingBox> boxes;
        for (const auto& l : labels) boxes.push_back(l.bbox);
        canonical_sort(boxes);
        std::size_t index = boxes.size();
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            if (boxes[i] == origin) index = i;
        }
        TextRegion r = read(origin, labels, ctx.image_id, index);
        return {{r}, {}};
    }

private:
    TextRegion read(const BoundingBox& box, const std::vector<LabelRecord>& labels, const std::string& image_id,
                    std::size_t index) const {
        const LabelRecord* l = detail::best_label(labels, box);
        if (!l) return {box, "", std::nullopt};
        std::string text = l->text;
        if (rate_ > 0.0) {
            Rng rng(derive_seed(seed_, image_id + "#" + std::to_string(index)));
            text = inject_ocr_noise(text, rate_, rng);
        }
        if (text.empty()) return {box, "", std::nullopt};
        return {box, std::move(text), 1.0};
    }

    double rate_;
    std::uint64_t seed_;
};

/// The regex baseline as a text analyzer.
class RuleAnalyzer final : public TextAnalyzer {
public:
    std::string name() const override { return "rule"; }
    AnalysisResult analyze(const RequestContext&, const AnalysisPolicy& policy,
                           const std::vector<std::string>& texts) override {
        if (texts.empty()) throw EmptyInput("no texts to analyze");
        AnalysisResult out;
        for (const auto& t : texts) out.verdicts.push_back(rule_analyze(policy, t));
        return out;
    }
};

/// Answers with the ground-truth label of each text, looked up by image id
/// and exact text. Unknown texts are non-phi. Isolates pipeline plumbing
/// from model quality.
class TruthEchoAnalyzer : public TextAnalyzer, public ImageAnalyzer {
public:
    explicit TruthEchoAnalyzer(const DatasetManifest& manifest) {
        for (const auto& e : manifest.entries) {
            auto& per_image = by_image_[e.image_id];
            for (const auto& l : e.labels) {
                per_image.texts.emplace(l.text, l.analyzer_type);
                per_image.labels.push_back(l);
            }
        }
    }

    std::string name() const override { return "truth-echo"; }

    AnalysisResult analyze(const RequestContext& ctx, const AnalysisPolicy&,
                           const std::vector<std::string>& texts) override {
        if (texts.empty()) throw EmptyInput("no texts to analyze");
        AnalysisResult out;
        const auto it = by_image_.find(ctx.image_id);
        for (const auto& t : texts) {
            AnalyzerType type = AnalyzerType::non_phi;
            if (it != by_image_.end()) {
                const auto hit = it->second.texts.find(t);
                if (hit != it->second.texts.end()) type = hit->second;
            }
            out.verdicts.push_back({type, t, "ground truth", "en"});
        }
        return out;
    }

    AnalysisResult analyze_image(const RequestContext& ctx, const AnalysisPolicy&, const Image&) override {
        AnalysisResult out;
        const auto it = by_image_.find(ctx.image_id);
        if (it == by_image_.end()) return out;
        std::vector<LabelRecord> labels = it->second.labels;
        std::stable_sort(labels.begin(), labels.end(), [](const LabelRecord& a, const LabelRecord& b) {
            return reading_order_less(a.bbox, b.bbox);
        });
        for (const auto& l : labels) out.verdicts.push_back({l.analyzer_type, l.text, "ground truth", "en"});
        return out;
    }

private:
    struct ImageTruth {
        std::unordered_map<std::string, AnalyzerType> texts;
        std::vector<LabelRecord> labels;
    };
    std::unordered_map<std::string, ImageTruth> by_image_;
};

/// Flips a verdict from PHI to non-phi (and non-phi to other) with a fixed
/// probability. Flips depend on (seed, run index, image id, line index), so a
/// run is reproducible while different runs differ.
inline Verdict maybe_flip(Verdict v, double flip_rate, std::uint64_t seed, int run_index, const std::string& image_id,
                          std::size_t line) {
    if (flip_rate <= 0.0) return v;
    Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(run_index)),
                        image_id + "#" + std::to_string(line)));
    if (!rng.bernoulli(flip_rate)) return v;
    v.type = is_phi(v.type) ? AnalyzerType::non_phi : AnalyzerType::other;
    v.reason = "flipped";
    return v;
}

class FlippingAnalyzer final : public TextAnalyzer {
public:
    FlippingAnalyzer(std::shared_ptr<TextAnalyzer> inner, double flip_rate, std::uint64_t seed)
        : inner_(std::move(inner)), rate_(flip_rate), seed_(seed) {
        if (!(rate_ >= 0.0 && rate_ <= 1.0)) throw ConfigError("flip rate must lie in [0, 1]");
    }

    std::string name() const override { return inner_->name() + "+flip"; }

    AnalysisResult analyze(const RequestContext& ctx, const AnalysisPolicy& policy,
                           const std::vector<std::string>& texts) override {
        AnalysisResult out = inner_->analyze(ctx, policy, texts);
        for (std::size_t i = 0; i < out.verdicts.size(); ++i) {
            out.verdicts[i] = maybe_flip(std::move(out.verdicts[i]), rate_, seed_, ctx.run_index, ctx.image_id, i);
        }
        return out;
    }

private:
    std::shared_ptr<TextAnalyzer> inner_;
    double rate_;
    std::uint64_t seed_;
};

}  // namespace phibench
