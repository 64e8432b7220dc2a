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
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "phibench/error.hpp"
#include "phibench/geometry.hpp"
#include "phibench/manifest.hpp"
#include "phibench/pipeline.hpp"
#include "phibench/taxonomy.hpp"

namespace phibench {

enum class Level { case_level, instance_level };

constexpr std::string_view render_name(Level l) noexcept { return l == Level::case_level ? "case" : "instance"; }

inline Level parse_level(std::string_view s) {
    if (s == "case") return Level::case_level;
    if (s == "instance") return Level::instance_level;
    throw ConfigError("unknown level '" + std::string(s) + "'");
}

/// What is being detected: any PHI (no class) or one of the six PHI classes.
struct Target {
    std::optional<AnalyzerType> cls;

    static Target phi_presence() { return {}; }
    static Target of(AnalyzerType t) { return {t}; }

    std::string name() const { return cls ? std::string(render_name(*cls)) : "phi_presence"; }

    /// A verdict counts toward the target. "other" is PHI but matches no class.
    bool predicts(AnalyzerType t) const { return cls ? t == *cls : t != AnalyzerType::non_phi; }
    bool labels(const LabelRecord& l) const { return cls ? l.analyzer_type == *cls : l.phi; }

    friend bool operator==(const Target&, const Target&) = default;
};

inline Target parse_target(std::string_view name) {
    if (name == "phi_presence") return Target::phi_presence();
    for (auto t : kPhiClasses) {
        if (name == render_name(t)) return Target::of(t);
    }
    throw ConfigError("unknown target '" + std::string(name) + "'");
}

/// phi_presence followed by the six PHI classes.
inline std::vector<Target> all_targets() {
    std::vector<Target> out{Target::phi_presence()};
    for (auto t : kPhiClasses) out.push_back(Target::of(t));
    return out;
}

struct Metrics {
    Level level = Level::case_level;
    Target target;
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 1.0;
    double recall = 1.0;
};

/// Fills precision and recall from the counts. No predictions gives
/// precision 1; no positives gives recall 1.
inline Metrics make_metrics(Level level, Target target, std::size_t tp, std::size_t fp, std::size_t fn) {
    Metrics m{level, target, tp, fp, fn, 1.0, 1.0};
    if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return m;
}

struct MatchResult {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (prediction, ground truth)
    std::vector<std::size_t> unmatched_preds;
    std::vector<std::size_t> unmatched_gts;
};

/// Greedy one-to-one matching in descending IoU; a pair needs IoU >= threshold.
inline MatchResult match_instances(const std::vector<BoundingBox>& preds, const std::vector<BoundingBox>& gts,
                                   double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw ConfigError("iou threshold must lie in (0, 1]");
    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        for (std::size_t j = 0; j < gts.size(); ++j) {
            const double v = iou(preds[i], gts[j]);
            if (v >= iou_threshold) candidates.emplace_back(v, i, j);
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    std::vector<bool> pred_used(preds.size()), gt_used(gts.size());
    MatchResult out;
    for (const auto& [v, i, j] : candidates) {
        if (pred_used[i] || gt_used[j]) continue;
        pred_used[i] = gt_used[j] = true;
        out.pairs.emplace_back(i, j);
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!pred_used[i]) out.unmatched_preds.push_back(i);
    }
    for (std::size_t j = 0; j < gts.size(); ++j) {
        if (!gt_used[j]) out.unmatched_gts.push_back(j);
    }
    return out;
}

namespace detail {

// Pairs each manifest entry with its result; the id sets must agree exactly.
inline std::vector<std::pair<const ManifestEntry*, const ImageResult*>> align(const RunArtifacts& run,
                                                                            const DatasetManifest& manifest) {
    std::unordered_map<std::string, const ImageResult*> by_id;
    for (const auto& r : run.results) {
        if (!by_id.emplace(r.image_id, &r).second) throw IdMismatch("duplicate result for image " + r.image_id);
    }
    if (by_id.size() != manifest.entries.size()) {
        throw IdMismatch("results cover " + std::to_string(by_id.size()) + " images, manifest has " +
                         std::to_string(manifest.entries.size()));
    }
    std::vector<std::pair<const ManifestEntry*, const ImageResult*>> out;
    for (const auto& e : manifest.entries) {
        const auto it = by_id.find(e.image_id);
        if (it == by_id.end()) throw IdMismatch("no result for image " + e.image_id);
        out.emplace_back(&e, it->second);
    }
    return out;
}

}  // namespace detail

/// Image-level detection. Failed images predict nothing, so their positives
/// become false negatives.
inline Metrics case_metrics(const RunArtifacts& run, const DatasetManifest& manifest, const Target& target) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [entry, result] : detail::align(run, manifest)) {
        const bool truth = std::any_of(entry->labels.begin(), entry->labels.end(),
                                       [&](const LabelRecord& l) { return target.labels(l); });
        const bool predicted = result->ok && std::any_of(result->instances.begin(), result->instances.end(),
                                                         [&](const DetectedInstance& d) {
                                                             return target.predicts(d.verdict.type);
                                                         });
        if (truth && predicted) ++tp;
        else if (predicted) ++fp;
        else if (truth) ++fn;
    }
    return make_metrics(Level::case_level, target, tp, fp, fn);
}

/// Instance-level detection: predictions and labels are first filtered by
/// target, then matched by box.
inline Metrics instance_metrics(const RunArtifacts& run, const DatasetManifest& manifest, const Target& target,
                                double iou_threshold = 0.5) {
    if (!instance_evaluable(run.setup)) {
        throw NotInstanceEvaluable("setup " + std::string(render_name(run.setup)) +
                                   " does not produce boxes comparable to ground truth");
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [entry, result] : detail::align(run, manifest)) {
        std::vector<BoundingBox> preds, gts;
        if (result->ok) {
            for (const auto& d : result->instances) {
                if (!target.predicts(d.verdict.type)) continue;
                if (!d.bbox) throw NotInstanceEvaluable("instance without a box in image " + result->image_id);
                preds.push_back(*d.bbox);
            }
        }
        for (const auto& l : entry->labels) {
            if (target.labels(l)) gts.push_back(l.bbox);
        }
        const MatchResult m = match_instances(preds, gts, iou_threshold);
        tp += m.pairs.size();
        fp += m.unmatched_preds.size();
        fn += m.unmatched_gts.size();
    }
    return make_metrics(Level::instance_level, target, tp, fp, fn);
}

struct AggregateMetrics {
    Level level = Level::case_level;
    Target target;
    std::vector<Metrics> runs;
    double mean_precision = 0.0, std_precision = 0.0;
    double mean_recall = 0.0, std_recall = 0.0;
    double mean_fp = 0.0, std_fp = 0.0;
    double mean_fn = 0.0, std_fn = 0.0;
};

/// Arithmetic mean and sample standard deviation of a non-empty sample.
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

inline AggregateMetrics aggregate_runs(const std::vector<Metrics>& per_run) {
    if (per_run.empty()) throw HeterogeneousRuns("no runs to aggregate");
    AggregateMetrics a;
    a.level = per_run.front().level;
    a.target = per_run.front().target;
    std::vector<double> p, r, fp, fn;
    for (const auto& m : per_run) {
        if (m.level != a.level || !(m.target == a.target)) {
            throw HeterogeneousRuns("runs mix " + std::string(render_name(a.level)) + "/" + a.target.name() +
                                    " with " + std::string(render_name(m.level)) + "/" + m.target.name());
        }
        p.push_back(m.precision);
        r.push_back(m.recall);
        fp.push_back(static_cast<double>(m.fp));
        fn.push_back(static_cast<double>(m.fn));
    }
    a.runs = per_run;
    std::tie(a.mean_precision, a.std_precision) = mean_std(p);
    std::tie(a.mean_recall, a.std_recall) = mean_std(r);
    std::tie(a.mean_fp, a.std_fp) = mean_std(fp);
    std::tie(a.mean_fn, a.std_fn) = mean_std(fn);
    return a;
}

}  // namespace phibench
