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
#include <array>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "phibench/backends.hpp"
#include "phibench/error.hpp"
#include "phibench/image.hpp"
#include "phibench/manifest.hpp"
#include "phibench/parallel.hpp"
#include "phibench/policy.hpp"
#include "phibench/verdict.hpp"

namespace phibench {

/// The four ways of wiring backends into a pipeline.
///   s1: localizer, extractor on boxes, text analyzer
///   s2: extractor with its own detection, text analyzer
///   s3: localizer, extractor on one crop per box, text analyzer
///   s4: multimodal image analyzer
enum class SetupKind { s1, s2, s3, s4 };

inline constexpr std::array<SetupKind, 4> kAllSetups = {SetupKind::s1, SetupKind::s2, SetupKind::s3, SetupKind::s4};

constexpr std::string_view render_name(SetupKind s) noexcept {
    switch (s) {
        case SetupKind::s1: return "s1";
        case SetupKind::s2: return "s2";
        case SetupKind::s3: return "s3";
        case SetupKind::s4: return "s4";
    }
    return "s1";
}

inline SetupKind parse_setup(std::string_view name) {
    std::string key(name);
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    for (auto s : kAllSetups) {
        if (key == render_name(s)) return s;
    }
    throw ConfigError("unknown setup '" + std::string(name) + "' (expected s1, s2, s3 or s4)");
}

/// Whether predicted instances carry boxes comparable to ground truth.
constexpr bool instance_evaluable(SetupKind s) noexcept { return s == SetupKind::s1 || s == SetupKind::s3; }

struct Backends {
    std::shared_ptr<Localizer> localizer;
    std::shared_ptr<Extractor> extractor;
    std::shared_ptr<TextAnalyzer> analyzer;
    std::shared_ptr<ImageAnalyzer> image_analyzer;

    /// Throws MissingRole when a role the setup needs is unset.
    void require_roles(SetupKind setup) const {
        const std::string s(render_name(setup));
        auto need = [&](bool present, const char* role) {
            if (!present) throw MissingRole("setup " + s + " needs a " + role);
        };
        switch (setup) {
            case SetupKind::s1:
            case SetupKind::s3:
                need(localizer != nullptr, "localizer");
                need(extractor != nullptr, "extractor");
                need(analyzer != nullptr, "text analyzer");
                break;
            case SetupKind::s2:
                need(extractor != nullptr, "extractor");
                need(extractor->detects_text(), "extractor that detects text on its own");
                need(analyzer != nullptr, "text analyzer");
                break;
            case SetupKind::s4:
                need(image_analyzer != nullptr, "multimodal image analyzer");
                break;
        }
    }
};

struct DetectedInstance {
    std::optional<BoundingBox> bbox;
    std::string text;
    Verdict verdict;

    friend bool operator==(const DetectedInstance&, const DetectedInstance&) = default;
};

struct ImageResult {
    std::string image_id;
    bool ok = true;
    std::string failure;  // reason, set when !ok
    std::vector<DetectedInstance> instances;
    double latency = 0.0;  // seconds
    std::int64_t prompt_tokens = 0;
    std::int64_t response_tokens = 0;
};

struct RunStats {
    std::size_t image_count = 0;
    std::size_t failed_count = 0;
    double error_rate = 0.0;
    double total_time = 0.0;  // seconds, wall clock
    std::int64_t prompt_tokens = 0;
    std::int64_t response_tokens = 0;
};

struct RunArtifacts {
    int run_index = 0;
    SetupKind setup = SetupKind::s1;
    std::string policy_hash;
    std::vector<ImageResult> results;  // ordered by image_id
    RunStats stats;
};

inline RunStats compute_run_stats(const std::vector<ImageResult>& results, double wall_time) {
    if (results.empty()) throw EmptyRun("no image results to summarize");
    RunStats s;
    s.image_count = results.size();
    for (const auto& r : results) {
        if (!r.ok) ++s.failed_count;
        s.prompt_tokens += r.prompt_tokens;
        s.response_tokens += r.response_tokens;
    }
    s.error_rate = static_cast<double>(s.failed_count) / static_cast<double>(s.image_count);
    s.total_time = wall_time;
    return s;
}

namespace detail {

inline std::vector<Verdict> checked_verdicts(AnalysisResult&& res, std::size_t expected) {
    if (res.verdicts.size() != expected) {
        throw SchemaViolation(SchemaFault::count_mismatch, "analyzer returned " + std::to_string(res.verdicts.size()) +
                                                               " verdicts for " + std::to_string(expected) + " texts");
    }
    return std::move(res.verdicts);
}

inline void analyze_regions(ImageResult& out, TextAnalyzer& analyzer, const RequestContext& ctx,
                            const AnalysisPolicy& policy, std::vector<TextRegion> regions, bool keep_boxes) {
    if (regions.empty()) return;
    std::vector<std::string> texts;
    for (const auto& r : regions) texts.push_back(r.text);
    AnalysisResult res = analyzer.analyze(ctx, policy, texts);
    out.prompt_tokens += res.usage.prompt_tokens;
    out.response_tokens += res.usage.response_tokens;
    auto verdicts = checked_verdicts(std::move(res), texts.size());
    for (std::size_t i = 0; i < regions.size(); ++i) {
        out.instances.push_back({keep_boxes ? regions[i].bbox : std::nullopt, std::move(regions[i].text),
                                 std::move(verdicts[i])});
    }
}

}  // namespace detail

/// Runs one image through a setup. Stage errors never escape: the result is
/// marked failed with the error message and keeps no instances.
inline ImageResult run_image(SetupKind setup, const Backends& backends, const AnalysisPolicy& policy,
                             const Image& image, const RequestContext& ctx) {
    ImageResult out;
    out.image_id = ctx.image_id;
    const auto start = std::chrono::steady_clock::now();
    try {
        switch (setup) {
            case SetupKind::s1: {
                auto boxes = backends.localizer->localize(ctx, image);
                canonical_sort(boxes);
                if (boxes.empty()) break;
                ExtractResult ex = backends.extractor->extract(ctx, image, boxes);
                out.prompt_tokens += ex.usage.prompt_tokens;
                out.response_tokens += ex.usage.response_tokens;
                if (ex.regions.size() != boxes.size()) {
                    throw SchemaViolation(SchemaFault::count_mismatch, "extractor returned a different region count");
                }
                for (std::size_t i = 0; i < boxes.size(); ++i) ex.regions[i].bbox = boxes[i];
                detail::analyze_regions(out, *backends.analyzer, ctx, policy, std::move(ex.regions), true);
                break;
            }
            case SetupKind::s2: {
                ExtractResult ex = backends.extractor->extract(ctx, image, std::nullopt);
                out.prompt_tokens += ex.usage.prompt_tokens;
                out.response_tokens += ex.usage.response_tokens;
                detail::analyze_regions(out, *backends.analyzer, ctx, policy, std::move(ex.regions), false);
                break;
            }
            case SetupKind::s3: {
                auto boxes = backends.localizer->localize(ctx, image);
                canonical_sort(boxes);
                std::vector<TextRegion> regions;
                for (const auto& box : boxes) {
                    // One request per crop; crops are never batched.
                    ExtractResult ex = backends.extractor->extract_crop(ctx, crop(image, box), box);
                    out.prompt_tokens += ex.usage.prompt_tokens;
                    out.response_tokens += ex.usage.response_tokens;
                    TextRegion joined{box, "", std::nullopt};
                    for (const auto& r : ex.regions) {
                        if (r.text.empty()) continue;
                        joined.text += (joined.text.empty() ? "" : " ") + r.text;
                    }
                    regions.push_back(std::move(joined));
                }
                detail::analyze_regions(out, *backends.analyzer, ctx, policy, std::move(regions), true);
                break;
            }
            case SetupKind::s4: {
                AnalysisResult res = backends.image_analyzer->analyze_image(ctx, policy, image);
                out.prompt_tokens += res.usage.prompt_tokens;
                out.response_tokens += res.usage.response_tokens;
                for (auto& v : res.verdicts) {
                    std::string text = v.raw_text;
                    out.instances.push_back({std::nullopt, std::move(text), std::move(v)});
                }
                break;
            }
        }
    } catch (const std::exception& e) {
        out.ok = false;
        out.failure = e.what();
        out.instances.clear();
    }
    out.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

struct RunOptions {
    int runs = 1;
    std::size_t parallelism = 8;
    int first_run_index = 0;
    // Pass ground-truth labels to backends (needed by oracle and truth-echo backends).
    bool share_labels = true;
};

/// Executes `runs` sequential repetitions over the manifest. Within a run,
/// images are processed by a bounded worker pool; results come back ordered
/// by image_id. Image read failures propagate as IoError.
inline std::vector<RunArtifacts> run_dataset(SetupKind setup, const Backends& backends, const AnalysisPolicy& policy,
                                             const DatasetManifest& manifest, const RunOptions& options) {
    if (options.runs < 1) throw ConfigError("runs must be at least 1");
    if (options.parallelism < 1) throw ConfigError("parallelism must be at least 1");
    backends.require_roles(setup);

    std::vector<const ManifestEntry*> entries;
    for (const auto& e : manifest.entries) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry* a, const ManifestEntry* b) { return a->image_id < b->image_id; });

    const std::string hash = policy_hash(policy);
    std::vector<RunArtifacts> out;
    for (int r = 0; r < options.runs; ++r) {
        RunArtifacts run;
        run.run_index = options.first_run_index + r;
        run.setup = setup;
        run.policy_hash = hash;
        run.results.resize(entries.size());
        const auto start = std::chrono::steady_clock::now();
        parallel_for(entries.size(), options.parallelism, [&](std::size_t i) {
            const ManifestEntry& e = *entries[i];
            const Image image = read_image(manifest.image_path(e));
            const RequestContext ctx{e.image_id, run.run_index, options.share_labels ? &e.labels : nullptr};
            run.results[i] = run_image(setup, backends, policy, image, ctx);
        });
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        run.stats = run.results.empty() ? RunStats{} : compute_run_stats(run.results, wall);
        if (run.results.empty()) run.stats.total_time = wall;
        out.push_back(std::move(run));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Results files: a header line with run metadata, then one ImageResult per line.

inline std::string results_file_name(SetupKind setup, int run_index) {
    return "results_" + std::string(render_name(setup)) + "_" + std::to_string(run_index) + ".jsonl";
}

inline nlohmann::ordered_json stats_to_json(const RunStats& s) {
    return {{"image_count", s.image_count},     {"failed_count", s.failed_count},
            {"error_rate", s.error_rate},       {"total_time", s.total_time},
            {"prompt_tokens", s.prompt_tokens}, {"response_tokens", s.response_tokens}};
}

inline nlohmann::ordered_json result_to_json(const ImageResult& r) {
    nlohmann::ordered_json instances = nlohmann::ordered_json::array();
    for (const auto& inst : r.instances) {
        nlohmann::ordered_json j;
        j["bbox"] = inst.bbox ? bbox_to_json(*inst.bbox) : nlohmann::ordered_json(nullptr);
        j["text"] = inst.text;
        j["verdict"] = verdict_to_json(inst.verdict);
        instances.push_back(std::move(j));
    }
    nlohmann::ordered_json j;
    j["image_id"] = r.image_id;
    j["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) j["reason"] = r.failure;
    j["instances"] = std::move(instances);
    j["latency"] = r.latency;
    j["prompt_tokens"] = r.prompt_tokens;
    j["response_tokens"] = r.response_tokens;
    return j;
}

inline void write_results(const RunArtifacts& run, std::ostream& out) {
    nlohmann::ordered_json header;
    header["run_index"] = run.run_index;
    header["setup"] = render_name(run.setup);
    header["policy_hash"] = run.policy_hash;
    header["stats"] = stats_to_json(run.stats);
    out << header.dump() << '\n';
    for (const auto& r : run.results) out << result_to_json(r).dump() << '\n';
}

/// Writes results_<setup>_<run>.jsonl under dir and returns its path.
inline std::filesystem::path write_results(const RunArtifacts& run, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto path = dir / results_file_name(run.setup, run.run_index);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_results(run, out);
    if (!out) throw IoError("write failed for " + path.string());
    return path;
}

inline RunArtifacts read_results(std::istream& in, const std::string& source = "results") {
    RunArtifacts run;
    std::string line;
    std::size_t line_no = 0;
    try {
        if (!std::getline(in, line)) throw IoError(source + ": missing header line");
        ++line_no;
        const auto h = nlohmann::json::parse(line);
        run.run_index = h.at("run_index").get<int>();
        run.setup = parse_setup(h.at("setup").get<std::string>());
        run.policy_hash = h.at("policy_hash").get<std::string>();
        const auto& s = h.at("stats");
        run.stats = {s.at("image_count").get<std::size_t>(),     s.at("failed_count").get<std::size_t>(),
                     s.at("error_rate").get<double>(),           s.at("total_time").get<double>(),
                     s.at("prompt_tokens").get<std::int64_t>(), s.at("response_tokens").get<std::int64_t>()};
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            ImageResult r;
            r.image_id = j.at("image_id").get<std::string>();
            const auto status = j.at("status").get<std::string>();
            if (status != "ok" && status != "failed") throw IoError("bad status '" + status + "'");
            r.ok = status == "ok";
            if (!r.ok) r.failure = j.value("reason", std::string{});
            for (const auto& ij : j.at("instances")) {
                DetectedInstance inst;
                if (!ij.at("bbox").is_null()) inst.bbox = bbox_from_json(ij.at("bbox"));
                inst.text = ij.at("text").get<std::string>();
                inst.verdict = verdict_from_json(ij.at("verdict"));
                r.instances.push_back(std::move(inst));
            }
            r.latency = j.at("latency").get<double>();
            r.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
            r.response_tokens = j.at("response_tokens").get<std::int64_t>();
            run.results.push_back(std::move(r));
        }
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (run.results.size() != run.stats.image_count) {
        throw IoError(source + ": header declares " + std::to_string(run.stats.image_count) + " images, found " +
                      std::to_string(run.results.size()));
    }
    return run;
}

inline RunArtifacts read_results(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_results(in, path.string());
}

/// Equality of two runs ignoring wall time and per-image latency.
inline bool same_outcome(const RunArtifacts& a, const RunArtifacts& b) {
    if (a.setup != b.setup || a.policy_hash != b.policy_hash || a.results.size() != b.results.size()) return false;
    const auto& sa = a.stats;
    const auto& sb = b.stats;
    if (sa.image_count != sb.image_count || sa.failed_count != sb.failed_count ||
        sa.prompt_tokens != sb.prompt_tokens || sa.response_tokens != sb.response_tokens) {
        return false;
    }
    for (std::size_t i = 0; i < a.results.size(); ++i) {
        const auto& x = a.results[i];
        const auto& y = b.results[i];
        if (x.image_id != y.image_id || x.ok != y.ok || x.failure != y.failure || x.instances != y.instances ||
            x.prompt_tokens != y.prompt_tokens || x.response_tokens != y.response_tokens) {
            return false;
        }
    }
    return true;
}

}  // namespace phibench
