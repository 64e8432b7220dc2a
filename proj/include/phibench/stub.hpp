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
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "phibench/backends.hpp"
#include "phibench/error.hpp"
#include "phibench/manifest.hpp"
#include "phibench/rng.hpp"
#include "phibench/transport.hpp"
#include "phibench/wire.hpp"

namespace phibench {

enum class RefuseMode { exact, bernoulli };
enum class MalformedKind { missing_reason, bad_enum, wrong_count, not_json };

/// Canned behavior and fault injection for the stub backend.
struct StubBehavior {
    std::uint64_t seed = 0;
    // Manifest whose labels the stub echoes; resolved relative to the behavior file.
    std::optional<std::filesystem::path> manifest;
    double refuse_rate = 0.0;
    // exact: round(rate * image_count * runs) (run, image) pairs refused;
    // bernoulli: an independent coin per (run, image).
    RefuseMode refuse_mode = RefuseMode::exact;
    int runs = 1;
    double malformed_rate = 0.0;
    MalformedKind malformed_kind = MalformedKind::missing_reason;
    double unavailable_rate = 0.0;
    // The first N requests answer 503 regardless of endpoint.
    int transient_failures = 0;
    double flip_rate = 0.0;
    int latency_ms = 0;
    // Fixed answers used instead of the manifest when present.
    std::optional<std::vector<BoundingBox>> localize_boxes;
    std::optional<std::vector<Verdict>> image_verdicts;

    void validate() const {
        for (double r : {refuse_rate, malformed_rate, unavailable_rate, flip_rate}) {
            if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("stub rates must lie in [0, 1]");
        }
        if (runs < 1) throw ConfigError("stub runs must be at least 1");
        if (transient_failures < 0 || latency_ms < 0) throw ConfigError("stub counts must be non-negative");
    }
};

namespace detail {

template <class E>
E enum_field(const nlohmann::json& j, const char* key, E fallback, std::initializer_list<std::pair<const char*, E>> names) {
    if (!j.contains(key)) return fallback;
    const auto v = j.at(key).get<std::string>();
    for (const auto& [n, e] : names) {
        if (v == n) return e;
    }
    throw ConfigError(std::string("behavior field '") + key + "' has unknown value '" + v + "'");
}

}  // namespace detail

inline StubBehavior behavior_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
    StubBehavior b;
    try {
        if (!j.is_object()) throw ConfigError("behavior must be a JSON object");
        b.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("manifest")) {
            std::filesystem::path p = j.at("manifest").get<std::string>();
            b.manifest = p.is_absolute() || base.empty() ? p : base / p;
        }
        b.refuse_rate = j.value("refuse_rate", 0.0);
        b.refuse_mode = detail::enum_field(j, "refuse_mode", RefuseMode::exact,
                                           {{"exact", RefuseMode::exact}, {"bernoulli", RefuseMode::bernoulli}});
        b.runs = j.value("runs", 1);
        b.malformed_rate = j.value("malformed_rate", 0.0);
        b.malformed_kind = detail::enum_field(j, "malformed_kind", MalformedKind::missing_reason,
                                              {{"missing_reason", MalformedKind::missing_reason},
                                               {"bad_enum", MalformedKind::bad_enum},
                                               {"wrong_count", MalformedKind::wrong_count},
                                               {"not_json", MalformedKind::not_json}});
        b.unavailable_rate = j.value("unavailable_rate", 0.0);
        b.transient_failures = j.value("transient_failures", 0);
        b.flip_rate = j.value("flip_rate", 0.0);
        b.latency_ms = j.value("latency_ms", 0);
        if (j.contains("localize_boxes")) {
            std::vector<BoundingBox> boxes;
            for (const auto& x : j.at("localize_boxes")) boxes.push_back(bbox_from_json(x));
            b.localize_boxes = std::move(boxes);
        }
        if (j.contains("image_verdicts")) {
            b.image_verdicts = parse_verdicts(j.at("image_verdicts"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid behavior: ") + e.what());
    }
    b.validate();
    return b;
}

inline StubBehavior load_behavior(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open behavior file " + path.string());
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("behavior file " + path.string() + " is not valid JSON");
    return behavior_from_json(j, path.parent_path());
}

/// Request counts per endpoint, for assertions on retry and batching behavior.
struct StubCounters {
    std::atomic<std::int64_t> localize{0}, extract{0}, analyze{0}, analyze_image{0}, rejected{0};
};

/// Serves the wire protocol from a manifest: boxes and texts come from the
/// labels, verdicts from their analyzer types. Faults are deterministic in
/// (seed, image id).
class StubEngine {
public:
    explicit StubEngine(StubBehavior behavior, std::optional<DatasetManifest> manifest = std::nullopt)
        : behavior_(std::move(behavior)), manifest_(std::move(manifest)) {
        behavior_.validate();
        if (!manifest_ && behavior_.manifest) manifest_ = read_manifest(*behavior_.manifest);
        if (manifest_ && behavior_.refuse_mode == RefuseMode::exact && behavior_.refuse_rate > 0.0) {
            std::vector<std::string> ids;
            for (int r = 0; r < behavior_.runs; ++r) {
                for (const auto& e : manifest_->entries) ids.push_back(refusal_key(e.image_id, r));
            }
            std::sort(ids.begin(), ids.end());
            Rng rng(derive_seed(behavior_.seed, "refuse"));
            rng.shuffle(ids);
            const auto n = static_cast<std::size_t>(std::llround(behavior_.refuse_rate * static_cast<double>(ids.size())));
            refused_.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
        }
    }

    const StubBehavior& behavior() const { return behavior_; }
    const StubCounters& counters() const { return counters_; }

    HttpReply handle(const std::string& path, const std::string& body) {
        if (behavior_.latency_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(behavior_.latency_ms));
        if (served_.fetch_add(1) < behavior_.transient_failures) {
            counters_.rejected++;
            return {503, wire::error_body("transient failure")};
        }
        try {
            if (path == "/localize") return localize(body);
            if (path == "/extract") return extract(body);
            if (path == "/analyze") return analyze(body);
            if (path == "/analyze_image") return analyze_image(body);
            return {404, wire::error_body("unknown endpoint " + path)};
        } catch (const wire::DecodeError& e) {
            counters_.rejected++;
            return {400, wire::error_body(e.what())};
        }
    }

    /// True when the stub refuses analysis requests for this image in this run.
    bool refuses(const std::string& image_id, int run_index = 0) const {
        if (behavior_.refuse_rate <= 0.0) return false;
        const std::string key = refusal_key(image_id, run_index % behavior_.runs);
        if (manifest_ && behavior_.refuse_mode == RefuseMode::exact) return refused_.count(key) > 0;
        return coin(key, "refuse", behavior_.refuse_rate);
    }

private:
    static std::string refusal_key(const std::string& image_id, int run) {
        return image_id + "#" + std::to_string(run);
    }

    bool coin(const std::string& image_id, const char* what, double rate) const {
        if (rate <= 0.0) return false;
        Rng rng(derive_seed(derive_seed(behavior_.seed, what), image_id));
        return rng.bernoulli(rate);
    }

    const std::vector<LabelRecord>* labels_of(const std::string& image_id) const {
        if (!manifest_) return nullptr;
        const auto* e = manifest_->find(image_id);
        return e ? &e->labels : nullptr;
    }

    std::optional<HttpReply> fault(const std::string& image_id) const {
        if (coin(image_id, "unavailable", behavior_.unavailable_rate)) return HttpReply{503, wire::error_body("unavailable")};
        return std::nullopt;
    }

    HttpReply localize(const std::string& body) {
        counters_.localize++;
        const auto req = wire::LocalizeRequest::decode(body);
        if (auto f = fault(req.image_id)) return *f;
        wire::LocalizeResponse res;
        if (behavior_.localize_boxes) {
            res.boxes = *behavior_.localize_boxes;
        } else if (const auto* labels = labels_of(req.image_id)) {
            for (const auto& l : *labels) res.boxes.push_back(l.bbox);
        }
        canonical_sort(res.boxes);
        return {200, res.encode()};
    }

    HttpReply extract(const std::string& body) {
        counters_.extract++;
        const auto req = wire::ExtractRequest::decode(body);
        if (auto f = fault(req.image_id)) return *f;
        const auto* labels = labels_of(req.image_id);
        const std::vector<LabelRecord> none;
        const auto& ls = labels ? *labels : none;
        wire::ExtractResponse res;
        auto read = [&](const BoundingBox& box, bool echo_box) {
            const LabelRecord* l = detail::best_label(ls, box);
            TextRegion r{std::nullopt, l ? l->text : "", std::nullopt};
            if (echo_box) r.bbox = box;
            if (!r.text.empty()) r.confidence = 1.0;
            res.regions.push_back(std::move(r));
        };
        if (req.crop_origin) {
            read(*req.crop_origin, false);
        } else if (req.boxes) {
            for (const auto& b : *req.boxes) read(b, true);
        } else {
            std::vector<BoundingBox> boxes;
            for (const auto& l : ls) boxes.push_back(l.bbox);
            canonical_sort(boxes);
            for (const auto& b : boxes) read(b, true);
        }
        return {200, res.encode()};
    }

    HttpReply respond(const std::string& image_id, int run_index, std::vector<Verdict> verdicts,
                      std::size_t prompt_chars) {
        if (coin(image_id, "malformed", behavior_.malformed_rate)) return malformed(std::move(verdicts));
        for (std::size_t i = 0; i < verdicts.size(); ++i) {
            verdicts[i] = maybe_flip(std::move(verdicts[i]), behavior_.flip_rate, behavior_.seed, run_index, image_id, i);
        }
        wire::AnalyzeResponse res{std::move(verdicts), 0, 0};
        const std::string encoded = res.encode();
        res.prompt_tokens = static_cast<std::int64_t>((prompt_chars + 3) / 4);
        res.response_tokens = static_cast<std::int64_t>((encoded.size() + 3) / 4);
        return {200, res.encode()};
    }

    HttpReply malformed(std::vector<Verdict> verdicts) const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : verdicts) arr.push_back(verdict_to_json(v));
        switch (behavior_.malformed_kind) {
            case MalformedKind::missing_reason:
                if (arr.empty()) arr.push_back(verdict_to_json({AnalyzerType::non_phi, "", "", "en"}));
                for (auto& v : arr) v.erase("reason");
                break;
            case MalformedKind::bad_enum:
                if (arr.empty()) arr.push_back(verdict_to_json({AnalyzerType::non_phi, "", "", "en"}));
                for (auto& v : arr) v["type"] = "ssn";
                break;
            case MalformedKind::wrong_count:
                arr.push_back(verdict_to_json({AnalyzerType::non_phi, "", "extra", "en"}));
                break;
            case MalformedKind::not_json:
                return {200, "verdicts: none"};
        }
        return {200, nlohmann::json{{"verdicts", arr}, {"prompt_tokens", 0}, {"response_tokens", 0}}.dump()};
    }

    HttpReply analyze(const std::string& body) {
        counters_.analyze++;
        const auto req = wire::AnalyzeRequest::decode(body);
        const std::string id = req.image_id.value_or("");
        if (refuses(id, std::max(0, req.run_index.value_or(0)))) return {422, wire::content_refused_body()};
        if (auto f = fault(id)) return *f;
        std::map<std::string, AnalyzerType> truth;
        if (const auto* labels = labels_of(id)) {
            for (const auto& l : *labels) truth.emplace(l.text, l.analyzer_type);
        }
        std::vector<Verdict> verdicts;
        std::size_t chars = req.system_prompt.size();
        for (const auto& t : req.texts) {
            chars += t.size();
            const auto it = truth.find(t);
            verdicts.push_back({it == truth.end() ? AnalyzerType::non_phi : it->second, t, "ground truth", "en"});
        }
        return respond(id, req.run_index.value_or(0), std::move(verdicts), chars);
    }

    HttpReply analyze_image(const std::string& body) {
        counters_.analyze_image++;
        const auto req = wire::AnalyzeImageRequest::decode(body);
        const std::string id = req.image_id.value_or("");
        if (refuses(id, std::max(0, req.run_index.value_or(0)))) return {422, wire::content_refused_body()};
        if (auto f = fault(id)) return *f;
        std::vector<Verdict> verdicts;
        if (behavior_.image_verdicts) {
            verdicts = *behavior_.image_verdicts;
        } else if (const auto* labels = labels_of(id)) {
            std::vector<LabelRecord> sorted = *labels;
            std::stable_sort(sorted.begin(), sorted.end(), [](const LabelRecord& a, const LabelRecord& b) {
                return reading_order_less(a.bbox, b.bbox);
            });
            for (const auto& l : sorted) verdicts.push_back({l.analyzer_type, l.text, "ground truth", "en"});
        }
        return respond(id, req.run_index.value_or(0), std::move(verdicts),
                       req.system_prompt.size() + req.image_png_base64.size());
    }

    StubBehavior behavior_;
    std::optional<DatasetManifest> manifest_;
    std::unordered_set<std::string> refused_;
    StubCounters counters_;
    std::atomic<std::int64_t> served_{0};
};

/// HTTP front end for a StubEngine.
class StubServer {
public:
    explicit StubServer(StubEngine& engine) : engine_(engine) {
        // The library default also sets SO_REUSEPORT, which would let two
        // servers share a port silently.
        server_.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
        });
        for (const char* path : {"/localize", "/extract", "/analyze", "/analyze_image"}) {
            server_.Post(path, [this, path](const httplib::Request& req, httplib::Response& res) {
                const HttpReply reply = engine_.handle(path, req.body);
                res.status = reply.status;
                res.set_content(reply.body, "application/json");
            });
        }
    }

    ~StubServer() { stop(); }

    /// Binds and serves on a background thread; port 0 picks a free port.
    /// Returns the bound port. Throws BindError on failure.
    int start(const std::string& host, int port) {
        bind(host, port);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    /// Binds without serving yet; port 0 picks a free port. Returns the port.
    int bind(const std::string& host, int port) {
        port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (port_ <= 0) throw BindError("cannot bind " + host + ":" + std::to_string(port));
        return port_;
    }

    /// Serves on the calling thread until stopped. Call bind() first.
    void listen() { server_.listen_after_bind(); }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    int port() const { return port_; }

private:
    StubEngine& engine_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace phibench
