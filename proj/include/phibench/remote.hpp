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
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "phibench/backends.hpp"
#include "phibench/error.hpp"
#include "phibench/prompt.hpp"
#include "phibench/transport.hpp"
#include "phibench/wire.hpp"

namespace phibench {

struct RetryPolicy {
    int max_retries = 2;
    double backoff_seconds = 0.25;

    static RetryPolicy from(const BackendEndpoint& e) { return {e.max_retries, e.retry_backoff_seconds}; }
};

namespace detail {

inline bool is_content_refusal(const HttpReply& reply) {
    if (reply.status != 422) return false;
    const auto j = nlohmann::json::parse(reply.body, nullptr, false);
    return !j.is_discarded() && j.is_object() && j.value("error", std::string{}) == "content_refused";
}

}  // namespace detail

/// Posts body and decodes the reply, issuing at most 1 + max_retries requests.
/// Retries on no response, HTTP 429, 5xx and undecodable 200 replies. A
/// content refusal (422) is thrown at once; other 4xx replies are not retried.
template <class Decode>
auto call_with_retry(Transport& transport, const std::string& path, const std::string& body, const RetryPolicy& retry,
                     Decode&& decode) -> decltype(decode(std::string{})) {
    std::optional<SchemaViolation> last_schema;
    std::string last_failure = "no attempt made";
    const int attempts = 1 + std::max(0, retry.max_retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0 && retry.backoff_seconds > 0.0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(retry.backoff_seconds * attempt));
        }
        const HttpReply reply = transport.post(path, body);
        if (reply.status == 200) {
            try {
                return decode(reply.body);
            } catch (const SchemaViolation& e) {
                last_schema = e;
            } catch (const wire::DecodeError& e) {
                last_schema = SchemaViolation(SchemaFault::not_parsable, e.what());
            }
            continue;
        }
        if (detail::is_content_refusal(reply)) throw ContentRefused(path + ": request refused for its content");
        last_schema.reset();
        if (reply.status == 0) {
            last_failure = path + ": no response (" + reply.body + ")";
        } else if (reply.status == 429 || reply.status >= 500) {
            last_failure = path + ": HTTP " + std::to_string(reply.status);
        } else {
            throw BackendUnavailable(path + ": request rejected with HTTP " + std::to_string(reply.status) + ": " +
                                     reply.body);
        }
    }
    if (last_schema) throw *last_schema;
    throw BackendUnavailable(last_failure + " after " + std::to_string(attempts) + " attempts");
}

class RemoteLocalizer final : public Localizer {
public:
    RemoteLocalizer(std::shared_ptr<Transport> transport, RetryPolicy retry)
        : transport_(std::move(transport)), retry_(retry) {}

    std::string name() const override { return "remote"; }

    std::vector<BoundingBox> localize(const RequestContext& ctx, const Image& image) override {
        const wire::LocalizeRequest req{ctx.image_id, wire::png_base64(image)};
        auto res = call_with_retry(*transport_, "/localize", req.encode(), retry_,
                                   [](const std::string& b) { return wire::LocalizeResponse::decode(b); });
        std::vector<BoundingBox> boxes;
        for (auto b : res.boxes) {
            // Clip to the image; drop boxes that end up empty.
            const int x1 = std::min(b.right(), image.width), y1 = std::min(b.bottom(), image.height);
            b.w = x1 - b.x;
            b.h = y1 - b.y;
            if (b.valid()) boxes.push_back(b);
        }
        canonical_sort(boxes);
        return boxes;
    }

private:
    std::shared_ptr<Transport> transport_;
    RetryPolicy retry_;
};

class RemoteExtractor final : public Extractor {
public:
    RemoteExtractor(std::shared_ptr<Transport> transport, RetryPolicy retry, std::optional<double> low_text = 0.2)
        : transport_(std::move(transport)), retry_(retry), low_text_(low_text) {}

    std::string name() const override { return "remote"; }

    ExtractResult extract(const RequestContext& ctx, const Image& image,
                          const std::optional<std::vector<BoundingBox>>& regions) override {
        if (regions) detail::check_regions(image, *regions);
        const wire::ExtractRequest req{ctx.image_id, wire::png_base64(image), regions, low_text_, std::nullopt};
        auto res = call_with_retry(*transport_, "/extract", req.encode(), retry_,
                                   [](const std::string& b) { return wire::ExtractResponse::decode(b); });
        if (regions) {
            if (res.regions.size() != regions->size()) {
                throw SchemaViolation(SchemaFault::count_mismatch,
                                      "extractor returned " + std::to_string(res.regions.size()) + " regions for " +
                                          std::to_string(regions->size()) + " boxes");
            }
            for (std::size_t i = 0; i < regions->size(); ++i) res.regions[i].bbox = (*regions)[i];
        }
        return {std::move(res.regions), {}};
    }

    ExtractResult extract_crop(const RequestContext& ctx, const Image& crop, const BoundingBox& origin) override {
        const wire::ExtractRequest req{ctx.image_id, wire::png_base64(crop), std::nullopt, low_text_, origin};
        auto res = call_with_retry(*transport_, "/extract", req.encode(), retry_,
                                   [](const std::string& b) { return wire::ExtractResponse::decode(b); });
        TextRegion joined{origin, "", std::nullopt};
        for (const auto& r : res.regions) {
            if (r.text.empty()) continue;
            joined.text += (joined.text.empty() ? "" : " ") + r.text;
            if (r.confidence) joined.confidence = std::min(joined.confidence.value_or(1.0), *r.confidence);
        }
        if (joined.text.empty()) joined.confidence.reset();
        return {{joined}, {}};
    }

    std::optional<double> low_text() const { return low_text_; }

private:
    std::shared_ptr<Transport> transport_;
    RetryPolicy retry_;
    std::optional<double> low_text_;
};

/// Text and whole-image analysis over the wire. Requests always carry
/// temperature 0.
class RemoteAnalyzer final : public TextAnalyzer, public ImageAnalyzer {
public:
    RemoteAnalyzer(std::shared_ptr<Transport> transport, RetryPolicy retry)
        : transport_(std::move(transport)), retry_(retry) {}

    std::string name() const override { return "remote"; }

    AnalysisResult analyze(const RequestContext& ctx, const AnalysisPolicy& policy,
                           const std::vector<std::string>& texts) override {
        const PromptBundle prompt = build_prompt(policy, texts);
        const wire::AnalyzeRequest req{policy_hash(policy), prompt.system_text, texts, 0.0, ctx.image_id, ctx.run_index};
        const std::size_t expected = texts.size();
        auto res = call_with_retry(*transport_, "/analyze", req.encode(), retry_, [expected](const std::string& b) {
            return wire::AnalyzeResponse::decode(b, expected);
        });
        return {std::move(res.verdicts), {res.prompt_tokens, res.response_tokens}};
    }

    AnalysisResult analyze_image(const RequestContext& ctx, const AnalysisPolicy& policy,
                                 const Image& image) override {
        const PromptBundle prompt = build_image_prompt(policy);
        const wire::AnalyzeImageRequest req{policy_hash(policy), prompt.system_text, wire::png_base64(image), 0.0,
                                            ctx.image_id, ctx.run_index};
        auto res = call_with_retry(*transport_, "/analyze_image", req.encode(), retry_,
                                   [](const std::string& b) { return wire::AnalyzeResponse::decode(b); });
        return {std::move(res.verdicts), {res.prompt_tokens, res.response_tokens}};
    }

private:
    std::shared_ptr<Transport> transport_;
    RetryPolicy retry_;
};

}  // namespace phibench
