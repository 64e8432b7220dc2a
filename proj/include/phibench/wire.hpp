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

// JSON bodies of the backend protocol:
//
//   POST /localize       {image_id, image_png_base64}                 -> {boxes}
//   POST /extract        {image_id, image_png_base64, boxes?, low_text?, crop_origin?}
//                                                                    -> {regions}
//   POST /analyze        {policy_hash, system_prompt, texts, temperature, image_id?, run_index?}
//                                                                    -> {verdicts, prompt_tokens, response_tokens}
//   POST /analyze_image  {policy_hash, system_prompt, image_png_base64, temperature, image_id?, run_index?}
//                                                                    -> same as /analyze
//
// Encoders emit canonical JSON (sorted keys, no whitespace), so a decode /
// encode round trip reproduces the original bytes.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "phibench/backends.hpp"
#include "phibench/error.hpp"
#include "phibench/geometry.hpp"
#include "phibench/verdict.hpp"

namespace phibench::wire {

inline std::string base64_encode(std::string_view in) {
    static constexpr char kTable[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < in.size(); i += 3) {
        const std::uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                                (static_cast<unsigned char>(in[i + 1]) << 8) | static_cast<unsigned char>(in[i + 2]);
        out += kTable[(v >> 18) & 63];
        out += kTable[(v >> 12) & 63];
        out += kTable[(v >> 6) & 63];
        out += kTable[v & 63];
    }
    if (i < in.size()) {
        std::uint32_t v = static_cast<unsigned char>(in[i]) << 16;
        if (i + 1 < in.size()) v |= static_cast<unsigned char>(in[i + 1]) << 8;
        out += kTable[(v >> 18) & 63];
        out += kTable[(v >> 12) & 63];
        out += i + 1 < in.size() ? kTable[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

inline std::string base64_decode(std::string_view in) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (in.size() % 4 != 0) throw IoError("base64 length is not a multiple of 4");
    std::string out;
    out.reserve(in.size() / 4 * 3);
    for (std::size_t i = 0; i < in.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = in[i + k];
            if (c == '=' && i + 4 == in.size() && k >= 2) {
                v[k] = 0;
                ++pad;
            } else {
                v[k] = value(c);
                if (v[k] < 0 || pad) throw IoError("invalid base64 input");
            }
        }
        const std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out += static_cast<char>((n >> 16) & 0xff);
        if (pad < 2) out += static_cast<char>((n >> 8) & 0xff);
        if (pad < 1) out += static_cast<char>(n & 0xff);
    }
    return out;
}

inline std::string png_base64(const Image& img) {
    const auto png = encode_png(img);
    return base64_encode(std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
}

inline Image image_from_base64(std::string_view b64) {
    const std::string raw = base64_decode(b64);
    return decode_png(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

/// Malformed request or response body.
class DecodeError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline nlohmann::json parse_object(std::string_view body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DecodeError("body is not a JSON object");
    return j;
}

inline nlohmann::json boxes_to_json(const std::vector<BoundingBox>& boxes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : boxes) arr.push_back({b.x, b.y, b.w, b.h});
    return arr;
}

inline BoundingBox box_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) throw DecodeError("box must be [x, y, w, h]");
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw DecodeError("box coordinates must be integers");
    }
    BoundingBox b{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
    if (!b.valid()) throw DecodeError("box must have x, y >= 0 and w, h > 0");
    return b;
}

inline std::vector<BoundingBox> boxes_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw DecodeError("boxes must be an array");
    std::vector<BoundingBox> out;
    for (const auto& b : j) out.push_back(box_from_json(b));
    return out;
}

template <class T>
T field(const nlohmann::json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end()) throw DecodeError(std::string("missing field '") + name + "'");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DecodeError(std::string("field '") + name + "' has the wrong type");
    }
}

}  // namespace detail

struct LocalizeRequest {
    std::string image_id;
    std::string image_png_base64;

    std::string encode() const { return nlohmann::json{{"image_id", image_id}, {"image_png_base64", image_png_base64}}.dump(); }
    static LocalizeRequest decode(std::string_view body) {
        const auto j = detail::parse_object(body);
        return {detail::field<std::string>(j, "image_id"), detail::field<std::string>(j, "image_png_base64")};
    }
    friend bool operator==(const LocalizeRequest&, const LocalizeRequest&) = default;
};

struct LocalizeResponse {
    std::vector<BoundingBox> boxes;

    std::string encode() const { return nlohmann::json{{"boxes", detail::boxes_to_json(boxes)}}.dump(); }
    static LocalizeResponse decode(std::string_view body) {
        const auto j = detail::parse_object(body);
        if (!j.contains("boxes")) throw DecodeError("missing field 'boxes'");
        return {detail::boxes_from_json(j["boxes"])};
    }
    friend bool operator==(const LocalizeResponse&, const LocalizeResponse&) = default;
};

struct ExtractRequest {
    std::string image_id;
    std::string image_png_base64;
    std::optional<std::vector<BoundingBox>> boxes;
    std::optional<double> low_text;
    // Set when the image is a crop: the crop's box in the full image.
    std::optional<BoundingBox> crop_origin;

    std::string encode() const {
        nlohmann::json j{{"image_id", image_id}, {"image_png_base64", image_png_base64}};
        if (boxes) j["boxes"] = detail::boxes_to_json(*boxes);
        if (low_text) j["low_text"] = *low_text;
        if (crop_origin) j["crop_origin"] = {crop_origin->x, crop_origin->y, crop_origin->w, crop_origin->h};
        return j.dump();
    }
    static ExtractRequest decode(std::string_view body) {
        const auto j = detail::parse_object(body);
        ExtractRequest r{detail::field<std::string>(j, "image_id"), detail::field<std::string>(j, "image_png_base64"),
                         std::nullopt, std::nullopt, std::nullopt};
        if (j.contains("boxes") && !j["boxes"].is_null()) r.boxes = detail::boxes_from_json(j["boxes"]);
        if (j.contains("low_text") && !j["low_text"].is_null()) r.low_text = detail::field<double>(j, "low_text");
        if (j.contains("crop_origin") && !j["crop_origin"].is_null()) r.crop_origin = detail::box_from_json(j["crop_origin"]);
        return r;
    }
    friend bool operator==(const ExtractRequest&, const ExtractRequest&) = default;
};

struct ExtractResponse {
    std::vector<TextRegion> regions;

    std::string encode() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : regions) {
            nlohmann::json item{{"text", r.text}};
            if (r.bbox) item["box"] = {r.bbox->x, r.bbox->y, r.bbox->w, r.bbox->h};
            if (r.confidence) item["confidence"] = *r.confidence;
            arr.push_back(std::move(item));
        }
        return nlohmann::json{{"regions", arr}}.dump();
    }
    static ExtractResponse decode(std::string_view body) {
        const auto j = detail::parse_object(body);
        if (!j.contains("regions") || !j["regions"].is_array()) throw DecodeError("missing array 'regions'");
        ExtractResponse out;
        for (const auto& item : j["regions"]) {
            if (!item.is_object()) throw DecodeError("region is not an object");
            TextRegion r;
            r.text = detail::field<std::string>(item, "text");
            if (item.contains("box") && !item["box"].is_null()) r.bbox = detail::box_from_json(item["box"]);
            if (item.contains("confidence") && !item["confidence"].is_null()) {
                r.confidence = detail::field<double>(item, "confidence");
            }
            out.regions.push_back(std::move(r));
        }
        return out;
    }
    friend bool operator==(const ExtractResponse&, const ExtractResponse&) = default;
};

struct AnalyzeRequest {
    std::string policy_hash;
    std::string system_prompt;
    std::vector<std::string> texts;
    double temperature = 0.0;
    std::optional<std::string> image_id;
    std::optional<int> run_index;

    std::string encode() const {
        nlohmann::json j{{"policy_hash", policy_hash},
                         {"system_prompt", system_prompt},
                         {"texts", texts},
                         {"temperature", temperature}};
        if (image_id) j["image_id"] = *image_id;
        if (run_index) j["run_index"] = *run_index;
        return j.dump();
    }
    static AnalyzeRequest decode(std::string_view body) {
        const auto j = detail::parse_object(body);
        AnalyzeRequest r{detail::field<std::string>(j, "policy_hash"), detail::field<std::string>(j, "system_prompt"),
                         detail::field<std::vector<std::string>>(j, "texts"), detail::field<double>(j, "temperature"),
                         std::nullopt, std::nullopt};
        if (j.contains("image_id")) r.image_id = detail::field<std::string>(j, "image_id");
        if (j.contains("run_index")) r.run_index = detail::field<int>(j, "run_index");
        return r;
    }
    friend bool operator==(const AnalyzeRequest&, const AnalyzeRequest&) = default;
};

struct AnalyzeImageRequest {
    std::string policy_hash;
    std::string system_prompt;
    std::string image_png_base64;
    double temperature = 0.0;
    std::optional<std::string> image_id;
    std::optional<int> run_index;

    std::string encode() const {
        nlohmann::json j{{"policy_hash", policy_hash},
                         {"system_prompt", system_prompt},
                         {"image_png_base64", image_png_base64},
                         {"temperature", temperature}};
        if (image_id) j["image_id"] = *image_id;
        if (run_index) j["run_index"] = *run_index;
        return j.dump();
    }
    static AnalyzeImageRequest decode(std::string_view body) {
        const auto j = detail::parse_object(body);
        AnalyzeImageRequest r{detail::field<std::string>(j, "policy_hash"),
                              detail::field<std::string>(j, "system_prompt"),
                              detail::field<std::string>(j, "image_png_base64"),
                              detail::field<double>(j, "temperature"), std::nullopt, std::nullopt};
        if (j.contains("image_id")) r.image_id = detail::field<std::string>(j, "image_id");
        if (j.contains("run_index")) r.run_index = detail::field<int>(j, "run_index");
        return r;
    }
    friend bool operator==(const AnalyzeImageRequest&, const AnalyzeImageRequest&) = default;
};

struct AnalyzeResponse {
    std::vector<Verdict> verdicts;
    std::int64_t prompt_tokens = 0;
    std::int64_t response_tokens = 0;

    std::string encode() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : verdicts) arr.push_back(verdict_to_json(v));
        return nlohmann::json{{"verdicts", arr}, {"prompt_tokens", prompt_tokens}, {"response_tokens", response_tokens}}
            .dump();
    }

    /// Strict: verdicts are validated record by record, SchemaViolation on failure.
    static AnalyzeResponse decode(std::string_view body, std::optional<std::size_t> expected_count = {}) {
        auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw SchemaViolation(SchemaFault::not_parsable, "response is not a JSON object");
        }
        AnalyzeResponse r;
        r.verdicts = parse_verdicts(j, expected_count);
        r.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
        r.response_tokens = j.value("response_tokens", std::int64_t{0});
        return r;
    }
    friend bool operator==(const AnalyzeResponse&, const AnalyzeResponse&) = default;
};

inline std::string content_refused_body() { return nlohmann::json{{"error", "content_refused"}}.dump(); }

inline std::string error_body(std::string_view message) { return nlohmann::json{{"error", message}}.dump(); }

}  // namespace phibench::wire
