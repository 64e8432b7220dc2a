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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "phibench/error.hpp"
#include "phibench/taxonomy.hpp"

namespace phibench {

/// The analyzer's judgment of one text line.
struct Verdict {
    AnalyzerType type = AnalyzerType::non_phi;
    std::string raw_text;
    std::string reason;
    std::string language;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline nlohmann::json verdict_to_json(const Verdict& v) {
    return {{"type", std::string(render_name(v.type))},
            {"raw_text", v.raw_text},
            {"reason", v.reason},
            {"language", v.language}};
}

/// Strict validation of one verdict record: all four fields present as
/// strings and type inside the closed label set.
inline Verdict verdict_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaViolation(SchemaFault::not_parsable, "verdict record is not an object");
    for (const char* field : {"type", "raw_text", "reason", "language"}) {
        const auto it = j.find(field);
        if (it == j.end()) throw SchemaViolation(SchemaFault::missing_field, std::string("missing '") + field + "'");
        if (!it->is_string()) {
            throw SchemaViolation(SchemaFault::missing_field, std::string("field '") + field + "' is not a string");
        }
    }
    const auto name = j["type"].get<std::string>();
    const auto type = parse_analyzer_type(name);
    if (!type) throw SchemaViolation(SchemaFault::bad_enum, "type '" + name + "' is not an analyzer label");
    return {*type, j["raw_text"].get<std::string>(), j["reason"].get<std::string>(), j["language"].get<std::string>()};
}

/// Validates a verdict list given either as a bare array or as an object with
/// a "verdicts" array.
inline std::vector<Verdict> parse_verdicts(const nlohmann::json& doc, std::optional<std::size_t> expected_count = {}) {
    const nlohmann::json* list = &doc;
    if (doc.is_object()) {
        const auto it = doc.find("verdicts");
        if (it == doc.end()) throw SchemaViolation(SchemaFault::missing_field, "missing 'verdicts'");
        list = &*it;
    }
    if (!list->is_array()) throw SchemaViolation(SchemaFault::not_parsable, "verdicts is not an array");
    std::vector<Verdict> out;
    out.reserve(list->size());
    for (const auto& record : *list) out.push_back(verdict_from_json(record));
    if (expected_count && out.size() != *expected_count) {
        throw SchemaViolation(SchemaFault::count_mismatch, "expected " + std::to_string(*expected_count) +
                                                               " verdicts, got " + std::to_string(out.size()));
    }
    return out;
}

inline std::vector<Verdict> parse_verdicts(std::string_view raw_response,
                                           std::optional<std::size_t> expected_count = {}) {
    nlohmann::json doc = nlohmann::json::parse(raw_response, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw SchemaViolation(SchemaFault::not_parsable, "response is not valid JSON");
    return parse_verdicts(doc, expected_count);
}

}  // namespace phibench
