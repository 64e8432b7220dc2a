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

#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phibench/error.hpp"
#include "phibench/policy.hpp"
#include "phibench/rng.hpp"
#include "phibench/taxonomy.hpp"

namespace phibench {

struct PromptBundle {
    std::string system_text;
    std::string user_payload;

    std::string stable_hash() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(system_text + '\x1f' + user_payload)));
        return buf;
    }

    friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

namespace detail {

inline std::string label_list() {
    std::string s = "[";
    for (std::size_t i = 0; i < kAllAnalyzerTypes.size(); ++i) {
        s += (i ? ", " : "") + std::string(render_name(kAllAnalyzerTypes[i]));
    }
    return s + "]";
}

inline std::string policy_section(const AnalysisPolicy& policy) {
    std::string s;
    s += "PHI definitions:\n";
    for (const auto& [type, lines] : policy.phi_definitions) {
        for (const auto& line : lines) s += "- " + type + ": " + line + "\n";
    }
    s += "\nNon-PHI definitions:\n";
    for (const auto& [category, lines] : policy.non_phi_definitions) {
        for (const auto& line : lines) s += "- " + category + ": " + line + "\n";
    }
    if (!policy.exclusions.empty()) {
        s += "\nExclusions:\n";
        for (const auto& line : policy.exclusions) s += "- " + line + "\n";
    }
    if (!policy.few_shot_examples.empty()) {
        s += "\nExamples:\n";
        for (const auto& ex : policy.few_shot_examples) {
            s += "Input: " + nlohmann::json(ex.input).dump() + "\n";
            s += "Output: " + verdict_to_json(ex.expected).dump() + "\n";
            if (!ex.rationale.empty()) s += "Why: " + ex.rationale + "\n";
        }
    }
    return s;
}

inline std::string output_contract(int schema_version) {
    return "\nOutput format (schema version " + std::to_string(schema_version) +
           "): a JSON object {\"verdicts\": [...]} with one record per input line, in input order. "
           "Each record has the mandatory fields type, raw_text, reason, language. "
           "type is one of " + label_list() +
           "; use other for PHI outside the listed classes and non-phi when no PHI is present. "
           "raw_text repeats the analyzed text, reason justifies the decision, language is the detected "
           "language of the text.\n";
}

}  // namespace detail

/// Prompt for analyzing the extracted text lines of one image. Pure function
/// of (policy, texts).
inline PromptBundle build_prompt(const AnalysisPolicy& policy, const std::vector<std::string>& texts) {
    if (texts.empty()) throw EmptyInput("no texts to analyze");
    PromptBundle b;
    b.system_text =
        "You detect protected health information (PHI) in text imprinted on medical images.\n"
        "The input is the list of text lines found in one image. Evaluate the aggregated context of all "
        "lines together rather than analyzing each line in isolation.\n\n";
    b.system_text += detail::policy_section(policy);
    b.system_text += detail::output_contract(policy.output_schema_version);

    nlohmann::json items = nlohmann::json::array();
    for (std::size_t i = 0; i < texts.size(); ++i) items.push_back({{"index", i}, {"text", texts[i]}});
    b.user_payload = nlohmann::json{{"texts", items}}.dump();
    return b;
}

/// Prompt for end-to-end analysis of a whole image.
inline PromptBundle build_image_prompt(const AnalysisPolicy& policy) {
    PromptBundle b;
    b.system_text =
        "You detect protected health information (PHI) in text imprinted on medical images.\n"
        "Perform text recognition on the attached image, then analyze every imprinted text line, using the "
        "aggregated context of all lines.\n\n";
    b.system_text += detail::policy_section(policy);
    b.system_text += detail::output_contract(policy.output_schema_version);
    b.user_payload = "{\"image\":\"attached\"}";
    return b;
}

}  // namespace phibench
