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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phibench/error.hpp"
#include "phibench/rng.hpp"
#include "phibench/taxonomy.hpp"
#include "phibench/verdict.hpp"

namespace phibench {

struct FewShotExample {
    std::string input;
    Verdict expected;
    std::string rationale;

    friend bool operator==(const FewShotExample&, const FewShotExample&) = default;
};

/// Instructions given to a text analyzer: what counts as PHI, what does not,
/// and worked examples for ambiguous lines.
struct AnalysisPolicy {
    std::string policy_id;
    // Keyed by analyzer label name; must cover the six PHI classes.
    std::map<std::string, std::vector<std::string>> phi_definitions;
    // Keyed by category name.
    std::map<std::string, std::vector<std::string>> non_phi_definitions;
    std::vector<std::string> exclusions;
    std::vector<FewShotExample> few_shot_examples;
    int output_schema_version = 1;

    void validate() const {
        if (policy_id.empty()) throw ConfigError("policy_id is empty");
        for (AnalyzerType t : kPhiClasses) {
            const auto it = phi_definitions.find(std::string(render_name(t)));
            if (it == phi_definitions.end() || it->second.empty()) {
                throw ConfigError("policy '" + policy_id + "' has no definition for " + std::string(render_name(t)));
            }
        }
        for (const auto& [key, lines] : phi_definitions) {
            const auto t = parse_analyzer_type(key);
            if (!t || *t == AnalyzerType::non_phi) throw ConfigError("unknown PHI class in policy: " + key);
        }
    }

    friend bool operator==(const AnalysisPolicy&, const AnalysisPolicy&) = default;
};

inline nlohmann::json policy_to_json(const AnalysisPolicy& p) {
    nlohmann::json j;
    j["policy_id"] = p.policy_id;
    j["phi_definitions"] = p.phi_definitions;
    j["non_phi_definitions"] = p.non_phi_definitions;
    j["exclusions"] = p.exclusions;
    j["few_shot_examples"] = nlohmann::json::array();
    for (const auto& ex : p.few_shot_examples) {
        j["few_shot_examples"].push_back(
            {{"input", ex.input}, {"expected", verdict_to_json(ex.expected)}, {"rationale", ex.rationale}});
    }
    j["output_schema_version"] = p.output_schema_version;
    return j;
}

inline AnalysisPolicy policy_from_json(const nlohmann::json& j) {
    AnalysisPolicy p;
    try {
        p.policy_id = j.at("policy_id").get<std::string>();
        p.phi_definitions = j.at("phi_definitions").get<std::map<std::string, std::vector<std::string>>>();
        if (j.contains("non_phi_definitions")) {
            p.non_phi_definitions = j["non_phi_definitions"].get<std::map<std::string, std::vector<std::string>>>();
        }
        if (j.contains("exclusions")) p.exclusions = j["exclusions"].get<std::vector<std::string>>();
        if (j.contains("few_shot_examples")) {
            for (const auto& ex : j["few_shot_examples"]) {
                p.few_shot_examples.push_back({ex.at("input").get<std::string>(), verdict_from_json(ex.at("expected")),
                                               ex.value("rationale", std::string{})});
            }
        }
        p.output_schema_version = j.value("output_schema_version", 1);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed policy: ") + e.what());
    } catch (const SchemaViolation& e) {
        throw ConfigError(std::string("malformed few-shot example: ") + e.what());
    }
    p.validate();
    return p;
}

/// Canonical serialization: keys sorted, no whitespace.
inline std::string canonical_policy(const AnalysisPolicy& p) { return policy_to_json(p).dump(); }

/// 16 hex digits, reproducible across processes.
inline std::string policy_hash(const AnalysisPolicy& p) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_policy(p))));
    return buf;
}

inline AnalysisPolicy load_policy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read policy file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const auto j = nlohmann::json::parse(ss.str(), nullptr, false);
    if (j.is_discarded()) throw ConfigError("policy file is not valid JSON: " + path.string());
    return policy_from_json(j);
}

inline void save_policy(const AnalysisPolicy& p, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write policy file: " + path.string());
    out << policy_to_json(p).dump(2) << '\n';
}

// Built-in policies. Definitions paraphrase the imprint taxonomy; neither is a
// verbatim production prompt.

inline AnalysisPolicy default_policy() {
    AnalysisPolicy p;
    p.policy_id = "radphi-default";
    p.phi_definitions = {
        {"date",
         {"Any element of a date tied to the patient: birth, admission, discharge, or examination dates.",
          "Ages of 90 or above, and any date element that reveals such an age."}},
        {"identifier",
         {"Any number or code that can identify the patient: patient ID, medical record number, insurance number, "
          "social security number.",
          "A bare sequence of digits or letters and digits may be an identifier even without a label."}},
        {"patient_name", {"The full name or the initials of the patient."}},
        {"address",
         {"A partial or full address of the patient: street, city, state, postal code, or country."}},
        {"phone_nr", {"A personal telephone number."}},
        {"email", {"A personal email address."}},
    };
    p.non_phi_definitions = {
        {"age_under_90", {"An age below 90."}},
        {"gender", {"The gender of the patient or its abbreviation such as M, F, or D."}},
        {"height", {"A height measurement."}},
        {"weight", {"A weight measurement."}},
        {"examination_type", {"The type of scan performed."}},
        {"hospital", {"General information about the hospital or imaging facility."}},
        {"marker", {"Anatomical markers or orientation labels such as R, L, POST, ANT."}},
        {"scanner", {"The scanner model or scanner settings."}},
        {"diagnosis", {"A diagnosis, comment, or indication."}},
        {"imaging_personnel",
         {"Names of staff involved in the scan such as radiologists, technicians, operators, or referring "
          "physicians."}},
    };
    p.exclusions = {};
    p.few_shot_examples = {
        {"Age:", {AnalyzerType::non_phi, "Age:", "A placeholder for age without a value.", "en"},
         "A label alone carries no information about the patient."},
        {"65", {AnalyzerType::non_phi, "65", "A number that may be an age below 90.", "en"},
         "A number that could be an age is not PHI when the age is below 90."},
        {"Indicated by John Moore",
         {AnalyzerType::non_phi, "Indicated by John Moore", "Name of the referring physician.", "en"},
         "Names of imaging personnel are not patient names."},
        {"0000.0001", {AnalyzerType::identifier, "0000.0001", "A bare number sequence that may identify the patient.", "en"},
         "Identifiers may appear without a label."},
    };
    p.output_schema_version = 1;
    return p;
}

/// Default policy with study and image identifiers excluded from PHI.
inline AnalysisPolicy midi_adapted_policy() {
    AnalysisPolicy p = default_policy();
    p.policy_id = "midi-adapted";
    p.exclusions = {
        "Study or image related identifiers, such as accession, series, or instance numbers, must not be "
        "categorized as PHI."};
    p.few_shot_examples.push_back(
        {"Series: 1.2.840.113619",
         {AnalyzerType::non_phi, "Series: 1.2.840.113619", "An image-related identifier, not a patient identifier.", "en"},
         "Study and image identifiers are not PHI."});
    return p;
}

}  // namespace phibench
