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
#include <cctype>
#include <regex>
#include <string>
#include <vector>

#include "phibench/policy.hpp"
#include "phibench/taxonomy.hpp"
#include "phibench/verdict.hpp"

namespace phibench {

namespace detail {

struct Rule {
    const char* name;
    AnalyzerType type;
    std::regex pattern;
    // Extra condition on the match, e.g. a minimum digit count.
    bool (*accept)(const std::smatch&) = nullptr;
};

inline bool at_least_six_digits(const std::smatch& m) {
    const auto s = m.str();
    return std::count_if(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }) >= 6;
}

// Precedence is the vector order: email, phone, date, address, name, identifier.
inline const std::vector<Rule>& baseline_rules() {
    static const std::vector<Rule> rules = [] {
        const auto E = std::regex::ECMAScript;
        const auto I = std::regex::ECMAScript | std::regex::icase;
        const std::string month = "(jan|feb|mar|apr|may|jun|jul|aug|sep|sept|oct|nov|dec)[a-z]*\\.?";
        std::vector<Rule> r;
        r.push_back({"email.address", AnalyzerType::email,
                     std::regex(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})", E)});
        r.push_back({"phone.grouped", AnalyzerType::phone_nr,
                     std::regex(R"((\+\d{1,3}[\s.\-]?)?(\(\d{3}\)|\b\d{3})[\s.\-]?\d{3}[\s.\-]\d{4}\b)", E)});
        r.push_back({"date.numeric", AnalyzerType::date,
                     std::regex(R"(\b\d{1,2}[\-/.]\d{1,2}[\-/.](\d{4}|\d{2})\b)", E)});
        r.push_back({"date.iso", AnalyzerType::date, std::regex(R"(\b\d{4}[\-/.]\d{1,2}[\-/.]\d{1,2}\b)", E)});
        r.push_back({"date.month_name", AnalyzerType::date,
                     std::regex("\\b\\d{1,2}\\s+" + month + "\\s+\\d{4}\\b", I)});
        r.push_back({"date.age_90_plus", AnalyzerType::date,
                     std::regex(R"((\bage\b\W*(9\d|1[0-4]\d)\b)|(\b(9\d|1[0-4]\d)\s*(years|yrs|y)\b))", I)});
        r.push_back({"date.signal_word", AnalyzerType::date,
                     std::regex(R"(\b(dob|date of birth|birth\s*date|admission|discharge)\b.*\d)", I)});
        r.push_back({"address.street", AnalyzerType::address,
                     std::regex(R"(\b\d{1,5}\s+([A-Z][a-z]+\s+)+(St|Street|Ave|Avenue|Rd|Road|Blvd|Boulevard|Lane|Ln|Drive|Dr|Ct|Court|Way|Pl|Place)\b)",
                                E)});
        r.push_back({"address.state_zip", AnalyzerType::address, std::regex(R"(\b[A-Z]{2}\s+\d{5}\b)", E)});
        r.push_back({"address.signal_word", AnalyzerType::address, std::regex(R"(\b(address|addr\.?)\W+\w)", I)});
        r.push_back({"patient_name.signal_word", AnalyzerType::patient_name,
                     std::regex(R"(\b([Pp]atient\s*[Nn]ame|[Pp]at\.?\s*[Nn]ame|[Nn]ame|[Pp]atient)\b\s*[:,]?\s+([A-Z][a-z]+|[A-Z]\.)(,?\s+([A-Z][a-z]+|[A-Z]\.))+)",
                                E)});
        r.push_back({"identifier.signal_word", AnalyzerType::identifier,
                     std::regex(R"(\b(patient\s*id|id|mrn|ssn|insurance(\s*(no|nr|number))?\.?|record\s*(no|nr|number)\.?)\W*[A-Z]{0,3}\d)", I)});
        Rule digits{"identifier.digit_sequence", AnalyzerType::identifier,
                    std::regex(R"(\b[A-Z]{0,3}\d[\d.\-]{4,}\d\b)", E)};
        digits.accept = &at_least_six_digits;
        r.push_back(std::move(digits));
        return r;
    }();
    return rules;
}

}  // namespace detail

/// Regex baseline. The first matching rule decides the label; lines that match
/// nothing are non-phi. The reason names the rule that fired.
inline Verdict rule_analyze(const AnalysisPolicy& /*policy*/, const std::string& text) {
    for (const auto& rule : detail::baseline_rules()) {
        std::smatch m;
        auto begin = text.cbegin();
        while (std::regex_search(begin, text.cend(), m, rule.pattern)) {
            if (!rule.accept || rule.accept(m)) {
                return {rule.type, text, std::string("rule ") + rule.name + " matched '" + m.str() + "'", "en"};
            }
            begin = m.suffix().first;
            if (m.length() == 0) {
                if (begin == text.cend()) break;
                ++begin;
            }
        }
    }
    return {AnalyzerType::non_phi, text, "no rule matched", "en"};
}

}  // namespace phibench
