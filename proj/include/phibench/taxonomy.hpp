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

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

#include "phibench/error.hpp"

namespace phibench {

// Imprint categories. The first six are PHI.
enum class Category {
    date,
    identifier,
    patient_name,
    address,
    phone_number,
    email,
    age_under_90,
    gender,
    height,
    weight,
    examination_type,
    hospital,
    marker,
    scanner,
    diagnosis,
    imaging_personnel,
};

inline constexpr std::array<Category, 16> kAllCategories = {
    Category::date,           Category::identifier,       Category::patient_name,
    Category::address,        Category::phone_number,     Category::email,
    Category::age_under_90,   Category::gender,           Category::height,
    Category::weight,         Category::examination_type, Category::hospital,
    Category::marker,         Category::scanner,          Category::diagnosis,
    Category::imaging_personnel,
};

// Label space of the text analyzer.
enum class AnalyzerType { date, identifier, patient_name, address, phone_nr, email, other, non_phi };

inline constexpr std::array<AnalyzerType, 8> kAllAnalyzerTypes = {
    AnalyzerType::date,     AnalyzerType::identifier, AnalyzerType::patient_name,
    AnalyzerType::address,  AnalyzerType::phone_nr,   AnalyzerType::email,
    AnalyzerType::other,    AnalyzerType::non_phi,
};

/// The six analyzer labels that name a concrete PHI class.
inline constexpr std::array<AnalyzerType, 6> kPhiClasses = {
    AnalyzerType::date,    AnalyzerType::identifier, AnalyzerType::patient_name,
    AnalyzerType::address, AnalyzerType::phone_nr,   AnalyzerType::email,
};

constexpr bool is_phi(Category c) noexcept {
    switch (c) {
        case Category::date:
        case Category::identifier:
        case Category::patient_name:
        case Category::address:
        case Category::phone_number:
        case Category::email:
            return true;
        default:
            return false;
    }
}

constexpr AnalyzerType to_analyzer_type(Category c) noexcept {
    switch (c) {
        case Category::date: return AnalyzerType::date;
        case Category::identifier: return AnalyzerType::identifier;
        case Category::patient_name: return AnalyzerType::patient_name;
        case Category::address: return AnalyzerType::address;
        case Category::phone_number: return AnalyzerType::phone_nr;
        case Category::email: return AnalyzerType::email;
        default: return AnalyzerType::non_phi;
    }
}

constexpr bool is_phi(AnalyzerType t) noexcept { return t != AnalyzerType::non_phi; }

constexpr std::string_view render_name(Category c) noexcept {
    switch (c) {
        case Category::date: return "date";
        case Category::identifier: return "identifier";
        case Category::patient_name: return "patient_name";
        case Category::address: return "address";
        case Category::phone_number: return "phone_number";
        case Category::email: return "email";
        case Category::age_under_90: return "age_under_90";
        case Category::gender: return "gender";
        case Category::height: return "height";
        case Category::weight: return "weight";
        case Category::examination_type: return "examination_type";
        case Category::hospital: return "hospital";
        case Category::marker: return "marker";
        case Category::scanner: return "scanner";
        case Category::diagnosis: return "diagnosis";
        case Category::imaging_personnel: return "imaging_personnel";
    }
    return "";
}

constexpr std::string_view render_name(AnalyzerType t) noexcept {
    switch (t) {
        case AnalyzerType::date: return "date";
        case AnalyzerType::identifier: return "identifier";
        case AnalyzerType::patient_name: return "patient_name";
        case AnalyzerType::address: return "address";
        case AnalyzerType::phone_nr: return "phone_nr";
        case AnalyzerType::email: return "email";
        case AnalyzerType::other: return "other";
        case AnalyzerType::non_phi: return "non-phi";
    }
    return "";
}

namespace detail {

// Lower-case; spaces and hyphens fold to underscores; "<" folds to "under".
inline std::string normalize_label(std::string_view label) {
    std::string out;
    out.reserve(label.size());
    bool pending_sep = false;
    for (char ch : label) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c) || ch == '-' || ch == '_') {
            pending_sep = !out.empty();
            continue;
        }
        if (pending_sep) {
            out.push_back('_');
            pending_sep = false;
        }
        if (ch == '<') {
            out += "under";
            pending_sep = true;
            continue;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

}  // namespace detail

/// Case-insensitive lookup by name. "phone_nr" is accepted for phone_number.
inline Category parse_category(std::string_view label) {
    const std::string key = detail::normalize_label(label);
    for (Category c : kAllCategories) {
        if (key == render_name(c)) return c;
    }
    if (key == "phone_nr") return Category::phone_number;
    throw UnknownCategory(std::string(label));
}

/// Exact match against the wire names; the analyzer enum is closed.
inline std::optional<AnalyzerType> parse_analyzer_type(std::string_view name) noexcept {
    for (AnalyzerType t : kAllAnalyzerTypes) {
        if (name == render_name(t)) return t;
    }
    return std::nullopt;
}

}  // namespace phibench
