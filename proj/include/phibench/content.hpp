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
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phibench/error.hpp"
#include "phibench/rng.hpp"
#include "phibench/taxonomy.hpp"

namespace phibench {

/// Text of one imprint split into its three parts.
struct ImprintText {
    std::optional<std::string> accompanying;
    std::string separator;
    std::string main;

    std::string rendered() const {
        return accompanying ? *accompanying + separator + main : main;
    }

    friend bool operator==(const ImprintText&, const ImprintText&) = default;
};

/// Word lists the content generators draw from. Each list can be replaced by a
/// plain-text file (one entry per line) named after the field, e.g. first_names.txt.
struct ContentPools {
    std::vector<std::string> first_names;
    std::vector<std::string> last_names;
    std::vector<std::string> streets;
    std::vector<std::string> cities;
    std::vector<std::string> states;
    std::vector<std::string> countries;
    std::vector<std::string> email_domains;
    std::vector<std::string> hospitals;
    std::vector<std::string> scanners;
    std::vector<std::string> examinations;
    std::vector<std::string> diagnoses;
    std::vector<std::string> markers;

    std::map<std::string, std::vector<std::string>*> fields() {
        return {{"first_names", &first_names},   {"last_names", &last_names},
                {"streets", &streets},           {"cities", &cities},
                {"states", &states},             {"countries", &countries},
                {"email_domains", &email_domains}, {"hospitals", &hospitals},
                {"scanners", &scanners},         {"examinations", &examinations},
                {"diagnoses", &diagnoses},       {"markers", &markers}};
    }
};

inline const ContentPools& default_pools() {
    static const ContentPools pools = [] {
        ContentPools p;
        p.first_names = {"John",  "Jane",   "Maria", "James",  "Anna",    "Robert", "Linda",
                         "Peter", "Sophie", "Lukas", "Emma",   "Michael", "Sarah",  "David",
                         "Laura", "Thomas", "Julia", "Daniel", "Olivia",  "Samuel", "Clara"};
        p.last_names = {"Doe",     "Smith",  "Miller", "Johnson", "Brown",   "Schmidt", "Garcia",
                        "Wilson",  "Taylor", "Becker", "Fischer", "Anderson", "Martin", "Clark",
                        "Lewis",   "Walker", "Young",  "Hall",    "Wagner",  "Keller",  "Morgan"};
        p.streets = {"Main St",    "Oak Avenue",  "Maple Rd",    "Elm Street",  "Park Lane",
                     "Cedar Blvd", "Hill Street", "Lake Drive",  "River Road",  "Pine Ct"};
        p.cities = {"Springfield", "Riverside", "Fairview", "Greenville", "Madison",
                    "Franklin",    "Clinton",   "Salem",    "Bristol",    "Georgetown"};
        p.states = {"IL", "CA", "NY", "TX", "WA", "MA", "OH", "PA", "GA", "MN"};
        p.countries = {"USA", "Germany", "Canada", "UK", "Austria", "Switzerland"};
        p.email_domains = {"email.com", "mail.org", "example.net", "inbox.com", "post.de"};
        p.hospitals = {"Mayo Clinic Eau Claire",     "St. Mary Medical Center",
                       "University Hospital Essen",  "General Hospital",
                       "Riverside Imaging Center",   "Mercy Radiology Institute",
                       "City Medical Center",        "Northside Clinic"};
        p.scanners = {"Philips Ingenia 3.0T",  "Siemens SOMATOM Force", "GE Discovery MR750",
                      "Canon Aquilion ONE",    "Siemens MAGNETOM Vida", "GE Revolution CT",
                      "Philips Brilliance 64", "Siemens Symbia Intevo"};
        p.examinations = {"CT Cholangiography", "CT Thorax",        "MRI Brain T1",
                          "MRI Brain FLAIR",    "Chest X-Ray PA",   "Whole Body Bone Scan",
                          "CT Abdomen",         "MR Angiography",   "PET-CT Whole Body"};
        p.diagnoses = {"Fibrosis",      "Pneumonia",   "Pleural effusion", "Metastasis",
                       "No findings",   "Glioma",      "Fracture",         "Cardiomegaly",
                       "Nodule",        "Atelectasis"};
        p.markers = {"R", "L", "POST", "ANT", "AP", "PA", "LAT", "SUP", "INF"};
        return p;
    }();
    return pools;
}

/// Defaults overridden by any <field>.txt present in dir.
inline ContentPools load_pools(const std::filesystem::path& dir) {
    ContentPools pools = default_pools();
    for (auto& [name, list] : pools.fields()) {
        const auto file = dir / (name + ".txt");
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file);
        if (!in) throw IoError("cannot read pool file: " + file.string());
        std::vector<std::string> entries;
        for (std::string line; std::getline(in, line);) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (!line.empty() && line.front() != '#') entries.push_back(line);
        }
        if (entries.empty()) throw ConfigError("pool file is empty: " + file.string());
        *list = std::move(entries);
    }
    return pools;
}

namespace detail {

inline std::string digits(Rng& rng, int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng.uniform_int(0, 9)));
    return s;
}

inline std::string pad2(int v) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", v);
    return buf;
}

inline std::string format_date(Rng& rng) {
    static const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    const int year = static_cast<int>(rng.uniform_int(1930, 2024));
    const int month = static_cast<int>(rng.uniform_int(1, 12));
    const int day = static_cast<int>(rng.uniform_int(1, 28));
    const auto y = std::to_string(year);
    switch (rng.uniform_int(0, 4)) {
        case 0: return pad2(day) + "-" + pad2(month) + "-" + y;
        case 1: return pad2(month) + "/" + pad2(day) + "/" + y;
        case 2: return y + "-" + pad2(month) + "-" + pad2(day);
        case 3: return pad2(day) + "." + pad2(month) + "." + y;
        default: return std::to_string(day) + " " + kMonths[month - 1] + " " + y;
    }
}

inline std::string person_name(Rng& rng, const ContentPools& pools) {
    const auto& first = rng.pick(pools.first_names);
    const auto& last = rng.pick(pools.last_names);
    switch (rng.uniform_int(0, 3)) {
        case 0: return last + ", " + first;
        case 1: return first.substr(0, 1) + ". " + last;
        default: return first + " " + last;
    }
}

struct CategoryGrammar {
    std::vector<std::string> signal_words;
    bool omittable = true;
};

inline const CategoryGrammar& grammar(Category c) {
    static const std::map<Category, CategoryGrammar> table = {
        {Category::date, {{"DOB", "Date of Birth", "Birth Date", "Admission", "Discharge Date"}, true}},
        {Category::identifier, {{"Patient ID", "ID", "MRN", "Insurance No.", "SSN"}, true}},
        {Category::patient_name, {{"Patient Name", "Pat. Name", "Name", "Patient"}, true}},
        {Category::address, {{"Address", "Addr."}, true}},
        {Category::phone_number, {{"Contact", "Phone", "Tel.", "Mobile"}, true}},
        {Category::email, {{"Email", "E-mail"}, true}},
        {Category::age_under_90, {{"Age"}, true}},
        {Category::gender, {{"Sex", "Gender"}, true}},
        {Category::height, {{"Height"}, true}},
        {Category::weight, {{"Weight"}, true}},
        {Category::examination_type, {{"Exam", "Study", "Protocol"}, true}},
        {Category::hospital, {{"Institution"}, true}},
        {Category::marker, {{}, true}},
        {Category::scanner, {{"Scanner", "Device"}, true}},
        {Category::diagnosis, {{"Diagnosis", "Dx", "Indication", "Comment"}, true}},
        {Category::imaging_personnel,
         {{"Indicated by", "Radiologist", "Technician", "Operator", "Referring Physician"}, false}},
    };
    return table.at(c);
}

}  // namespace detail

/// Draws the main text of an imprint for the given category.
inline std::string generate_main_text(Category category, Rng& rng, const ContentPools& pools = default_pools()) {
    using detail::digits;
    switch (category) {
        case Category::date:
            return detail::format_date(rng);
        case Category::identifier:
            switch (rng.uniform_int(0, 3)) {
                case 0: return digits(rng, 4) + "." + digits(rng, 4);
                case 1: return digits(rng, static_cast<int>(rng.uniform_int(7, 10)));
                case 2: {
                    std::string s;
                    s.push_back(static_cast<char>('A' + rng.uniform_int(0, 25)));
                    s.push_back(static_cast<char>('A' + rng.uniform_int(0, 25)));
                    return s + digits(rng, 8);
                }
                default: return digits(rng, 3) + "-" + digits(rng, 2) + "-" + digits(rng, 4);
            }
        case Category::patient_name:
            return detail::person_name(rng, pools);
        case Category::address: {
            const auto number = std::to_string(rng.uniform_int(1, 999));
            const auto& street = rng.pick(pools.streets);
            const auto& city = rng.pick(pools.cities);
            const auto& state = rng.pick(pools.states);
            const auto zip = digits(rng, 5);
            switch (rng.uniform_int(0, 2)) {
                case 0: return number + " " + street + ", " + city + ", " + state + " " + zip + ", " +
                               rng.pick(pools.countries);
                case 1: return number + " " + street + ", " + city + ", " + state + " " + zip;
                default: return number + " " + street + ", " + zip + " " + city;
            }
        }
        case Category::phone_number: {
            const auto a = digits(rng, 3), b = digits(rng, 3), c = digits(rng, 4);
            switch (rng.uniform_int(0, 3)) {
                case 0: return a + "-" + b + "-" + c;
                case 1: return "(" + a + ") " + b + "-" + c;
                case 2: return "+1 " + a + " " + b + " " + c;
                default: return a + "." + b + "." + c;
            }
        }
        case Category::email: {
            std::string first = rng.pick(pools.first_names), last = rng.pick(pools.last_names);
            for (auto& ch : first) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            for (auto& ch : last) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            const char* joins[] = {".", "_", ""};
            return first + joins[rng.index(3)] + last + "@" + rng.pick(pools.email_domains);
        }
        case Category::age_under_90: {
            const auto age = std::to_string(rng.uniform_int(0, 89));
            switch (rng.uniform_int(0, 2)) {
                case 0: return age;
                case 1: return age + "Y";
                default: return age + " years";
            }
        }
        case Category::gender: {
            static const std::vector<std::string> forms = {"M", "F", "D", "[M]", "[F]", "Male", "Female", "Diverse"};
            return rng.pick(forms);
        }
        case Category::height:
            if (rng.bernoulli(0.5)) return std::to_string(rng.uniform_int(140, 205)) + " cm";
            return "1." + detail::pad2(static_cast<int>(rng.uniform_int(40, 99))) + " m";
        case Category::weight:
            if (rng.bernoulli(0.7)) return std::to_string(rng.uniform_int(40, 150)) + " kg";
            return std::to_string(rng.uniform_int(90, 330)) + " lbs";
        case Category::examination_type:
            return rng.pick(pools.examinations);
        case Category::hospital:
            return rng.pick(pools.hospitals);
        case Category::marker: {
            std::vector<std::string> picked = pools.markers;
            rng.shuffle(picked);
            const auto n = std::min<std::size_t>(picked.size(), static_cast<std::size_t>(rng.uniform_int(1, 3)));
            std::string s;
            for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + picked[i];
            return s;
        }
        case Category::scanner:
            return rng.pick(pools.scanners);
        case Category::diagnosis:
            return rng.pick(pools.diagnoses);
        case Category::imaging_personnel: {
            const auto& first = rng.pick(pools.first_names);
            const auto& last = rng.pick(pools.last_names);
            return rng.bernoulli(0.3) ? "Dr. " + last : first + " " + last;
        }
    }
    return {};
}

/// Accompanying text, separator and main text for one imprint. Categories
/// without signal words, or drawn for omission, come back with no accompanying
/// text and an empty separator.
inline ImprintText generate_content(Category category, Rng& rng, double omission_prob,
                                    const ContentPools& pools = default_pools()) {
    const auto& g = detail::grammar(category);
    ImprintText out;

    // Ages of 90 and above fold into the date class.
    if (category == Category::date && rng.bernoulli(0.1)) {
        out.accompanying = "Age";
        out.separator = ": ";
        out.main = std::to_string(rng.uniform_int(90, 104));
        if (g.omittable && rng.bernoulli(omission_prob)) {
            out.accompanying.reset();
            out.separator.clear();
            out.main += " years";
        }
        return out;
    }

    out.main = generate_main_text(category, rng, pools);
    if (g.signal_words.empty() || (g.omittable && rng.bernoulli(omission_prob))) return out;

    // Signal words such as "Indicated by" read naturally only with a space.
    static const std::vector<std::string> separators = {": ", ", ", " ", "  "};
    out.accompanying = rng.pick(g.signal_words);
    out.separator = *out.accompanying == "Indicated by" ? " " : rng.pick(separators);
    return out;
}

}  // namespace phibench
