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
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phibench/error.hpp"
#include "phibench/geometry.hpp"
#include "phibench/render.hpp"
#include "phibench/taxonomy.hpp"

namespace phibench {

struct ManifestEntry {
    std::string image_id;
    std::string path;  // relative to the manifest directory
    int width = 0;
    int height = 0;
    std::vector<LabelRecord> labels;

    bool has_phi() const {
        for (const auto& l : labels) {
            if (l.phi) return true;
        }
        return false;
    }

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
    std::string dataset_id;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> entries;
    // Directory image paths are resolved against; not serialized.
    std::filesystem::path root;

    const ManifestEntry* find(const std::string& image_id) const {
        for (const auto& e : entries) {
            if (e.image_id == image_id) return &e;
        }
        return nullptr;
    }

    std::filesystem::path image_path(const ManifestEntry& e) const { return root / e.path; }
};

// Serialized field order follows the published manifest layout.
using ordered_json = nlohmann::ordered_json;

inline ordered_json bbox_to_json(const BoundingBox& b) { return ordered_json::array({b.x, b.y, b.w, b.h}); }

inline BoundingBox bbox_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4) throw IoError("bbox must be an array [x, y, w, h]");
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw IoError("bbox coordinates must be integers");
    }
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

inline ordered_json label_to_json(const LabelRecord& l) {
    ordered_json j;
    j["bbox"] = bbox_to_json(l.bbox);
    j["category"] = std::string(render_name(l.category));
    j["phi"] = l.phi;
    j["analyzer_type"] = std::string(render_name(l.analyzer_type));
    j["text"] = l.text;
    return j;
}

inline LabelRecord label_from_json(const nlohmann::json& j) {
    try {
        LabelRecord l;
        l.bbox = bbox_from_json(j.at("bbox"));
        l.category = parse_category(j.at("category").get<std::string>());
        l.phi = j.at("phi").get<bool>();
        const auto type = parse_analyzer_type(j.at("analyzer_type").get<std::string>());
        if (!type) throw IoError("unknown analyzer_type in label");
        l.analyzer_type = *type;
        l.text = j.at("text").get<std::string>();
        if (l.phi != is_phi(l.category) || l.analyzer_type != to_analyzer_type(l.category)) {
            throw IoError("label '" + l.text + "' is inconsistent with its category");
        }
        return l;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed label record: ") + e.what());
    } catch (const UnknownCategory& e) {
        throw IoError(e.what());
    }
}

inline ordered_json entry_to_json(const ManifestEntry& e) {
    ordered_json j;
    j["image_id"] = e.image_id;
    j["path"] = e.path;
    j["width"] = e.width;
    j["height"] = e.height;
    j["labels"] = ordered_json::array();
    for (const auto& l : e.labels) j["labels"].push_back(label_to_json(l));
    return j;
}

inline void write_manifest(const DatasetManifest& m, std::ostream& out) {
    ordered_json header;
    header["dataset_id"] = m.dataset_id;
    header["seed"] = m.seed;
    header["image_count"] = m.entries.size();
    out << header.dump() << '\n';
    for (const auto& e : m.entries) out << entry_to_json(e).dump() << '\n';
}

inline void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    write_manifest(m, out);
    if (!out) throw IoError("failed writing manifest: " + path.string());
}

/// Parses and validates a manifest: unique image ids, entry count equal to
/// the header's image_count, every label inside its image.
inline DatasetManifest read_manifest(std::istream& in, const std::filesystem::path& root = {}) {
    DatasetManifest m;
    m.root = root;
    std::string line;
    if (!std::getline(in, line)) throw IoError("manifest is empty");
    std::size_t expected = 0;
    try {
        const auto header = nlohmann::json::parse(line);
        m.dataset_id = header.at("dataset_id").get<std::string>();
        m.seed = header.at("seed").get<std::uint64_t>();
        expected = header.at("image_count").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed manifest header: ") + e.what());
    }
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ManifestEntry e;
        try {
            const auto j = nlohmann::json::parse(line);
            e.image_id = j.at("image_id").get<std::string>();
            e.path = j.at("path").get<std::string>();
            e.width = j.at("width").get<int>();
            e.height = j.at("height").get<int>();
            for (const auto& l : j.at("labels")) e.labels.push_back(label_from_json(l));
        } catch (const nlohmann::json::exception& ex) {
            throw IoError(std::string("malformed manifest entry: ") + ex.what());
        }
        if (!seen.insert(e.image_id).second) throw IoError("duplicate image_id: " + e.image_id);
        for (const auto& l : e.labels) {
            if (!l.bbox.fits_in(e.width, e.height)) throw IoError("label outside image " + e.image_id);
        }
        m.entries.push_back(std::move(e));
    }
    if (m.entries.size() != expected) {
        throw IoError("manifest declares " + std::to_string(expected) + " images but lists " +
                      std::to_string(m.entries.size()));
    }
    return m;
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read manifest: " + path.string());
    return read_manifest(in, path.parent_path());
}

}  // namespace phibench
