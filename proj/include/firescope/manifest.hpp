#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "firescope/domain.hpp"
#include "firescope/encoding.hpp"
#include "firescope/errors.hpp"
#include "firescope/rng.hpp"

namespace firescope {

struct DatasetManifest {
    std::vector<HouseholdRecord> records;
    std::string source_name;
    int schema_version = 1;
    /// Load-time findings that do not invalidate the manifest (unreadable
    /// image files, empty input); records are flagged, never dropped.
    std::vector<std::string> warnings;
};

struct SamplePlan {
    std::uint64_t seed = 0;
    std::size_t total = 0;
    /// When present, per-category draw counts; must sum to total.
    std::optional<std::map<RawDamageCategory, std::size_t>> quotas;
};

namespace detail {

inline HouseholdRecord record_from_json(const nlohmann::json& j, std::size_t line_no) {
    if (!j.is_object()) throw ManifestParseError(line_no, "not a JSON object");
    HouseholdRecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.event = Event::parse(j.at("event").get<std::string>());
        const auto gt = j.at("ground_truth").get<std::string>();
        const auto cat = raw_category_from_token(gt);
        if (!cat) throw ManifestParseError(line_no, "unknown ground_truth \"" + gt + "\"");
        r.ground_truth = *cat;
        for (const auto& ji : j.at("images")) {
            ImageRef ref;
            ref.uri = ji.at("uri").get<std::string>();
            if (ref.uri.empty()) throw ManifestParseError(line_no, "empty image uri");
            const auto view = ji.at("view").get<std::string>();
            if (view == "front") {
                ref.view = ImageView::Front;
            } else if (view == "other") {
                ref.view = ImageView::Other;
            } else {
                throw ManifestParseError(line_no, "unknown view \"" + view + "\"");
            }
            r.images.push_back(std::move(ref));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ManifestParseError(line_no, e.what());
    }
    if (r.id.empty()) throw ManifestParseError(line_no, "empty id");
    if (r.images.empty()) throw ManifestParseError(line_no, "record has no images");

    std::size_t fronts = 0;
    std::size_t front_idx = 0;
    for (std::size_t i = 0; i < r.images.size(); ++i) {
        if (r.images[i].view == ImageView::Front) {
            ++fronts;
            front_idx = i;
        }
    }
    if (fronts != 1) {
        throw MissingFrontView(r.id, fronts == 0 ? "no front view image"
                                                 : "multiple images marked as front view");
    }
    // Normalize the front view to index 0, keeping the rest in manifest order.
    if (front_idx != 0) {
        ImageRef front = r.images[front_idx];
        r.images.erase(r.images.begin() + static_cast<std::ptrdiff_t>(front_idx));
        r.images.insert(r.images.begin(), std::move(front));
    }
    return r;
}

}  // namespace detail

inline nlohmann::json record_to_json(const HouseholdRecord& r) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& img : r.images) {
        images.push_back({{"uri", img.uri},
                          {"view", img.view == ImageView::Front ? "front" : "other"}});
    }
    return {{"id", r.id},
            {"event", r.event.name},
            {"ground_truth", to_token(r.ground_truth)},
            {"images", images}};
}

/// Loads a JSON-lines manifest: one household object per line. Blank lines
/// are skipped. Unreadable local image files become warnings, not errors.
inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest: " + path);
    DatasetManifest m;
    m.source_name = std::filesystem::path(path).filename().string();

    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ManifestParseError(line_no, e.what());
        }
        HouseholdRecord r = detail::record_from_json(j, line_no);
        if (!seen_ids.insert(r.id).second) throw DuplicateId(r.id);
        for (const auto& img : r.images) {
            if (is_remote_uri(img.uri)) {
                m.warnings.push_back("record " + r.id + ": remote uri not verified: " + img.uri);
            } else {
                std::string p = img.uri;
                if (p.rfind("file://", 0) == 0) p = p.substr(7);
                if (!std::filesystem::exists(p)) {
                    m.warnings.push_back("record " + r.id + ": missing image file: " + img.uri);
                }
            }
        }
        m.records.push_back(std::move(r));
    }
    if (m.records.empty()) m.warnings.push_back("manifest has 0 records");
    return m;
}

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest: " + path);
    for (const auto& r : m.records) {
        out << record_to_json(r).dump() << "\n";
    }
}

/// Draws a reproducible sample. Without quotas: uniform without replacement,
/// output in shuffled order. With quotas: uniform without replacement within
/// each category (category stream seeded from plan.seed and the category
/// ordinal), output grouped by category in declaration order.
inline DatasetManifest draw_sample(const DatasetManifest& manifest, const SamplePlan& plan) {
    DatasetManifest out;
    out.source_name = manifest.source_name + "#sample";
    out.schema_version = manifest.schema_version;

    if (!plan.quotas) {
        if (plan.total > manifest.records.size()) {
            throw InsufficientRecords("any", plan.total, manifest.records.size());
        }
        std::vector<std::size_t> idx(manifest.records.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        SplitMix64 rng(plan.seed);
        deterministic_shuffle(idx, rng);
        for (std::size_t i = 0; i < plan.total; ++i) {
            out.records.push_back(manifest.records[idx[i]]);
        }
        return out;
    }

    std::size_t quota_sum = 0;
    for (const auto& [cat, n] : *plan.quotas) quota_sum += n;
    if (quota_sum != plan.total) {
        throw Error("sample plan quotas sum to " + std::to_string(quota_sum) +
                    ", expected total " + std::to_string(plan.total));
    }
    for (std::size_t k = 0; k < kAllRawCategories.size(); ++k) {
        const RawDamageCategory cat = kAllRawCategories[k];
        const auto it = plan.quotas->find(cat);
        if (it == plan.quotas->end() || it->second == 0) continue;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < manifest.records.size(); ++i) {
            if (manifest.records[i].ground_truth == cat) idx.push_back(i);
        }
        if (it->second > idx.size()) {
            throw InsufficientRecords(to_token(cat), it->second, idx.size());
        }
        SplitMix64 rng(plan.seed * 6364136223846793005ULL + k + 1);
        deterministic_shuffle(idx, rng);
        for (std::size_t i = 0; i < it->second; ++i) {
            out.records.push_back(manifest.records[idx[i]]);
        }
    }
    return out;
}

}  // namespace firescope
