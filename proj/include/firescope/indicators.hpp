#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "firescope/domain.hpp"
#include "firescope/errors.hpp"

namespace firescope {

/// What a true answer to an indicator question implies.
enum class IndicatorRole { Destruction, Affect };

struct Indicator {
    std::string key;       // stable snake_case identifier used in logs
    std::string question;  // exact phrasing rendered into prompts and JSON
    IndicatorRole role = IndicatorRole::Affect;
};

/// Ordered set of binary damage-indicator questions. Order is load-bearing:
/// it drives prompt rendering and JSON field order. Exactly one indicator
/// carries the Destruction role.
class IndicatorLibrary {
public:
    explicit IndicatorLibrary(std::string name, std::vector<Indicator> indicators)
        : name_(std::move(name)), indicators_(std::move(indicators)) {
        validate();
    }

    /// The six indicators of the minimal extraction prompt.
    static IndicatorLibrary alg2_min() {
        return IndicatorLibrary(
            "alg2-min",
            {{"house_destroyed", "is the house destroyed", IndicatorRole::Destruction},
             {"structure_damaged", "is the structure damaged", IndicatorRole::Affect},
             {"glass_or_windows_broken", "is the glass or windows broken", IndicatorRole::Affect},
             {"furniture_burnt", "is the furniture burnt", IndicatorRole::Affect},
             {"burn_marks_on_structure", "are there burn marks on the structure",
              IndicatorRole::Affect},
             {"vegetation_around_burnt", "is the vegetation around burnt",
              IndicatorRole::Affect}});
    }

    /// The full eleven-question library drawn from parcel-level wildfire
    /// risk literature. Note: the debris question is known to fire on
    /// benign objects such as tarps; it is kept as published.
    static IndicatorLibrary appendix_full() {
        return IndicatorLibrary(
            "appendix-full",
            {{"house_destroyed", "is the house destroyed", IndicatorRole::Destruction},
             {"structure_damaged", "is the structure damaged", IndicatorRole::Affect},
             {"any_minor_damage_visible",
              "is there any (even minor) damage visible on or around the house",
              IndicatorRole::Affect},
             {"fire_discoloration",
              "is there discoloration of walls or roof or around the house due to fire",
              IndicatorRole::Affect},
             {"signs_of_small_affect", "are there any signs of even small affect due to fire",
              IndicatorRole::Affect},
             {"glass_or_windows_broken", "is the glass or windows broken", IndicatorRole::Affect},
             {"furniture_burnt", "is the furniture burnt", IndicatorRole::Affect},
             {"burn_marks_on_structure", "are there burn marks on the structure",
              IndicatorRole::Affect},
             {"vegetation_around_burnt", "is the vegetation around burnt", IndicatorRole::Affect},
             {"roof_damaged", "is the roof of the house damaged", IndicatorRole::Affect},
             {"debris_around_house", "is there debris around the house", IndicatorRole::Affect}});
    }

    /// Resolves a preset name or a JSON file path.
    static IndicatorLibrary resolve(const std::string& name_or_path) {
        if (name_or_path == "alg2-min") return alg2_min();
        if (name_or_path == "appendix-full") return appendix_full();
        return load(name_or_path);
    }

    /// File format: JSON array of {key, question, role: "destruction"|"affect"}.
    static IndicatorLibrary load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open indicator library: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("indicator library " + path + ": " + e.what());
        }
        return from_json(j, path);
    }

    static IndicatorLibrary from_json(const nlohmann::json& j, const std::string& name) {
        if (!j.is_array()) throw ConfigError("indicator library must be a JSON array");
        std::vector<Indicator> items;
        for (const auto& ji : j) {
            Indicator ind;
            try {
                ind.key = ji.at("key").get<std::string>();
                ind.question = ji.at("question").get<std::string>();
                const auto role = ji.at("role").get<std::string>();
                if (role == "destruction") {
                    ind.role = IndicatorRole::Destruction;
                } else if (role == "affect") {
                    ind.role = IndicatorRole::Affect;
                } else {
                    throw ConfigError("unknown indicator role: " + role);
                }
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("indicator entry: ") + e.what());
            }
            items.push_back(std::move(ind));
        }
        return IndicatorLibrary(name, std::move(items));
    }

    nlohmann::json to_json() const {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& ind : indicators_) {
            out.push_back({{"key", ind.key},
                           {"question", ind.question},
                           {"role", ind.role == IndicatorRole::Destruction ? "destruction"
                                                                           : "affect"}});
        }
        return out;
    }

    const std::string& name() const { return name_; }
    std::size_t size() const { return indicators_.size(); }
    const Indicator& at(std::size_t i) const { return indicators_.at(i); }
    const std::vector<Indicator>& all() const { return indicators_; }

    const Indicator& destruction_indicator() const { return indicators_[destruction_idx_]; }

    const Indicator* find_by_question(const std::string& question) const {
        for (const auto& ind : indicators_) {
            if (ind.question == question) return &ind;
        }
        return nullptr;
    }

private:
    void validate() {
        if (indicators_.empty()) throw ConfigError("indicator library is empty");
        std::set<std::string> keys;
        std::set<std::string> questions;
        std::size_t destruction_count = 0;
        for (std::size_t i = 0; i < indicators_.size(); ++i) {
            const auto& ind = indicators_[i];
            if (ind.key.empty() || ind.question.empty()) {
                throw ConfigError("indicator key/question must be non-empty");
            }
            if (!keys.insert(ind.key).second) {
                throw ConfigError("duplicate indicator key: " + ind.key);
            }
            if (!questions.insert(ind.question).second) {
                throw ConfigError("duplicate indicator question: " + ind.question);
            }
            if (ind.role == IndicatorRole::Destruction) {
                ++destruction_count;
                destruction_idx_ = i;
            }
        }
        if (destruction_count != 1) {
            throw ConfigError("library must contain exactly one destruction indicator, has " +
                              std::to_string(destruction_count));
        }
    }

    std::string name_;
    std::vector<Indicator> indicators_;
    std::size_t destruction_idx_ = 0;
};

/// Complete boolean assignment over one library's keys.
struct IndicatorSet {
    std::map<std::string, bool> values;  // key -> answer

    bool at(const std::string& key) const {
        const auto it = values.find(key);
        if (it == values.end()) throw Error("indicator set missing key: " + key);
        return it->second;
    }

    /// Every library key present, nothing else.
    bool complete_for(const IndicatorLibrary& library) const {
        if (values.size() != library.size()) return false;
        for (const auto& ind : library.all()) {
            if (values.find(ind.key) == values.end()) return false;
        }
        return true;
    }

    /// Assignment from a bitmask, bit i answering library indicator i.
    /// Handy for exhaustive sweeps.
    static IndicatorSet from_bits(const IndicatorLibrary& library, std::uint64_t bits) {
        IndicatorSet s;
        for (std::size_t i = 0; i < library.size(); ++i) {
            s.values[library.at(i).key] = (bits >> i) & 1;
        }
        return s;
    }

    bool operator==(const IndicatorSet&) const = default;
};

}  // namespace firescope
