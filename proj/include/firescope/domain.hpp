#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "firescope/errors.hpp"

namespace firescope {

// ---------------------------------------------------------------------------
// Damage taxonomies
// ---------------------------------------------------------------------------

/// Five-class damage category as recorded by inspection databases.
enum class RawDamageCategory { NoDamage, Affected, Minor, Major, Destroyed };

constexpr std::array<RawDamageCategory, 5> kAllRawCategories = {
    RawDamageCategory::NoDamage, RawDamageCategory::Affected, RawDamageCategory::Minor,
    RawDamageCategory::Major, RawDamageCategory::Destroyed};

/// Three-class output alphabet of both classification pipelines.
enum class AssessmentLabel { NoDamage, Affected, Destroyed };

constexpr std::array<AssessmentLabel, 3> kAllLabels = {
    AssessmentLabel::NoDamage, AssessmentLabel::Affected, AssessmentLabel::Destroyed};

inline std::string to_token(RawDamageCategory c) {
    switch (c) {
        case RawDamageCategory::NoDamage: return "no_damage";
        case RawDamageCategory::Affected: return "affected";
        case RawDamageCategory::Minor: return "minor";
        case RawDamageCategory::Major: return "major";
        case RawDamageCategory::Destroyed: return "destroyed";
    }
    return "?";
}

inline std::string to_lower_copy(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::optional<RawDamageCategory> raw_category_from_token(std::string_view token) {
    const std::string t = to_lower_copy(token);
    for (RawDamageCategory c : kAllRawCategories) {
        if (t == to_token(c)) return c;
    }
    if (t == "nodamage" || t == "no damage") return RawDamageCategory::NoDamage;
    return std::nullopt;
}

/// Machine token used in manifests, run logs and reports.
inline std::string to_token(AssessmentLabel l) {
    switch (l) {
        case AssessmentLabel::NoDamage: return "no_damage";
        case AssessmentLabel::Affected: return "affected";
        case AssessmentLabel::Destroyed: return "destroyed";
    }
    return "?";
}

/// Human form, exactly as the classification prompts spell the labels.
inline std::string to_display_string(AssessmentLabel l) {
    switch (l) {
        case AssessmentLabel::NoDamage: return "No Damage";
        case AssessmentLabel::Affected: return "Affected";
        case AssessmentLabel::Destroyed: return "Destroyed";
    }
    return "?";
}

inline std::optional<AssessmentLabel> label_from_token(std::string_view token) {
    const std::string t = to_lower_copy(token);
    for (AssessmentLabel l : kAllLabels) {
        if (t == to_token(l)) return l;
    }
    if (t == "nodamage" || t == "no damage") return AssessmentLabel::NoDamage;
    return std::nullopt;
}

/// Collapses the five inspection categories onto the pipelines' three-label
/// alphabet: affected, minor and major all count as Affected.
inline AssessmentLabel aggregate_category(RawDamageCategory raw) {
    switch (raw) {
        case RawDamageCategory::NoDamage: return AssessmentLabel::NoDamage;
        case RawDamageCategory::Destroyed: return AssessmentLabel::Destroyed;
        case RawDamageCategory::Affected:
        case RawDamageCategory::Minor:
        case RawDamageCategory::Major: return AssessmentLabel::Affected;
    }
    return AssessmentLabel::Affected;
}

// ---------------------------------------------------------------------------
// Households and views
// ---------------------------------------------------------------------------

enum class ImageView { Front, Other };

struct ImageRef {
    std::string uri;
    ImageView view = ImageView::Other;

    bool operator==(const ImageRef&) const = default;
};

/// Fire event tag. Well-known events get a fixed kind; anything else keeps
/// its original spelling under Other.
struct Event {
    enum class Kind { Eaton, Palisades, Other };
    Kind kind = Kind::Other;
    std::string name;  // original manifest spelling

    static Event parse(std::string_view s) {
        const std::string t = to_lower_copy(s);
        if (t == "eaton") return {Kind::Eaton, "eaton"};
        if (t == "palisades") return {Kind::Palisades, "palisades"};
        return {Kind::Other, std::string(s)};
    }

    bool operator==(const Event&) const = default;
};

/// One parcel: its ground truth plus one or more image references.
/// Invariant: images non-empty and the single front view sits at index 0.
struct HouseholdRecord {
    std::string id;
    Event event;
    RawDamageCategory ground_truth = RawDamageCategory::NoDamage;
    std::vector<ImageRef> images;

    const ImageRef& front_image() const { return images.front(); }
};

enum class ViewMode { SingleFront, MultiView };

inline std::string to_token(ViewMode m) {
    return m == ViewMode::SingleFront ? "single" : "multi";
}

inline std::optional<ViewMode> view_mode_from_token(std::string_view token) {
    const std::string t = to_lower_copy(token);
    if (t == "single" || t == "single_front" || t == "front") return ViewMode::SingleFront;
    if (t == "multi" || t == "multi_view" || t == "multiview") return ViewMode::MultiView;
    return std::nullopt;
}

/// Images a pipeline call will see: the front view alone, or the front view
/// followed by the remaining views in manifest order, capped at 3 total.
inline std::vector<ImageRef> select_views(const HouseholdRecord& record, ViewMode mode) {
    std::vector<ImageRef> out;
    out.push_back(record.front_image());
    if (mode == ViewMode::MultiView) {
        for (std::size_t i = 1; i < record.images.size() && out.size() < 3; ++i) {
            out.push_back(record.images[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model-output label parsing
// ---------------------------------------------------------------------------

namespace detail {

/// Lowercases, maps punctuation and separators to spaces, collapses runs of
/// whitespace and trims the ends. "  no damage.\n" -> "no damage".
inline std::string normalize_label_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            out.push_back(' ');
        }
    }
    // collapse whitespace
    std::string collapsed;
    bool in_space = true;  // drop leading spaces
    for (char c : out) {
        if (c == ' ') {
            if (!in_space) collapsed.push_back(' ');
            in_space = true;
        } else {
            collapsed.push_back(c);
            in_space = false;
        }
    }
    while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
    return collapsed;
}

inline bool contains_word_sequence(const std::vector<std::string>& words,
                                   const std::vector<std::string>& seq) {
    if (seq.empty() || words.size() < seq.size()) return false;
    for (std::size_t i = 0; i + seq.size() <= words.size(); ++i) {
        bool all = true;
        for (std::size_t j = 0; j < seq.size(); ++j) {
            if (words[i + j] != seq[j]) { all = false; break; }
        }
        if (all) return true;
    }
    return false;
}

inline std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> words;
    std::size_t start = 0;
    while (start < s.size()) {
        std::size_t end = s.find(' ', start);
        if (end == std::string::npos) end = s.size();
        if (end > start) words.emplace_back(s.substr(start, end - start));
        start = end + 1;
    }
    return words;
}

}  // namespace detail

/// Non-throwing label parse. The normalized reply must consist of exactly one
/// label and nothing else; "no damage" is accepted with or without the space.
inline std::optional<AssessmentLabel> try_parse_label(std::string_view text) {
    const std::string norm = detail::normalize_label_text(text);
    if (norm == "no damage" || norm == "nodamage") return AssessmentLabel::NoDamage;
    if (norm == "affected") return AssessmentLabel::Affected;
    if (norm == "destroyed") return AssessmentLabel::Destroyed;
    return std::nullopt;
}

/// Strict label parse. Throws UnparseableLabel when the reply is not exactly
/// one label; the error distinguishes ambiguous replies (several labels
/// mentioned) from replies with no label at all.
inline AssessmentLabel parse_label(std::string_view text) {
    if (auto l = try_parse_label(text)) return *l;
    const std::string norm = detail::normalize_label_text(text);
    const auto words = detail::split_words(norm);
    int mentioned = 0;
    if (detail::contains_word_sequence(words, {"no", "damage"}) ||
        detail::contains_word_sequence(words, {"nodamage"})) {
        ++mentioned;
    }
    if (detail::contains_word_sequence(words, {"affected"})) ++mentioned;
    if (detail::contains_word_sequence(words, {"destroyed"})) ++mentioned;
    if (mentioned > 1) {
        throw UnparseableLabel(std::string(text), "ambiguous, " + std::to_string(mentioned) +
                                                      " labels mentioned");
    }
    throw UnparseableLabel(std::string(text), "no exact label");
}

}  // namespace firescope
