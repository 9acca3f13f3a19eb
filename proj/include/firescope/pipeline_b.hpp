#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "firescope/domain.hpp"
#include "firescope/encoding.hpp"
#include "firescope/errors.hpp"
#include "firescope/indicators.hpp"
#include "firescope/pipeline_a.hpp"
#include "firescope/provider.hpp"

namespace firescope {

// ---------------------------------------------------------------------------
// Prompt rendering
// ---------------------------------------------------------------------------

/// Stage-1 indicator-extraction prompt. Byte-stable for a given library
/// (golden-file tested); field order follows the library.
inline std::string stage1_prompt(const IndicatorLibrary& library) {
    std::string out =
        "Analyze the image and answer with a JSON object in the following format:\n{\n";
    for (std::size_t i = 0; i < library.size(); ++i) {
        out += "  '" + library.at(i).question + "': true/false";
        if (i + 1 < library.size()) out += ",";
        out += "\n";
    }
    out += "}\nOnly output the JSON object, nothing else.";
    return out;
}

/// Canonical JSON rendering of an indicator assignment, question-keyed in
/// library order. This is both what stage 2 is shown and what run logs store.
inline std::string render_indicator_json(const IndicatorSet& indicators,
                                         const IndicatorLibrary& library) {
    nlohmann::ordered_json out;
    for (const auto& ind : library.all()) {
        out[ind.question] = indicators.at(ind.key);
    }
    return out.dump();
}

/// Stage-2 adjudication prompt with the indicator JSON interpolated.
inline std::string stage2_prompt(const std::string& indicator_json) {
    return "You are an expert in post wildfire disaster building damage assessment.\n"
           "Given a building's attributes in JSON, decide if it is 'Affected', 'No Damage', "
           "or 'Destroyed'.\n"
           "If the attribute says destroyed is true, then output 'Destroyed'.\n"
           "If any one of the other attributes are true, then output 'Affected'.\n"
           "If none of the attributes are true, then output 'No Damage'.\n"
           "Now, decide for this building:\n" +
           indicator_json +
           "\nOutput only one word: 'Affected', 'No Damage', or 'Destroyed'.";
}

// ---------------------------------------------------------------------------
// Stage-1 reply parsing
// ---------------------------------------------------------------------------

namespace detail {

/// Hosted models like to decorate JSON with code fences or a sentence of
/// prose. Strip decoration, but keep key checking strict: silent indicator
/// drift must fail loudly.
inline std::string isolate_json_object(const std::string& text) {
    std::string body = text;
    const auto fence = body.find("```");
    if (fence != std::string::npos) {
        auto start = body.find('\n', fence);  // skip the ```json tag line
        if (start == std::string::npos) throw Error("unterminated code fence");
        const auto closing = body.find("```", start);
        if (closing == std::string::npos) throw Error("unterminated code fence");
        body = body.substr(start + 1, closing - start - 1);
    }
    const auto open = body.find('{');
    const auto close = body.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw Error("no JSON object found");
    }
    return body.substr(open, close - open + 1);
}

inline bool coerce_bool(const nlohmann::json& v) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_string()) {
        const std::string s = to_lower_copy(v.get<std::string>());
        if (s == "true") return true;
        if (s == "false") return false;
    }
    throw Error("value is neither boolean nor \"true\"/\"false\"");
}

}  // namespace detail

/// Parses a stage-1 reply into a complete IndicatorSet. The object may be
/// keyed by question phrasing (the prompt's contract) or by library key;
/// missing or unknown fields are errors.
inline IndicatorSet parse_indicator_reply(const std::string& text,
                                          const IndicatorLibrary& library,
                                          const std::string& household_id) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(detail::isolate_json_object(text));
    } catch (const std::exception& e) {
        throw IndicatorParseError(household_id, e.what());
    }
    if (!obj.is_object()) throw IndicatorParseError(household_id, "reply is not a JSON object");

    IndicatorSet set;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const Indicator* ind = library.find_by_question(it.key());
        if (!ind) {
            for (const auto& candidate : library.all()) {
                if (candidate.key == it.key()) { ind = &candidate; break; }
            }
        }
        if (!ind) throw IndicatorParseError(household_id, "unexpected field \"" + it.key() + "\"");
        bool value = false;
        try {
            value = detail::coerce_bool(it.value());
        } catch (const std::exception& e) {
            throw IndicatorParseError(household_id, "field \"" + it.key() + "\": " + e.what());
        }
        if (!set.values.emplace(ind->key, value).second) {
            throw IndicatorParseError(household_id, "duplicate field \"" + it.key() + "\"");
        }
    }
    if (!set.complete_for(library)) {
        throw IndicatorParseError(household_id,
                                  "incomplete: got " + std::to_string(set.values.size()) +
                                      " of " + std::to_string(library.size()) + " indicators");
    }
    return set;
}

// ---------------------------------------------------------------------------
// Adjudication
// ---------------------------------------------------------------------------

/// Deterministic adjudication rule: destruction indicator wins, any other
/// true indicator means Affected, an all-false set means No Damage. This is
/// the local cross-check for the LLM stage.
inline AssessmentLabel rule_adjudicate(const IndicatorSet& indicators,
                                       const IndicatorLibrary& library) {
    if (indicators.at(library.destruction_indicator().key)) {
        return AssessmentLabel::Destroyed;
    }
    for (const auto& ind : library.all()) {
        if (ind.role == IndicatorRole::Affect && indicators.at(ind.key)) {
            return AssessmentLabel::Affected;
        }
    }
    return AssessmentLabel::NoDamage;
}

struct PipelineBOptions {
    std::string vlm_model = "gpt-4o";
    std::string llm_model = "gpt-4o";
    /// Low temperatures for the deterministic extraction/adjudication tasks;
    /// generous token budget for the structured stage-1 output.
    Decoding stage1{0.1, 300};
    Decoding stage2{0.1, 10};
    bool retry_unparseable = true;
    /// Off by default: stage 2 sees only the indicator JSON. Opting in also
    /// attaches the stage-1 images to the adjudication call.
    bool stage2_with_images = false;
};

struct StageOutcome {
    std::string raw_text;
    TokenUsage usage;
    int attempts = 0;
    bool usage_estimated = false;
    std::int64_t latency_ms = 0;
};

/// Stage 1: ask the vision model the library's questions about the selected
/// views and parse the structured reply.
inline IndicatorSet extract_indicators(const HouseholdRecord& record, ViewMode mode,
                                       const IndicatorLibrary& library, ChatProvider& provider,
                                       const PipelineBOptions& options, StageOutcome& outcome) {
    ModelRequest request;
    request.model_id = options.vlm_model;
    request.prompt = stage1_prompt(library);
    request.images = encode_views(record, mode);
    request.max_tokens = options.stage1.max_tokens;
    request.temperature = options.stage1.temperature;

    const int max_parse_attempts = options.retry_unparseable ? 2 : 1;
    for (int attempt = 1;; ++attempt) {
        const ModelResponse resp = provider.complete(request);
        outcome.usage += resp.usage;
        outcome.usage_estimated = outcome.usage_estimated || resp.usage_estimated;
        outcome.latency_ms += resp.latency_ms;
        outcome.attempts = attempt;
        outcome.raw_text = resp.text;
        try {
            return parse_indicator_reply(resp.text, library, record.id);
        } catch (const IndicatorParseError&) {
            if (attempt >= max_parse_attempts) throw;
            request.temperature = 0.0;
        }
    }
}

inline IndicatorSet extract_indicators(const HouseholdRecord& record, ViewMode mode,
                                       const IndicatorLibrary& library, ChatProvider& provider,
                                       const PipelineBOptions& options = {}) {
    StageOutcome outcome;
    return extract_indicators(record, mode, library, provider, options, outcome);
}

/// Stage 2: have the language model apply the adjudication rule to the
/// indicator JSON. Text-only unless stage2_with_images supplies views.
inline AssessmentLabel llm_adjudicate(const IndicatorSet& indicators,
                                      const IndicatorLibrary& library, ChatProvider& provider,
                                      const PipelineBOptions& options, StageOutcome& outcome,
                                      const std::vector<EncodedImage>& images = {},
                                      const std::string& household_id = "") {
    ModelRequest request;
    request.model_id = options.llm_model;
    request.prompt = stage2_prompt(render_indicator_json(indicators, library));
    request.images = images;
    request.max_tokens = options.stage2.max_tokens;
    request.temperature = options.stage2.temperature;

    const int max_parse_attempts = options.retry_unparseable ? 2 : 1;
    for (int attempt = 1;; ++attempt) {
        const ModelResponse resp = provider.complete(request);
        outcome.usage += resp.usage;
        outcome.usage_estimated = outcome.usage_estimated || resp.usage_estimated;
        outcome.latency_ms += resp.latency_ms;
        outcome.attempts = attempt;
        outcome.raw_text = resp.text;
        try {
            return parse_label(resp.text);
        } catch (const UnparseableLabel&) {
            if (attempt >= max_parse_attempts) {
                throw ClassificationUnparseable(household_id, resp.text);
            }
            request.temperature = 0.0;
        }
    }
}

inline AssessmentLabel llm_adjudicate(const IndicatorSet& indicators,
                                      const IndicatorLibrary& library, ChatProvider& provider,
                                      const PipelineBOptions& options = {}) {
    StageOutcome outcome;
    return llm_adjudicate(indicators, library, provider, options, outcome);
}

struct PipelineBResult {
    std::string household_id;
    ViewMode mode = ViewMode::SingleFront;
    IndicatorSet indicators;
    AssessmentLabel llm_label = AssessmentLabel::NoDamage;
    AssessmentLabel rule_label = AssessmentLabel::NoDamage;
    bool agreement = true;  // llm_label == rule_label
    TokenUsage usage;       // both stages summed
    int attempts = 0;       // provider calls across stages
    std::string raw_stage1;
    std::string raw_stage2;
    std::int64_t latency_ms = 0;
    bool usage_estimated = false;
};

/// Full two-stage pipeline: extraction, then LLM adjudication cross-checked
/// by the deterministic rule.
inline PipelineBResult classify_indicator_guided(const HouseholdRecord& record, ViewMode mode,
                                                 const IndicatorLibrary& library,
                                                 ChatProvider& provider,
                                                 const PipelineBOptions& options = {}) {
    PipelineBResult result;
    result.household_id = record.id;
    result.mode = mode;

    StageOutcome stage1;
    result.indicators = extract_indicators(record, mode, library, provider, options, stage1);
    result.raw_stage1 = stage1.raw_text;

    StageOutcome stage2;
    const std::vector<EncodedImage> stage2_images =
        options.stage2_with_images ? encode_views(record, mode) : std::vector<EncodedImage>{};
    result.llm_label = llm_adjudicate(result.indicators, library, provider, options, stage2,
                                      stage2_images, record.id);
    result.raw_stage2 = stage2.raw_text;

    result.rule_label = rule_adjudicate(result.indicators, library);
    result.agreement = result.llm_label == result.rule_label;
    result.usage = stage1.usage + stage2.usage;
    result.attempts = stage1.attempts + stage2.attempts;
    result.latency_ms = stage1.latency_ms + stage2.latency_ms;
    result.usage_estimated = stage1.usage_estimated || stage2.usage_estimated;
    return result;
}

}  // namespace firescope
