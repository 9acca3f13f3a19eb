#pragma once

#include <string>
#include <vector>

#include "firescope/domain.hpp"
#include "firescope/encoding.hpp"
#include "firescope/errors.hpp"
#include "firescope/provider.hpp"

namespace firescope {

/// Direct-classification prompt, fixed verbatim (a golden-file test pins it).
inline constexpr const char* kDirectClassificationPrompt =
    "You are an expert in post wildfire disaster building damage assessment.\n"
    "Given a building's image, decide if it is 'Affected', 'No Damage', or 'Destroyed'.\n"
    "Just output the label of the classification.";

struct Decoding {
    double temperature = 0.0;
    int max_tokens = 10;
};

struct PipelineAOptions {
    std::string model_id = "gpt-4o";
    /// Moderate temperature for the bare-label classification task.
    Decoding decoding{0.5, 10};
    /// One extra attempt at temperature 0 when the reply is not a label.
    bool retry_unparseable = true;
};

struct PipelineAResult {
    std::string household_id;
    ViewMode mode = ViewMode::SingleFront;
    AssessmentLabel label = AssessmentLabel::NoDamage;
    TokenUsage usage;  // summed over attempts
    int attempts = 0;
    std::string raw_text;
    std::int64_t latency_ms = 0;
    bool usage_estimated = false;
};

inline std::vector<EncodedImage> encode_views(const HouseholdRecord& record, ViewMode mode) {
    std::vector<EncodedImage> encoded;
    for (const auto& ref : select_views(record, mode)) {
        encoded.push_back(encode_image(ref));
    }
    return encoded;
}

/// Single-stage zero-shot classification of the selected views.
inline PipelineAResult classify_direct(const HouseholdRecord& record, ViewMode mode,
                                       ChatProvider& provider,
                                       const PipelineAOptions& options = {}) {
    PipelineAResult result;
    result.household_id = record.id;
    result.mode = mode;

    ModelRequest request;
    request.model_id = options.model_id;
    request.prompt = kDirectClassificationPrompt;
    request.images = encode_views(record, mode);
    request.max_tokens = options.decoding.max_tokens;
    request.temperature = options.decoding.temperature;

    const int max_parse_attempts = options.retry_unparseable ? 2 : 1;
    for (int attempt = 1;; ++attempt) {
        const ModelResponse resp = provider.complete(request);
        result.usage += resp.usage;
        result.usage_estimated = result.usage_estimated || resp.usage_estimated;
        result.latency_ms += resp.latency_ms;
        result.attempts = attempt;
        result.raw_text = resp.text;
        try {
            result.label = parse_label(resp.text);
            return result;
        } catch (const UnparseableLabel&) {
            if (attempt >= max_parse_attempts) {
                throw ClassificationUnparseable(record.id, resp.text);
            }
            request.temperature = 0.0;  // pin down the retry
        }
    }
}

}  // namespace firescope
