#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "firescope/decimal.hpp"
#include "firescope/encoding.hpp"
#include "firescope/errors.hpp"

namespace firescope {

/// Token counts for one or more model calls. Additive.
struct TokenUsage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    TokenUsage operator+(const TokenUsage& o) const {
        return {input_tokens + o.input_tokens, output_tokens + o.output_tokens};
    }
    TokenUsage& operator+=(const TokenUsage& o) {
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        return *this;
    }
    bool operator==(const TokenUsage&) const = default;
};

struct CostModel {
    Decimal input_price_per_token;
    Decimal output_price_per_token;
};

inline Decimal cost_of(const TokenUsage& usage, const CostModel& model) {
    return model.input_price_per_token.times(usage.input_tokens) +
           model.output_price_per_token.times(usage.output_tokens);
}

/// One provider-agnostic chat call: a prompt, optional images, decoding knobs.
struct ModelRequest {
    std::string model_id;
    std::string prompt;
    std::vector<EncodedImage> images;  // at most 3
    int max_tokens = 10;
    double temperature = 0.0;

    void validate() const {
        if (max_tokens < 1) throw Error("max_tokens must be >= 1");
        if (temperature < 0.0 || temperature > 2.0) {
            throw Error("temperature must lie in [0, 2]");
        }
        if (images.size() > 3) throw Error("at most 3 images per request");
    }
};

struct ModelResponse {
    std::string text;
    TokenUsage usage;
    std::int64_t latency_ms = 0;
    std::string raw_finish_reason;
    /// True when the endpoint did not report usage and counts are heuristic.
    bool usage_estimated = false;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ModelResponse complete(const ModelRequest& request) = 0;
};

enum class ErrorClass { RateLimit, TransientNetwork, UnparseableOutput };

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_base_ms = 250;
    std::set<ErrorClass> retry_on = {ErrorClass::RateLimit, ErrorClass::TransientNetwork,
                                     ErrorClass::UnparseableOutput};

    bool retries(ErrorClass c) const { return retry_on.count(c) > 0; }
};

/// Token-bucket limiter on requests per minute. Thread-safe. rpm == 0
/// disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(int requests_per_minute = 0) : rpm_(requests_per_minute) {}

    void acquire() {
        if (rpm_ <= 0) return;
        std::unique_lock<std::mutex> lock(mu_);
        const auto interval = std::chrono::milliseconds(60000 / rpm_);
        const auto now = std::chrono::steady_clock::now();
        if (next_slot_ < now) next_slot_ = now;
        const auto wait_until = next_slot_;
        next_slot_ += interval;
        lock.unlock();
        std::this_thread::sleep_until(wait_until);
    }

private:
    int rpm_;
    std::mutex mu_;
    std::chrono::steady_clock::time_point next_slot_{};
};

/// Wraps any provider with bounded retries and exponential backoff. Retried
/// requests are re-sent verbatim; at most max_attempts transport attempts
/// happen per logical call.
class RetryingProvider : public ChatProvider {
public:
    RetryingProvider(ChatProvider& inner, RetryPolicy policy)
        : inner_(inner), policy_(policy) {}

    ModelResponse complete(const ModelRequest& request) override {
        for (int attempt = 1;; ++attempt) {
            try {
                return inner_.complete(request);
            } catch (const RateLimited& e) {
                if (attempt >= policy_.max_attempts || !policy_.retries(ErrorClass::RateLimit)) {
                    throw;
                }
                sleep_ms(std::max<std::int64_t>(backoff_ms(attempt),
                                                static_cast<std::int64_t>(e.retry_after_s()) * 1000));
            } catch (const EndpointError& e) {
                // 5xx is transient; other statuses are contract failures.
                if (e.status() < 500 || attempt >= policy_.max_attempts ||
                    !policy_.retries(ErrorClass::TransientNetwork)) {
                    throw;
                }
                sleep_ms(backoff_ms(attempt));
            } catch (const TransportError&) {
                if (attempt >= policy_.max_attempts ||
                    !policy_.retries(ErrorClass::TransientNetwork)) {
                    throw;
                }
                sleep_ms(backoff_ms(attempt));
            }
        }
    }

private:
    std::int64_t backoff_ms(int attempt) const {
        return static_cast<std::int64_t>(policy_.backoff_base_ms) << (attempt - 1);
    }
    static void sleep_ms(std::int64_t ms) {
        if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }

    ChatProvider& inner_;
    RetryPolicy policy_;
};

/// Deterministic token estimate for endpoints (and mocks) that do not report
/// usage: ~4 characters per text token plus a flat 85 tokens per image tile.
inline TokenUsage estimate_usage(const ModelRequest& request, const std::string& reply_text) {
    TokenUsage u;
    u.input_tokens = static_cast<std::int64_t>((request.prompt.size() + 3) / 4) +
                     85 * static_cast<std::int64_t>(request.images.size());
    u.output_tokens = static_cast<std::int64_t>((reply_text.size() + 3) / 4);
    return u;
}

// ---------------------------------------------------------------------------
// Per-sample token averages for static cost projection
// ---------------------------------------------------------------------------

enum class CostScenario { SingleImage, TwoImages, ThreeImages };

inline std::string to_token(CostScenario s) {
    switch (s) {
        case CostScenario::SingleImage: return "single";
        case CostScenario::TwoImages: return "multi2";
        case CostScenario::ThreeImages: return "multi3";
    }
    return "?";
}

struct CostProfile {
    TokenUsage vlm_per_10;  // measured tokens per 10 samples
    TokenUsage llm_per_10;

    TokenUsage total_per_10() const { return vlm_per_10 + llm_per_10; }
};

using CostProfileMap = std::map<std::pair<char, CostScenario>, CostProfile>;

/// Measured per-10-sample token counts for each pipeline/image scenario,
/// used by cost projection unless the run config overrides them.
inline const CostProfileMap& stock_cost_profiles() {
    static const CostProfileMap profiles = {
        {{'A', CostScenario::TwoImages},   {{9320, 14}, {0, 0}}},
        {{'A', CostScenario::ThreeImages}, {{15440, 15}, {0, 0}}},
        {{'A', CostScenario::SingleImage}, {{5240, 18}, {0, 0}}},
        {{'B', CostScenario::TwoImages},   {{9770, 660}, {1930, 11}}},
        {{'B', CostScenario::ThreeImages}, {{15890, 660}, {1930, 12}}},
        {{'B', CostScenario::SingleImage}, {{5690, 608}, {1904, 18}}},
    };
    return profiles;
}

}  // namespace firescope
