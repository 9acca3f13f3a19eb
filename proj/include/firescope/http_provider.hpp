#pragma once

#include <chrono>
#include <cstdlib>
#include <string>

#include "httplib.h"
#include "json.hpp"

#include "firescope/provider.hpp"

namespace firescope {

struct HttpProviderConfig {
    std::string base_url;                       // e.g. http://127.0.0.1:8080
    std::string path = "/v1/chat/completions";  // chat-completions endpoint
    std::string api_key;                        // sent as Bearer token when non-empty
    int connect_timeout_s = 10;
    int read_timeout_s = 120;
    int requests_per_minute = 0;  // 0 = unlimited
};

/// Chat-completions JSON-over-HTTP client. The request body interleaves one
/// text part with up to three base64 image parts inside a single user
/// message; the reply's choices[0].message.content and usage counts are
/// returned verbatim.
class HttpChatProvider : public ChatProvider {
public:
    explicit HttpChatProvider(HttpProviderConfig config)
        : config_(std::move(config)), limiter_(config_.requests_per_minute) {
        if (config_.base_url.empty()) throw ConfigError("provider base_url is empty");
    }

    static nlohmann::json request_body(const ModelRequest& request) {
        nlohmann::json content = nlohmann::json::array();
        content.push_back({{"type", "text"}, {"text", request.prompt}});
        for (const auto& img : request.images) {
            content.push_back({{"type", "image"},
                               {"media_type", img.media_type},
                               {"data", img.payload_b64}});
        }
        return {{"model", request.model_id},
                {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})},
                {"max_tokens", request.max_tokens},
                {"temperature", request.temperature}};
    }

    ModelResponse complete(const ModelRequest& request) override {
        request.validate();
        limiter_.acquire();

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.connect_timeout_s, 0);
        client.set_read_timeout(config_.read_timeout_s, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }

        const auto started = std::chrono::steady_clock::now();
        auto result = client.Post(config_.path, headers, request_body(request).dump(),
                                  "application/json");
        const auto elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::steady_clock::now() - started)
                                    .count();

        if (!result) {
            const auto err = result.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                err == httplib::Error::Write) {
                throw TimeoutError(httplib::to_string(err));
            }
            throw TransportError(httplib::to_string(err));
        }
        if (result->status == 429) {
            int retry_after = 0;
            if (result->has_header("Retry-After")) {
                retry_after = std::atoi(result->get_header_value("Retry-After").c_str());
            }
            throw RateLimited(retry_after);
        }
        if (result->status < 200 || result->status >= 300) {
            throw EndpointError(result->status, result->body);
        }

        nlohmann::json body;
        try {
            body = nlohmann::json::parse(result->body);
        } catch (const nlohmann::json::exception& e) {
            throw EndpointError(result->status, std::string("unparseable body: ") + e.what());
        }

        ModelResponse resp;
        resp.latency_ms = elapsed_ms;
        try {
            const auto& choice = body.at("choices").at(0);
            resp.text = choice.at("message").at("content").get<std::string>();
            if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
                resp.raw_finish_reason = choice["finish_reason"].get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw EndpointError(result->status, std::string("missing choices: ") + e.what());
        }
        if (body.contains("usage") && body["usage"].is_object() &&
            body["usage"].contains("prompt_tokens") &&
            body["usage"].contains("completion_tokens")) {
            resp.usage.input_tokens = body["usage"]["prompt_tokens"].get<std::int64_t>();
            resp.usage.output_tokens = body["usage"]["completion_tokens"].get<std::int64_t>();
        } else {
            resp.usage = estimate_usage(request, resp.text);
            resp.usage_estimated = true;
        }
        return resp;
    }

private:
    HttpProviderConfig config_;
    RateLimiter limiter_;
};

}  // namespace firescope
