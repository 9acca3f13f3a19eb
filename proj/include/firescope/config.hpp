#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "json.hpp"

#include "firescope/errors.hpp"
#include "firescope/http_provider.hpp"
#include "firescope/indicators.hpp"
#include "firescope/mock_provider.hpp"
#include "firescope/pipeline_b.hpp"
#include "firescope/provider.hpp"

namespace firescope {

/// Everything a run needs, loaded from one JSON file and validated up front
/// so misconfiguration fails before the first record is touched.
struct RunConfig {
    // provider
    std::string provider_type = "simulated";  // simulated | mock | http
    std::string base_url;
    std::string api_key_env = "FIRESCOPE_API_KEY";
    std::string api_key;  // resolved from the environment at load time
    std::string mock_default_text = "No Damage";
    int rate_limit_rpm = 0;
    int connect_timeout_s = 10;
    int read_timeout_s = 120;

    // models
    std::string vlm_model = "gpt-4o";
    std::string llm_model = "gpt-4o";

    // decoding defaults per stage
    Decoding direct{0.5, 10};
    Decoding stage1{0.1, 300};
    Decoding stage2{0.1, 10};

    // pricing
    CostModel cost{Decimal::parse("2.5e-6"), Decimal::parse("1.0e-5")};
    /// Per-10-sample token averages used by cost projection; stock values
    /// unless overridden per (pipeline, scenario).
    CostProfileMap cost_profiles = stock_cost_profiles();

    // execution
    int parallelism = 4;
    RetryPolicy retry;
    std::string indicator_library = "appendix-full";  // preset name or file path
    bool stage2_with_images = false;
    std::uint64_t seed = 0;

    static RunConfig defaults() { return RunConfig{}; }

    static RunConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        return from_json(j, std::filesystem::path(path).parent_path());
    }

    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
        RunConfig c;
        try {
            if (j.contains("provider")) {
                const auto& p = j["provider"];
                c.provider_type = p.value("type", c.provider_type);
                c.base_url = p.value("base_url", c.base_url);
                c.api_key_env = p.value("api_key_env", c.api_key_env);
                c.mock_default_text = p.value("default_text", c.mock_default_text);
                c.rate_limit_rpm = p.value("rate_limit_rpm", c.rate_limit_rpm);
                c.connect_timeout_s = p.value("connect_timeout_s", c.connect_timeout_s);
                c.read_timeout_s = p.value("read_timeout_s", c.read_timeout_s);
            }
            if (j.contains("models")) {
                c.vlm_model = j["models"].value("vlm", c.vlm_model);
                c.llm_model = j["models"].value("llm", c.llm_model);
            }
            if (j.contains("decoding")) {
                auto read_decoding = [&j](const char* stage, Decoding& d) {
                    if (!j["decoding"].contains(stage)) return;
                    const auto& s = j["decoding"][stage];
                    d.temperature = s.value("temperature", d.temperature);
                    d.max_tokens = s.value("max_tokens", d.max_tokens);
                };
                read_decoding("direct", c.direct);
                read_decoding("stage1", c.stage1);
                read_decoding("stage2", c.stage2);
            }
            if (j.contains("cost")) {
                const auto& k = j["cost"];
                if (k.contains("input_price_per_token")) {
                    c.cost.input_price_per_token =
                        Decimal::parse(k["input_price_per_token"].get<std::string>());
                }
                if (k.contains("output_price_per_token")) {
                    c.cost.output_price_per_token =
                        Decimal::parse(k["output_price_per_token"].get<std::string>());
                }
            }
            if (j.contains("cost_profiles")) {
                for (auto pit = j["cost_profiles"].begin(); pit != j["cost_profiles"].end();
                     ++pit) {
                    if (pit.key() != "A" && pit.key() != "B") {
                        throw ConfigError("cost_profiles pipeline must be A or B");
                    }
                    const char pipeline = pit.key()[0];
                    for (auto sit = pit.value().begin(); sit != pit.value().end(); ++sit) {
                        CostScenario scenario;
                        if (sit.key() == "single") scenario = CostScenario::SingleImage;
                        else if (sit.key() == "multi2") scenario = CostScenario::TwoImages;
                        else if (sit.key() == "multi3") scenario = CostScenario::ThreeImages;
                        else throw ConfigError("cost_profiles scenario must be single, multi2 or multi3");
                        CostProfile profile;
                        profile.vlm_per_10 = {sit.value().value("vlm_input", 0),
                                              sit.value().value("vlm_output", 0)};
                        profile.llm_per_10 = {sit.value().value("llm_input", 0),
                                              sit.value().value("llm_output", 0)};
                        c.cost_profiles[{pipeline, scenario}] = profile;
                    }
                }
            }
            if (j.contains("retry")) {
                const auto& r = j["retry"];
                c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
                c.retry.backoff_base_ms = r.value("backoff_base_ms", c.retry.backoff_base_ms);
                if (r.contains("retry_on")) {
                    c.retry.retry_on.clear();
                    for (const auto& name : r["retry_on"]) {
                        const std::string n = name.get<std::string>();
                        if (n == "rate-limit") c.retry.retry_on.insert(ErrorClass::RateLimit);
                        else if (n == "transient-network")
                            c.retry.retry_on.insert(ErrorClass::TransientNetwork);
                        else if (n == "unparseable-output")
                            c.retry.retry_on.insert(ErrorClass::UnparseableOutput);
                        else throw ConfigError("unknown retry_on class: " + n);
                    }
                }
            }
            c.parallelism = j.value("parallelism", c.parallelism);
            c.indicator_library = j.value("indicator_library", c.indicator_library);
            c.stage2_with_images = j.value("stage2_with_images", c.stage2_with_images);
            c.seed = j.value("seed", c.seed);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad config field: ") + e.what());
        }

        // Relative library paths resolve against the config file location.
        if (c.indicator_library != "alg2-min" && c.indicator_library != "appendix-full") {
            std::filesystem::path lib(c.indicator_library);
            if (lib.is_relative()) lib = base_dir / lib;
            c.indicator_library = lib.string();
        }
        c.validate();
        return c;
    }

    void validate() {
        if (provider_type != "simulated" && provider_type != "mock" && provider_type != "http") {
            throw ConfigError("provider.type must be simulated, mock or http");
        }
        if (provider_type == "http") {
            if (base_url.empty()) throw ConfigError("http provider needs provider.base_url");
            const char* key = std::getenv(api_key_env.c_str());
            if (!key || !*key) {
                throw ConfigError("environment variable " + api_key_env +
                                  " is not set (required by provider.type=http)");
            }
            api_key = key;
        }
        if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
        if (retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
        if (indicator_library != "alg2-min" && indicator_library != "appendix-full" &&
            !std::filesystem::exists(indicator_library)) {
            throw ConfigError("indicator library file does not exist: " + indicator_library);
        }
        direct_check(direct, "direct");
        direct_check(stage1, "stage1");
        direct_check(stage2, "stage2");
    }

    IndicatorLibrary load_library() const { return IndicatorLibrary::resolve(indicator_library); }

    /// Transport-level provider; callers wrap it in RetryingProvider.
    std::unique_ptr<ChatProvider> make_provider() const {
        if (provider_type == "simulated") return std::make_unique<SimulatedProvider>();
        if (provider_type == "mock") return std::make_unique<MockProvider>(mock_default_text);
        HttpProviderConfig http;
        http.base_url = base_url;
        http.api_key = api_key;
        http.requests_per_minute = rate_limit_rpm;
        http.connect_timeout_s = connect_timeout_s;
        http.read_timeout_s = read_timeout_s;
        return std::make_unique<HttpChatProvider>(http);
    }

    PipelineAOptions pipeline_a_options() const {
        PipelineAOptions o;
        o.model_id = vlm_model;
        o.decoding = direct;
        o.retry_unparseable = retry.retries(ErrorClass::UnparseableOutput);
        return o;
    }

    PipelineBOptions pipeline_b_options() const {
        PipelineBOptions o;
        o.vlm_model = vlm_model;
        o.llm_model = llm_model;
        o.stage1 = stage1;
        o.stage2 = stage2;
        o.retry_unparseable = retry.retries(ErrorClass::UnparseableOutput);
        o.stage2_with_images = stage2_with_images;
        return o;
    }

private:
    static void direct_check(const Decoding& d, const std::string& stage) {
        if (d.temperature < 0.0 || d.temperature > 2.0) {
            throw ConfigError("decoding." + stage + ".temperature must lie in [0, 2]");
        }
        if (d.max_tokens < 1) {
            throw ConfigError("decoding." + stage + ".max_tokens must be >= 1");
        }
    }
};

}  // namespace firescope
