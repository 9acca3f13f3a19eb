#pragma once

#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "firescope/domain.hpp"
#include "firescope/errors.hpp"
#include "firescope/provider.hpp"

namespace firescope {

/// One (record, pipeline, mode) attempt. Carries everything needed to
/// re-derive reports without touching a model endpoint, including the full
/// indicator assignment for auditability.
struct RunLogEntry {
    std::string id;
    std::string pipeline;  // "A" | "B"
    ViewMode mode = ViewMode::SingleFront;
    std::optional<AssessmentLabel> label;  // absent when the record errored
    // two-stage extras
    std::optional<AssessmentLabel> llm_label;
    std::optional<AssessmentLabel> rule_label;
    std::optional<bool> agreement;
    std::optional<std::map<std::string, bool>> indicators;  // key -> answer
    TokenUsage usage;
    bool usage_estimated = false;
    int attempts = 0;
    std::int64_t latency_ms = 0;
    std::string error;  // empty on success
    std::string raw_text;
    std::string raw_stage1;
    std::string raw_stage2;
    std::string timestamp;  // ISO-8601 UTC; ignored by determinism diffs
};

inline std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::ordered_json runlog_entry_to_json(const RunLogEntry& e) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["pipeline"] = e.pipeline;
    j["mode"] = to_token(e.mode);
    if (e.label) j["label"] = to_token(*e.label);
    if (e.llm_label) j["llm_label"] = to_token(*e.llm_label);
    if (e.rule_label) j["rule_label"] = to_token(*e.rule_label);
    if (e.agreement) j["agreement"] = *e.agreement;
    if (e.indicators) j["indicators"] = *e.indicators;
    j["usage"] = {{"input_tokens", e.usage.input_tokens},
                  {"output_tokens", e.usage.output_tokens},
                  {"estimated", e.usage_estimated}};
    j["attempts"] = e.attempts;
    j["latency_ms"] = e.latency_ms;
    if (!e.error.empty()) j["error"] = e.error;
    if (!e.raw_text.empty()) j["raw_text"] = e.raw_text;
    if (!e.raw_stage1.empty()) j["raw_stage1"] = e.raw_stage1;
    if (!e.raw_stage2.empty()) j["raw_stage2"] = e.raw_stage2;
    j["ts"] = e.timestamp;
    return j;
}

inline RunLogEntry runlog_entry_from_json(const nlohmann::json& j, std::size_t line_no) {
    RunLogEntry e;
    try {
        e.id = j.at("id").get<std::string>();
        e.pipeline = j.at("pipeline").get<std::string>();
        const auto mode = view_mode_from_token(j.at("mode").get<std::string>());
        if (!mode) throw Error("unknown mode");
        e.mode = *mode;
        auto opt_label = [&j](const char* field) -> std::optional<AssessmentLabel> {
            if (!j.contains(field)) return std::nullopt;
            const auto l = label_from_token(j.at(field).get<std::string>());
            if (!l) throw Error(std::string("unknown label in ") + field);
            return l;
        };
        e.label = opt_label("label");
        e.llm_label = opt_label("llm_label");
        e.rule_label = opt_label("rule_label");
        if (j.contains("agreement")) e.agreement = j["agreement"].get<bool>();
        if (j.contains("indicators")) {
            e.indicators = j["indicators"].get<std::map<std::string, bool>>();
        }
        if (j.contains("usage")) {
            e.usage.input_tokens = j["usage"].value("input_tokens", 0);
            e.usage.output_tokens = j["usage"].value("output_tokens", 0);
            e.usage_estimated = j["usage"].value("estimated", false);
        }
        e.attempts = j.value("attempts", 0);
        e.latency_ms = j.value("latency_ms", 0);
        e.error = j.value("error", "");
        e.raw_text = j.value("raw_text", "");
        e.raw_stage1 = j.value("raw_stage1", "");
        e.raw_stage2 = j.value("raw_stage2", "");
        e.timestamp = j.value("ts", "");
    } catch (const std::exception& ex) {
        throw Error("run log line " + std::to_string(line_no) + ": " + ex.what());
    }
    return e;
}

inline void write_runlog(const std::vector<RunLogEntry>& entries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write run log: " + path);
    for (const auto& e : entries) {
        out << runlog_entry_to_json(e).dump() << "\n";
    }
}

inline std::vector<RunLogEntry> read_runlog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open run log: " + path);
    std::vector<RunLogEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("run log line " + std::to_string(line_no) + ": " + e.what());
        }
        entries.push_back(runlog_entry_from_json(j, line_no));
    }
    return entries;
}

}  // namespace firescope
