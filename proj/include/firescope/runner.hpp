#pragma once

#include <algorithm>
#include <atomic>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "firescope/config.hpp"
#include "firescope/manifest.hpp"
#include "firescope/pipeline_a.hpp"
#include "firescope/pipeline_b.hpp"
#include "firescope/provider.hpp"
#include "firescope/runlog.hpp"

namespace firescope {

struct RunOutcome {
    std::vector<RunLogEntry> entries;  // sorted by household id
    TokenUsage total_usage;
    std::size_t errored = 0;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total,
                                      const TokenUsage& usage_so_far)>;

namespace detail {

inline RunLogEntry run_one(const HouseholdRecord& record, char pipeline, ViewMode mode,
                           const IndicatorLibrary& library, ChatProvider& provider,
                           const RunConfig& config) {
    RunLogEntry entry;
    entry.id = record.id;
    entry.pipeline = std::string(1, pipeline);
    entry.mode = mode;
    try {
        if (pipeline == 'A') {
            const auto result = classify_direct(record, mode, provider,
                                                config.pipeline_a_options());
            entry.label = result.label;
            entry.usage = result.usage;
            entry.usage_estimated = result.usage_estimated;
            entry.attempts = result.attempts;
            entry.latency_ms = result.latency_ms;
            entry.raw_text = result.raw_text;
        } else {
            const auto result = classify_indicator_guided(record, mode, library, provider,
                                                          config.pipeline_b_options());
            entry.label = result.llm_label;
            entry.llm_label = result.llm_label;
            entry.rule_label = result.rule_label;
            entry.agreement = result.agreement;
            entry.indicators = result.indicators.values;
            entry.usage = result.usage;
            entry.usage_estimated = result.usage_estimated;
            entry.attempts = result.attempts;
            entry.latency_ms = result.latency_ms;
            entry.raw_stage1 = result.raw_stage1;
            entry.raw_stage2 = result.raw_stage2;
        }
    } catch (const Error& e) {
        entry.error = e.what();
    }
    entry.timestamp = iso8601_utc_now();
    return entry;
}

}  // namespace detail

/// Runs one pipeline over every manifest record. Records are processed in
/// parallel up to config.parallelism; per-record failures land in the log as
/// error entries rather than aborting the run. Output is sorted by id so
/// reruns are comparable.
inline RunOutcome run_pipeline(const DatasetManifest& manifest, const RunConfig& config,
                               char pipeline, ViewMode mode, ChatProvider& provider,
                               const ProgressFn& progress = {}) {
    if (pipeline != 'A' && pipeline != 'B') throw Error("pipeline must be A or B");
    const IndicatorLibrary library = config.load_library();

    const std::size_t n = manifest.records.size();
    std::vector<RunLogEntry> entries(n);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::atomic<std::int64_t> in_tokens{0};
    std::atomic<std::int64_t> out_tokens{0};

    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(config.parallelism, std::max<std::size_t>(n, 1)));
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            entries[i] =
                detail::run_one(manifest.records[i], pipeline, mode, library, provider, config);
            in_tokens.fetch_add(entries[i].usage.input_tokens);
            out_tokens.fetch_add(entries[i].usage.output_tokens);
            const std::size_t finished = done.fetch_add(1) + 1;
            if (progress) {
                progress(finished, n, TokenUsage{in_tokens.load(), out_tokens.load()});
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::sort(entries.begin(), entries.end(),
              [](const RunLogEntry& a, const RunLogEntry& b) { return a.id < b.id; });

    RunOutcome outcome;
    outcome.entries = std::move(entries);
    for (const auto& e : outcome.entries) {
        outcome.total_usage += e.usage;
        if (!e.error.empty()) ++outcome.errored;
    }
    return outcome;
}

}  // namespace firescope
