// firescope: wildfire damage assessment pipelines over ground-level imagery,
// with model-free evaluation and audit tooling on top of append-only run logs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "firescope/config.hpp"
#include "firescope/manifest.hpp"
#include "firescope/reports.hpp"
#include "firescope/runner.hpp"

namespace fs = std::filesystem;
using namespace firescope;

namespace {

void write_text(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

RunConfig load_config_or_default(const std::string& path) {
    return path.empty() ? RunConfig::defaults() : RunConfig::load(path);
}

int cmd_ingest(const std::string& manifest_path, bool as_json) {
    const auto manifest = load_manifest(manifest_path);
    std::map<RawDamageCategory, int> per_category;
    std::map<AssessmentLabel, int> aggregated;
    std::size_t multi_image = 0;
    for (const auto& r : manifest.records) {
        per_category[r.ground_truth]++;
        aggregated[aggregate_category(r.ground_truth)]++;
        if (r.images.size() >= 2) ++multi_image;
    }
    if (as_json) {
        nlohmann::ordered_json j;
        j["records"] = manifest.records.size();
        j["multi_image_households"] = multi_image;
        for (auto c : kAllRawCategories) j["per_category"][to_token(c)] = per_category[c];
        for (auto l : kAllLabels) j["aggregated"][to_token(l)] = aggregated[l];
        j["warnings"] = manifest.warnings;
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "manifest: " << manifest_path << "\n";
    std::cout << "records: " << manifest.records.size() << " (" << multi_image
              << " with multiple images)\n";
    std::cout << "per category:";
    for (auto c : kAllRawCategories) std::cout << " " << to_token(c) << "=" << per_category[c];
    std::cout << "\naggregated:  ";
    for (auto l : kAllLabels) std::cout << " " << to_token(l) << "=" << aggregated[l];
    std::cout << "\n";
    for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_sample(const std::string& manifest_path, const std::string& out_path,
               std::uint64_t seed, std::size_t total,
               const std::vector<std::string>& quota_args) {
    const auto manifest = load_manifest(manifest_path);
    SamplePlan plan;
    plan.seed = seed;
    plan.total = total;
    if (!quota_args.empty()) {
        std::map<RawDamageCategory, std::size_t> quotas;
        for (const auto& arg : quota_args) {
            const auto eq = arg.find('=');
            if (eq == std::string::npos) throw Error("quota must look like category=count");
            const auto cat = raw_category_from_token(arg.substr(0, eq));
            if (!cat) throw Error("unknown category in quota: " + arg);
            quotas[*cat] = std::stoul(arg.substr(eq + 1));
        }
        plan.quotas = quotas;
    }
    const auto sampled = draw_sample(manifest, plan);
    save_manifest(sampled, out_path);
    std::cout << "sampled " << sampled.records.size() << " of " << manifest.records.size()
              << " records -> " << out_path << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& manifest_path,
            const std::string& pipeline_arg, const std::string& mode_arg,
            const std::string& out_path) {
    const auto config = load_config_or_default(config_path);
    const auto manifest = load_manifest(manifest_path);
    for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";

    if (pipeline_arg != "A" && pipeline_arg != "B") throw Error("--pipeline must be A or B");
    const auto mode = view_mode_from_token(mode_arg);
    if (!mode) throw Error("--mode must be single or multi");

    auto transport = config.make_provider();
    RetryingProvider provider(*transport, config.retry);

    const auto started = std::chrono::steady_clock::now();
    auto progress = [&](std::size_t done, std::size_t total, const TokenUsage& usage) {
        if (done % 25 != 0 && done != total) return;
        std::cerr << "\r" << done << "/" << total << " records, " << usage.input_tokens
                  << " in / " << usage.output_tokens << " out tokens, est. cost $"
                  << cost_of(usage, config.cost).to_string() << std::flush;
    };
    const auto outcome =
        run_pipeline(manifest, config, pipeline_arg[0], *mode, provider, progress);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    std::cerr << "\n";

    write_runlog(outcome.entries, out_path);
    std::cout << "pipeline " << pipeline_arg << " (" << mode_arg << ") over "
              << outcome.entries.size() << " records in " << elapsed << " ms\n";
    std::cout << "errors: " << outcome.errored << "\n";
    std::cout << "tokens: " << outcome.total_usage.input_tokens << " in / "
              << outcome.total_usage.output_tokens << " out\n";
    std::cout << "cost:   $" << cost_of(outcome.total_usage, config.cost).to_string() << "\n";
    std::cout << "log:    " << out_path << "\n";
    return 0;
}

int cmd_evaluate(const std::string& runlog_path, const std::string& manifest_path,
                 const std::string& out_dir) {
    const auto entries = read_runlog(runlog_path);
    const auto manifest = load_manifest(manifest_path);
    const auto art = evaluate_runlog(entries, manifest);

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_text(dir / "report.json", evaluation_to_json(art).dump(2) + "\n");
    write_text(dir / "report.txt",
               render_metrics_table(art) + "\n" + render_correct_table(art));
    write_text(dir / "confusion.csv", confusion_to_csv(art.confusion));

    std::cout << render_metrics_table(art) << "\n" << render_correct_table(art);
    std::cout << "\nwrote " << (dir / "report.json").string() << ", report.txt, confusion.csv\n";
    return 0;
}

int cmd_mcnemar(const std::string& first_path, const std::string& second_path,
                const std::string& manifest_path, bool exact, const std::string& out_dir) {
    const auto first = read_runlog(first_path);
    const auto second = read_runlog(second_path);
    const auto manifest = load_manifest(manifest_path);
    const auto method =
        exact ? McNemarMethod::ExactBinomial : McNemarMethod::ContinuityCorrected;
    const auto table = mcnemar_runlogs(first, second, manifest, method);

    const std::string title = "McNemar paired test: " + fs::path(first_path).filename().string() +
                              " (first) vs " + fs::path(second_path).filename().string() +
                              " (second)";
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_text(dir / "mcnemar.json", mcnemar_to_json(table).dump(2) + "\n");
    write_text(dir / "mcnemar.txt", render_mcnemar_table(table, title));
    std::cout << render_mcnemar_table(table, title);
    std::cout << "\nwrote " << (dir / "mcnemar.json").string() << ", mcnemar.txt\n";
    return 0;
}

int cmd_similarity(const std::string& store_path, const std::string& manifest_path,
                   double threshold, const std::string& out_dir) {
    const auto store = EmbeddingStore::load(store_path);
    const auto manifest = load_manifest(manifest_path);

    std::map<RawDamageCategory, std::vector<std::string>> groups;
    for (const auto& r : manifest.records) {
        for (const auto& img : r.images) groups[r.ground_truth].push_back(img.uri);
    }

    SimilarityReport report;
    using C = RawDamageCategory;
    const std::vector<std::pair<C, C>> wanted = {{C::Affected, C::Minor},
                                                 {C::Affected, C::Major},
                                                 {C::Affected, C::Affected},
                                                 {C::Destroyed, C::Destroyed},
                                                 {C::NoDamage, C::NoDamage}};
    for (const auto& [a, b] : wanted) {
        report.pairs.push_back(category_similarity(store, groups, a, b));
    }
    const auto merges = aggregation_recommendation(report, threshold);

    std::cout << render_similarity_table(report, merges, threshold);
    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        fs::create_directories(dir);
        write_text(dir / "similarity.json",
                   similarity_to_json(report, merges, threshold).dump(2) + "\n");
        write_text(dir / "similarity.txt", render_similarity_table(report, merges, threshold));
        std::cout << "\nwrote " << (dir / "similarity.json").string() << ", similarity.txt\n";
    }
    return 0;
}

int cmd_cost_estimate(const std::string& config_path, std::size_t records,
                      const std::string& manifest_path, const std::string& pipeline_arg,
                      const std::string& scenario_arg) {
    const auto config = load_config_or_default(config_path);
    if (!manifest_path.empty()) records = load_manifest(manifest_path).records.size();
    if (pipeline_arg != "A" && pipeline_arg != "B") throw Error("--pipeline must be A or B");
    CostScenario scenario;
    if (scenario_arg == "single") scenario = CostScenario::SingleImage;
    else if (scenario_arg == "multi2") scenario = CostScenario::TwoImages;
    else if (scenario_arg == "multi3") scenario = CostScenario::ThreeImages;
    else throw Error("--images must be single, multi2 or multi3");

    const auto est =
        estimate_run_cost(records, pipeline_arg[0], scenario, config.cost, config.cost_profiles);
    std::cout << render_cost_estimate(est);
    return 0;
}

int cmd_verify(const std::string& report_path, const std::string& runlog_path,
               const std::string& mcnemar_path, const std::string& second_path,
               const std::string& manifest_path) {
    const auto manifest = load_manifest(manifest_path);
    VerifyOutcome total;
    if (!report_path.empty()) {
        const auto outcome = verify_evaluation(read_json_file(report_path),
                                               read_runlog(runlog_path), manifest);
        total.values_checked += outcome.values_checked;
        total.diffs.insert(total.diffs.end(), outcome.diffs.begin(), outcome.diffs.end());
    }
    if (!mcnemar_path.empty()) {
        if (second_path.empty()) throw Error("--mcnemar verification needs --second");
        const auto outcome = verify_mcnemar(read_json_file(mcnemar_path),
                                            read_runlog(runlog_path), read_runlog(second_path),
                                            manifest);
        total.values_checked += outcome.values_checked;
        total.diffs.insert(total.diffs.end(), outcome.diffs.begin(), outcome.diffs.end());
    }
    if (report_path.empty() && mcnemar_path.empty()) {
        throw Error("nothing to verify: pass --report and/or --mcnemar");
    }
    std::cout << "verified " << total.values_checked << " values, " << total.diffs.size()
              << " diffs\n";
    for (const auto& d : total.diffs) std::cout << "  diff " << d << "\n";
    return total.clean() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"firescope: multi-view wildfire damage assessment pipelines"};
    app.require_subcommand(1);

    // ingest
    std::string in_manifest;
    bool ingest_json = false;
    auto* ingest = app.add_subcommand("ingest", "validate a manifest and summarize it");
    ingest->add_option("--manifest", in_manifest, "JSON-lines manifest")->required();
    ingest->add_flag("--json", ingest_json, "emit the summary as JSON");

    // sample
    std::string sample_out;
    std::uint64_t seed = 0;
    std::size_t total = 0;
    std::vector<std::string> quotas;
    auto* sample = app.add_subcommand("sample", "draw a reproducible sample");
    sample->add_option("--manifest", in_manifest, "JSON-lines manifest")->required();
    sample->add_option("--out", sample_out, "output manifest path")->required();
    sample->add_option("--seed", seed, "sampling seed")->required();
    sample->add_option("--total", total, "sample size")->required();
    sample->add_option("--quota", quotas, "per-category quota, e.g. no_damage=155");

    // run
    std::string config_path, pipeline = "A", mode = "single", out_path = "runlog.jsonl";
    auto* run = app.add_subcommand("run", "run a pipeline over a manifest");
    run->add_option("--config", config_path, "run config JSON");
    run->add_option("--manifest", in_manifest, "JSON-lines manifest")->required();
    run->add_option("--pipeline", pipeline, "A (direct) or B (indicator-guided)")->required();
    run->add_option("--mode", mode, "single or multi")->required();
    run->add_option("--out", out_path, "run log output path")->required();

    // evaluate
    std::string runlog_path, out_dir = ".";
    auto* evaluate = app.add_subcommand("evaluate", "metrics from a run log");
    evaluate->add_option("--runlog", runlog_path, "run log JSON-lines")->required();
    evaluate->add_option("--manifest", in_manifest, "JSON-lines manifest")->required();
    evaluate->add_option("--out", out_dir, "output directory");

    // mcnemar
    std::string second_path;
    bool exact = false;
    auto* mcnemar = app.add_subcommand("mcnemar", "paired test between two run logs");
    mcnemar->add_option("--first", runlog_path, "first run log")->required();
    mcnemar->add_option("--second", second_path, "second run log")->required();
    mcnemar->add_option("--manifest", in_manifest, "JSON-lines manifest")->required();
    mcnemar->add_flag("--exact", exact, "exact binomial instead of continuity-corrected");
    mcnemar->add_option("--out", out_dir, "output directory");

    // similarity
    std::string store_path;
    double threshold = 0.7;
    auto* similarity = app.add_subcommand("similarity", "category cosine-similarity report");
    similarity->add_option("--store", store_path, "embedding store JSON-lines")->required();
    similarity->add_option("--manifest", in_manifest, "JSON-lines manifest")->required();
    similarity->add_option("--threshold", threshold, "merge recommendation threshold");
    similarity->add_option("--out", out_dir, "output directory (optional)");

    // cost-estimate
    std::size_t records = 0;
    std::string scenario = "single";
    auto* cost = app.add_subcommand("cost-estimate", "project run cost from token averages");
    cost->add_option("--config", config_path, "run config JSON (for prices)");
    cost->add_option("--records", records, "record count");
    cost->add_option("--manifest", in_manifest, "count records from a manifest instead");
    cost->add_option("--pipeline", pipeline, "A or B")->required();
    cost->add_option("--images", scenario, "single, multi2 or multi3")->required();

    // verify
    std::string report_path, mcnemar_file;
    auto* verify = app.add_subcommand("verify", "re-derive report numbers from logs and diff");
    verify->add_option("--report", report_path, "evaluation report.json to verify");
    verify->add_option("--mcnemar", mcnemar_file, "mcnemar.json to verify");
    verify->add_option("--runlog", runlog_path, "run log (first log for --mcnemar)");
    verify->add_option("--second", second_path, "second run log for --mcnemar");
    verify->add_option("--manifest", in_manifest, "JSON-lines manifest")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(in_manifest, ingest_json);
        if (*sample) return cmd_sample(in_manifest, sample_out, seed, total, quotas);
        if (*run) return cmd_run(config_path, in_manifest, pipeline, mode, out_path);
        if (*evaluate) return cmd_evaluate(runlog_path, in_manifest, out_dir);
        if (*mcnemar) return cmd_mcnemar(runlog_path, second_path, in_manifest, exact, out_dir);
        if (*similarity) {
            return cmd_similarity(store_path, in_manifest, threshold,
                                  similarity->count("--out") ? out_dir : "");
        }
        if (*cost) return cmd_cost_estimate(config_path, records, in_manifest, pipeline,
                                            scenario);
        if (*verify) {
            return cmd_verify(report_path, runlog_path, mcnemar_file, second_path, in_manifest);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
