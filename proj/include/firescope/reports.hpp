#pragma once

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "firescope/decimal.hpp"
#include "firescope/manifest.hpp"
#include "firescope/runlog.hpp"
#include "firescope/similarity.hpp"
#include "firescope/stats.hpp"

namespace firescope {

// ---------------------------------------------------------------------------
// Evaluation: run log + manifest -> metrics
// ---------------------------------------------------------------------------

struct EvaluationArtifacts {
    EvaluationReport report;
    ConfusionMatrix confusion;
    std::size_t evaluated = 0;
    std::size_t excluded = 0;  // error entries, surfaced in the report header
    std::string pipeline;
    std::string mode;
};

/// Joins predictions to aggregated ground truth. Every log entry must have a
/// manifest record; entries that errored are excluded and counted.
inline EvaluationArtifacts evaluate_runlog(const std::vector<RunLogEntry>& entries,
                                           const DatasetManifest& manifest) {
    std::map<std::string, const HouseholdRecord*> by_id;
    for (const auto& r : manifest.records) by_id[r.id] = &r;

    EvaluationArtifacts art;
    std::vector<std::string> missing;
    for (const auto& e : entries) {
        const auto it = by_id.find(e.id);
        if (it == by_id.end()) {
            missing.push_back(e.id);
            continue;
        }
        if (!art.pipeline.empty() && art.pipeline != e.pipeline) {
            throw JoinError("run log mixes pipelines " + art.pipeline + " and " + e.pipeline);
        }
        art.pipeline = e.pipeline;
        art.mode = to_token(e.mode);
        if (!e.error.empty() || !e.label) {
            ++art.excluded;
            continue;
        }
        art.confusion.add(aggregate_category(it->second->ground_truth), *e.label);
        ++art.evaluated;
    }
    if (!missing.empty()) {
        std::string ids;
        for (std::size_t i = 0; i < missing.size() && i < 5; ++i) ids += " " + missing[i];
        throw JoinError(std::to_string(missing.size()) +
                        " log ids missing from the manifest:" + ids);
    }
    art.report = summarize(art.confusion);
    return art;
}

namespace detail {

inline std::string fixed3(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(3) << v;
    return out.str();
}

inline std::string pct1(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << (v * 100.0) << "%";
    return out.str();
}

}  // namespace detail

inline nlohmann::ordered_json evaluation_to_json(const EvaluationArtifacts& art) {
    nlohmann::ordered_json j;
    j["kind"] = "evaluation";
    j["pipeline"] = art.pipeline;
    j["mode"] = art.mode;
    j["evaluated"] = art.evaluated;
    j["excluded"] = art.excluded;
    j["accuracy"] = art.report.accuracy;
    j["micro_f1"] = art.report.micro_f1;
    j["macro_f1"] = art.report.macro_f1;
    nlohmann::ordered_json per_class;
    for (AssessmentLabel l : kAllLabels) {
        const auto& m = art.report.per_class.at(l);
        const auto& cc = art.report.pct_correct.at(l);
        per_class[to_token(l)] = {{"precision", m.precision}, {"recall", m.recall},
                                  {"f1", m.f1},               {"support", m.support},
                                  {"correct", cc.correct},    {"degenerate", m.degenerate}};
    }
    j["per_class"] = per_class;
    nlohmann::ordered_json confusion = nlohmann::ordered_json::array();
    for (AssessmentLabel t : kAllLabels) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (AssessmentLabel p : kAllLabels) row.push_back(art.confusion.at(t, p));
        confusion.push_back(row);
    }
    j["confusion"] = confusion;
    j["labels"] = {"no_damage", "affected", "destroyed"};
    return j;
}

/// Metrics table mirroring the published classification-metrics layout.
inline std::string render_metrics_table(const EvaluationArtifacts& art) {
    std::ostringstream out;
    out << "Classification metrics (pipeline " << art.pipeline << ", " << art.mode
        << " view)\n";
    out << "  evaluated: " << art.evaluated << "  excluded: " << art.excluded << "\n\n";
    out << std::left << std::setw(28) << "Metrics" << "Value\n";
    out << std::left << std::setw(28) << "Accuracy" << detail::fixed3(art.report.accuracy)
        << "\n";
    out << std::left << std::setw(28) << "Micro-Average F1 Score"
        << detail::fixed3(art.report.micro_f1) << "\n";
    out << std::left << std::setw(28) << "Macro-Average F1 Score"
        << detail::fixed3(art.report.macro_f1) << "\n";
    for (AssessmentLabel l : kAllLabels) {
        const auto& m = art.report.per_class.at(l);
        out << to_display_string(l) << "\n";
        out << "  " << std::left << std::setw(26) << "Precision" << detail::fixed3(m.precision)
            << "\n";
        out << "  " << std::left << std::setw(26) << "Recall" << detail::fixed3(m.recall)
            << "\n";
        out << "  " << std::left << std::setw(26) << "F1 Score" << detail::fixed3(m.f1)
            << "\n";
    }
    return out.str();
}

/// Percentage-of-correctly-classified table ("97.4% (151/155)" style).
inline std::string render_correct_table(const EvaluationArtifacts& art) {
    std::ostringstream out;
    out << std::left << std::setw(12) << "Category" << "Correctly classified\n";
    for (AssessmentLabel l : kAllLabels) {
        const auto& cc = art.report.pct_correct.at(l);
        const double frac =
            cc.total == 0 ? 0.0
                          : static_cast<double>(cc.correct) / static_cast<double>(cc.total);
        out << std::left << std::setw(12) << to_display_string(l) << detail::pct1(frac) << " ("
            << cc.correct << "/" << cc.total << ")\n";
    }
    return out.str();
}

inline std::string confusion_to_csv(const ConfusionMatrix& cm) {
    std::ostringstream out;
    out << "truth\\prediction,no_damage,affected,destroyed\n";
    for (AssessmentLabel t : kAllLabels) {
        out << to_token(t);
        for (AssessmentLabel p : kAllLabels) out << "," << cm.at(t, p);
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Paired comparison of two run logs
// ---------------------------------------------------------------------------

struct McNemarTable {
    std::map<AssessmentLabel, McNemarResult> per_category;
    std::map<AssessmentLabel, std::int64_t> multi_image_households;
    std::size_t paired_records = 0;
    std::size_t excluded_pairs = 0;  // pairs where either side errored
    McNemarMethod method = McNemarMethod::ContinuityCorrected;
};

/// Per-category paired tests between two runs over the same manifest, plus
/// the count of multi-image households per category for context.
inline McNemarTable mcnemar_runlogs(const std::vector<RunLogEntry>& first,
                                    const std::vector<RunLogEntry>& second,
                                    const DatasetManifest& manifest,
                                    McNemarMethod method = McNemarMethod::ContinuityCorrected) {
    std::map<std::string, const RunLogEntry*> second_by_id;
    for (const auto& e : second) second_by_id[e.id] = &e;
    if (second_by_id.size() != second.size()) {
        throw PairingError("second run log repeats household ids");
    }
    std::map<std::string, const HouseholdRecord*> by_id;
    for (const auto& r : manifest.records) by_id[r.id] = &r;

    std::set<std::string> first_ids;
    for (const auto& e : first) {
        if (!first_ids.insert(e.id).second) {
            throw PairingError("first run log repeats household ids");
        }
    }
    if (first_ids.size() != second_by_id.size()) {
        throw PairingError("run logs cover " + std::to_string(first_ids.size()) + " vs " +
                           std::to_string(second_by_id.size()) + " records");
    }

    McNemarTable table;
    table.method = method;
    std::vector<AssessmentLabel> truths;
    std::vector<AssessmentLabel> preds_first;
    std::vector<AssessmentLabel> preds_second;
    for (const auto& e : first) {
        const auto other = second_by_id.find(e.id);
        if (other == second_by_id.end()) {
            throw PairingError("record " + e.id + " missing from the second run log");
        }
        const auto rec = by_id.find(e.id);
        if (rec == by_id.end()) {
            throw PairingError("record " + e.id + " missing from the manifest");
        }
        if (!e.label || !other->second->label) {
            ++table.excluded_pairs;
            continue;
        }
        truths.push_back(aggregate_category(rec->second->ground_truth));
        preds_first.push_back(*e.label);
        preds_second.push_back(*other->second->label);
        ++table.paired_records;
    }

    for (AssessmentLabel cat : kAllLabels) {
        table.per_category[cat] = mcnemar_category(truths, preds_first, preds_second, cat, method);
        table.multi_image_households[cat] = 0;
    }
    for (const auto& id : first_ids) {
        const auto rec = by_id.find(id);
        if (rec != by_id.end() && rec->second->images.size() >= 2) {
            ++table.multi_image_households[aggregate_category(rec->second->ground_truth)];
        }
    }
    return table;
}

inline nlohmann::ordered_json mcnemar_to_json(const McNemarTable& table) {
    nlohmann::ordered_json j;
    j["kind"] = "mcnemar";
    j["method"] = table.method == McNemarMethod::ContinuityCorrected ? "continuity_corrected"
                                                                     : "exact_binomial";
    j["paired_records"] = table.paired_records;
    j["excluded_pairs"] = table.excluded_pairs;
    nlohmann::ordered_json per_category;
    for (AssessmentLabel l : kAllLabels) {
        const auto& r = table.per_category.at(l);
        nlohmann::ordered_json cat;
        cat["cells"] = {{"both_correct", r.cells.both_correct},
                        {"only_first_correct", r.cells.only_first_correct},
                        {"only_second_correct", r.cells.only_second_correct},
                        {"both_wrong", r.cells.both_wrong}};
        if (r.statistic) {
            cat["statistic"] = *r.statistic;
        } else {
            cat["statistic"] = nullptr;
        }
        cat["p_value"] = r.p_value;
        cat["degenerate"] = r.degenerate;
        per_category[to_token(l)] = cat;
    }
    j["per_category"] = per_category;
    nlohmann::ordered_json multi;
    for (AssessmentLabel l : kAllLabels) {
        multi[to_token(l)] = table.multi_image_households.at(l);
    }
    j["multi_image_households"] = multi;
    return j;
}

inline std::string render_mcnemar_table(const McNemarTable& table, const std::string& title) {
    std::ostringstream out;
    out << title << "\n";
    out << "  paired: " << table.paired_records << "  excluded: " << table.excluded_pairs
        << "  method: "
        << (table.method == McNemarMethod::ContinuityCorrected ? "continuity-corrected"
                                                               : "exact binomial")
        << "\n\n";
    out << std::left << std::setw(12) << "Category" << std::setw(22) << "b / c (first/second)"
        << std::setw(14) << "Statistic" << "p-value\n";
    for (AssessmentLabel l : kAllLabels) {
        const auto& r = table.per_category.at(l);
        std::ostringstream bc;
        bc << r.cells.only_first_correct << " / " << r.cells.only_second_correct;
        std::ostringstream stat;
        if (r.statistic) {
            stat << std::fixed << std::setprecision(2) << *r.statistic;
        } else {
            stat << (table.method == McNemarMethod::ExactBinomial && !r.degenerate ? "exact"
                                                                                   : "n/a");
        }
        std::ostringstream p;
        if (r.p_value < 1e-4 && r.p_value > 0.0) {
            p << std::scientific << std::setprecision(2) << r.p_value;
        } else {
            p << std::fixed << std::setprecision(4) << r.p_value;
        }
        out << std::left << std::setw(12) << to_display_string(l) << std::setw(22) << bc.str()
            << std::setw(14) << stat.str() << p.str() << "\n";
    }
    out << "\nHouseholds with multiple images\n";
    for (AssessmentLabel l : kAllLabels) {
        out << std::left << std::setw(12) << to_display_string(l)
            << table.multi_image_households.at(l) << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Cost estimation
// ---------------------------------------------------------------------------

struct CostEstimate {
    char pipeline = 'A';
    CostScenario scenario = CostScenario::SingleImage;
    std::size_t records = 0;
    TokenUsage tokens_per_10;
    Decimal price_per_10;
    Decimal price_per_sample;
    Decimal total;
};

inline CostEstimate estimate_run_cost(std::size_t records, char pipeline, CostScenario scenario,
                                      const CostModel& model,
                                      const CostProfileMap& profiles = stock_cost_profiles()) {
    const auto it = profiles.find({pipeline, scenario});
    if (it == profiles.end()) throw Error("no cost profile for that scenario");
    CostEstimate est;
    est.pipeline = pipeline;
    est.scenario = scenario;
    est.records = records;
    est.tokens_per_10 = it->second.total_per_10();
    est.price_per_10 = cost_of(est.tokens_per_10, model);
    est.price_per_sample = est.price_per_10.times_ratio(1, 10);
    est.total = est.price_per_10.times_ratio(static_cast<std::int64_t>(records), 10);
    return est;
}

inline std::string render_cost_estimate(const CostEstimate& est) {
    std::ostringstream out;
    out << "Projected cost: pipeline " << est.pipeline << ", " << to_token(est.scenario)
        << ", " << est.records << " records\n";
    out << "  tokens per 10 samples: " << est.tokens_per_10.input_tokens << " in, "
        << est.tokens_per_10.output_tokens << " out\n";
    out << "  price per 10 samples:  $" << est.price_per_10.to_string() << "\n";
    out << "  price per sample:      $" << est.price_per_sample.to_string() << "\n";
    out << "  projected total:       $" << est.total.to_string() << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Similarity report rendering
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json similarity_to_json(const SimilarityReport& report,
                                                 const std::vector<CategoryMerge>& merges,
                                                 double threshold) {
    nlohmann::ordered_json j;
    j["kind"] = "similarity";
    j["threshold"] = threshold;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : report.pairs) {
        rows.push_back({{"category_a", to_token(row.category_a)},
                        {"category_b", to_token(row.category_b)},
                        {"mean_cosine", row.mean_cosine},
                        {"n_pairs", row.n_pairs}});
    }
    j["pairs"] = rows;
    nlohmann::ordered_json merged = nlohmann::ordered_json::array();
    for (const auto& m : merges) {
        merged.push_back({{"from", to_token(m.from)}, {"into", to_token(m.into)}});
    }
    j["recommended_merges"] = merged;
    return j;
}

inline std::string render_similarity_table(const SimilarityReport& report,
                                           const std::vector<CategoryMerge>& merges,
                                           double threshold) {
    std::ostringstream out;
    out << std::left << std::setw(28) << "Category" << std::setw(16) << "Cosine Score"
        << "Pairs\n";
    for (const auto& row : report.pairs) {
        std::string name = row.category_a == row.category_b
                               ? "Within " + to_token(row.category_a)
                               : to_token(row.category_a) + " vs " + to_token(row.category_b);
        out << std::left << std::setw(28) << name << std::setw(16)
            << detail::fixed3(row.mean_cosine) << row.n_pairs << "\n";
    }
    out << "\n";
    if (merges.empty()) {
        out << "No category merge recommended at threshold " << detail::fixed3(threshold)
            << ".\n";
    } else {
        out << "Recommended merges at threshold " << detail::fixed3(threshold) << ":";
        for (const auto& m : merges) {
            out << " " << to_token(m.from) << "->" << to_token(m.into);
        }
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Verification: re-derive report numbers from the logs
// ---------------------------------------------------------------------------

struct VerifyOutcome {
    std::size_t values_checked = 0;
    std::vector<std::string> diffs;

    bool clean() const { return diffs.empty(); }
};

namespace detail {

inline void diff_json(const nlohmann::json& expected, const nlohmann::json& actual,
                      const std::string& path, VerifyOutcome& out) {
    if (expected.is_object() && actual.is_object()) {
        for (auto it = expected.begin(); it != expected.end(); ++it) {
            if (!actual.contains(it.key())) {
                out.diffs.push_back(path + "/" + it.key() + ": missing from stored report");
                continue;
            }
            diff_json(it.value(), actual[it.key()], path + "/" + it.key(), out);
        }
        for (auto it = actual.begin(); it != actual.end(); ++it) {
            if (!expected.contains(it.key())) {
                out.diffs.push_back(path + "/" + it.key() + ": not re-derivable from the log");
            }
        }
        return;
    }
    if (expected.is_array() && actual.is_array()) {
        if (expected.size() != actual.size()) {
            out.diffs.push_back(path + ": array size " + std::to_string(actual.size()) +
                                " != " + std::to_string(expected.size()));
            return;
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            diff_json(expected[i], actual[i], path + "[" + std::to_string(i) + "]", out);
        }
        return;
    }
    ++out.values_checked;
    if (expected != actual) {
        out.diffs.push_back(path + ": stored " + actual.dump() + ", re-derived " +
                            expected.dump());
    }
}

}  // namespace detail

/// Re-derives an evaluation report from the run log and manifest, then diffs
/// it value-by-value against the stored report JSON.
inline VerifyOutcome verify_evaluation(const nlohmann::json& stored_report,
                                       const std::vector<RunLogEntry>& entries,
                                       const DatasetManifest& manifest) {
    const auto rederived = evaluation_to_json(evaluate_runlog(entries, manifest));
    VerifyOutcome out;
    detail::diff_json(rederived, stored_report, "", out);
    return out;
}

inline VerifyOutcome verify_mcnemar(const nlohmann::json& stored_report,
                                    const std::vector<RunLogEntry>& first,
                                    const std::vector<RunLogEntry>& second,
                                    const DatasetManifest& manifest) {
    McNemarMethod method = McNemarMethod::ContinuityCorrected;
    if (stored_report.contains("method") && stored_report["method"] == "exact_binomial") {
        method = McNemarMethod::ExactBinomial;
    }
    const auto rederived = mcnemar_to_json(mcnemar_runlogs(first, second, manifest, method));
    VerifyOutcome out;
    detail::diff_json(rederived, stored_report, "", out);
    return out;
}

}  // namespace firescope
