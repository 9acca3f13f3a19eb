#include "doctest.h"

#include "firescope/config.hpp"
#include "firescope/reports.hpp"
#include "firescope/runner.hpp"

#include <cstdlib>

#include "support/fixtures.hpp"
#include "support/temp_dir.hpp"

using namespace firescope;

namespace {

DatasetManifest six_record_fixture(const fstest::TempDir& dir) {
    DatasetManifest m;
    using RC = RawDamageCategory;
    m.records.push_back(fstest::marked_household(dir, "e01", RC::NoDamage, {{}}));
    m.records.push_back(fstest::marked_household(dir, "e02", RC::Destroyed,
                                                 {{"is the house destroyed"}}));
    m.records.push_back(fstest::marked_household(
        dir, "e03", RC::Affected, {{}, {"is the vegetation around burnt"}}));
    m.records.push_back(fstest::marked_household(
        dir, "e04", RC::Minor, {{"is the glass or windows broken"}}));
    m.records.push_back(fstest::marked_household(
        dir, "e05", RC::Major, {{"are there burn marks on the structure"}, {}}));
    m.records.push_back(fstest::marked_household(dir, "e06", RC::NoDamage, {{}, {}, {}}));
    return m;
}

RunConfig simulated_config() {
    RunConfig c = RunConfig::defaults();
    c.provider_type = "simulated";
    c.indicator_library = "alg2-min";
    c.parallelism = 2;
    return c;
}

std::vector<RunLogEntry> strip_timestamps(std::vector<RunLogEntry> entries) {
    for (auto& e : entries) e.timestamp.clear();
    return entries;
}

std::string dump_entries(const std::vector<RunLogEntry>& entries) {
    std::string out;
    for (const auto& e : entries) out += runlog_entry_to_json(e).dump() + "\n";
    return out;
}

}  // namespace

TEST_CASE("run_pipeline B multi over the 6-record fixture logs complete indicator sets") {
    fstest::TempDir dir;
    const auto manifest = six_record_fixture(dir);
    const auto config = simulated_config();
    SimulatedProvider provider;

    const auto outcome = run_pipeline(manifest, config, 'B', ViewMode::MultiView, provider);
    REQUIRE(outcome.entries.size() == 6);
    CHECK(outcome.errored == 0);
    const auto library = config.load_library();
    for (const auto& e : outcome.entries) {
        REQUIRE(e.indicators.has_value());
        CHECK(e.indicators->size() == library.size());
        CHECK(e.label.has_value());
        CHECK(e.agreement.has_value());
        CHECK(*e.agreement);
        CHECK(e.pipeline == "B");
    }
    // sorted by id
    for (std::size_t i = 1; i < outcome.entries.size(); ++i) {
        CHECK(outcome.entries[i - 1].id < outcome.entries[i].id);
    }
    CHECK(outcome.total_usage.input_tokens > 0);
}

TEST_CASE("run_pipeline is deterministic modulo timestamps, at any parallelism") {
    fstest::TempDir dir;
    const auto manifest = six_record_fixture(dir);
    auto config = simulated_config();

    SimulatedProvider p1, p2, p3;
    const auto a = run_pipeline(manifest, config, 'B', ViewMode::MultiView, p1);
    const auto b = run_pipeline(manifest, config, 'B', ViewMode::MultiView, p2);
    config.parallelism = 1;
    const auto c = run_pipeline(manifest, config, 'B', ViewMode::MultiView, p3);

    CHECK(dump_entries(strip_timestamps(a.entries)) == dump_entries(strip_timestamps(b.entries)));
    CHECK(dump_entries(strip_timestamps(a.entries)) == dump_entries(strip_timestamps(c.entries)));
}

TEST_CASE("run_pipeline records per-record failures instead of aborting") {
    fstest::TempDir dir;
    auto manifest = six_record_fixture(dir);
    // break one record's image file
    HouseholdRecord broken;
    broken.id = "e00_broken";
    broken.event = Event::parse("eaton");
    broken.ground_truth = RawDamageCategory::NoDamage;
    broken.images.push_back({(dir.path() / "missing.png").string(), ImageView::Front});
    manifest.records.push_back(broken);

    SimulatedProvider provider;
    const auto outcome =
        run_pipeline(manifest, simulated_config(), 'A', ViewMode::SingleFront, provider);
    REQUIRE(outcome.entries.size() == 7);
    CHECK(outcome.errored == 1);
    CHECK(outcome.entries.front().id == "e00_broken");
    CHECK_FALSE(outcome.entries.front().error.empty());
    CHECK_FALSE(outcome.entries.front().label.has_value());
}

TEST_CASE("runlog round-trips through its JSON-lines file") {
    fstest::TempDir dir;
    const auto manifest = six_record_fixture(dir);
    SimulatedProvider provider;
    const auto outcome =
        run_pipeline(manifest, simulated_config(), 'B', ViewMode::MultiView, provider);

    const auto path = (dir.path() / "run.jsonl").string();
    write_runlog(outcome.entries, path);
    const auto back = read_runlog(path);
    CHECK(dump_entries(back) == dump_entries(outcome.entries));
}

TEST_CASE("evaluate_runlog joins, aggregates and excludes errored records") {
    fstest::TempDir dir;
    const auto manifest = six_record_fixture(dir);
    SimulatedProvider provider;
    auto outcome = run_pipeline(manifest, simulated_config(), 'B', ViewMode::MultiView, provider);

    SUBCASE("simulated multi-view run is fully correct") {
        const auto art = evaluate_runlog(outcome.entries, manifest);
        CHECK(art.evaluated == 6);
        CHECK(art.excluded == 0);
        CHECK(art.report.accuracy == doctest::Approx(1.0));
        for (AssessmentLabel l : kAllLabels) {
            CHECK(art.report.per_class.at(l).f1 == doctest::Approx(1.0));
        }
    }
    SUBCASE("an errored entry is excluded and counted") {
        outcome.entries[0].error = "boom";
        outcome.entries[0].label.reset();
        const auto art = evaluate_runlog(outcome.entries, manifest);
        CHECK(art.evaluated == 5);
        CHECK(art.excluded == 1);
    }
    SUBCASE("unknown ids fail the join") {
        outcome.entries[0].id = "ghost";
        CHECK_THROWS_AS(evaluate_runlog(outcome.entries, manifest), JoinError);
    }
}

TEST_CASE("single-front vs multi-view on the fixture reproduces the improvement mechanism") {
    fstest::TempDir dir;
    const auto manifest = six_record_fixture(dir);
    const auto config = simulated_config();
    SimulatedProvider provider;

    const auto single = run_pipeline(manifest, config, 'B', ViewMode::SingleFront, provider);
    const auto multi = run_pipeline(manifest, config, 'B', ViewMode::MultiView, provider);

    // e03's burnt vegetation is only visible off-façade
    const auto single_eval = evaluate_runlog(single.entries, manifest);
    const auto multi_eval = evaluate_runlog(multi.entries, manifest);
    CHECK(single_eval.report.accuracy < multi_eval.report.accuracy);

    const auto table = mcnemar_runlogs(single.entries, multi.entries, manifest);
    const auto& affected = table.per_category.at(AssessmentLabel::Affected);
    CHECK(affected.cells.only_first_correct == 0);
    CHECK(affected.cells.only_second_correct == 1);
    CHECK(table.multi_image_households.at(AssessmentLabel::Affected) == 2);  // e03, e05
    CHECK(table.multi_image_households.at(AssessmentLabel::NoDamage) == 1);  // e06
}

TEST_CASE("mcnemar_runlogs rejects mismatched id sets") {
    fstest::TempDir dir;
    const auto manifest = six_record_fixture(dir);
    SimulatedProvider provider;
    const auto a = run_pipeline(manifest, simulated_config(), 'B', ViewMode::SingleFront, provider);
    auto b = a;
    b.entries.pop_back();
    CHECK_THROWS_AS(mcnemar_runlogs(a.entries, b.entries, manifest), PairingError);

    auto renamed = a;
    renamed.entries[0].id = "zz_unknown";
    CHECK_THROWS_AS(mcnemar_runlogs(a.entries, renamed.entries, manifest), PairingError);
}

TEST_CASE("mcnemar_runlogs of a log against itself is degenerate in every category") {
    fstest::TempDir dir;
    const auto manifest = six_record_fixture(dir);
    SimulatedProvider provider;
    const auto a = run_pipeline(manifest, simulated_config(), 'B', ViewMode::MultiView, provider);
    const auto table = mcnemar_runlogs(a.entries, a.entries, manifest);
    for (AssessmentLabel l : kAllLabels) {
        CHECK(table.per_category.at(l).degenerate);
        CHECK(table.per_category.at(l).p_value == 1.0);
    }
}

TEST_CASE("cost estimates reproduce the stock table and scale linearly") {
    const CostModel prices{Decimal::parse("2.5e-6"), Decimal::parse("1.0e-5")};

    auto est = estimate_run_cost(500, 'B', CostScenario::ThreeImages, prices);
    CHECK(est.price_per_10 == Decimal::parse("0.05127"));
    CHECK(est.price_per_sample == Decimal::parse("0.005127"));
    CHECK(est.total == Decimal::parse("2.5635"));

    CHECK(estimate_run_cost(0, 'A', CostScenario::SingleImage, prices).total.is_zero());

    const CostModel free{Decimal::parse("0"), Decimal::parse("0")};
    CHECK(estimate_run_cost(500, 'B', CostScenario::ThreeImages, free).total.is_zero());
}

TEST_CASE("config can override individual cost profiles") {
    fstest::TempDir dir;
    const auto path = dir.write_file("cfg.json", R"({
        "cost_profiles": {"A": {"single": {"vlm_input": 1000, "vlm_output": 100}}}
    })");
    const auto c = RunConfig::load(path);
    const auto est =
        estimate_run_cost(10, 'A', CostScenario::SingleImage, c.cost, c.cost_profiles);
    // 1000 * 2.5e-6 + 100 * 1e-5 = 0.0035 per 10 samples
    CHECK(est.price_per_10 == Decimal::parse("0.0035"));
    CHECK(est.total == Decimal::parse("0.0035"));
    // untouched entries keep the stock averages
    const auto stock =
        estimate_run_cost(10, 'B', CostScenario::ThreeImages, c.cost, c.cost_profiles);
    CHECK(stock.price_per_10 == Decimal::parse("0.05127"));
}

TEST_CASE("verify re-derives evaluation and mcnemar reports with zero diffs") {
    fstest::TempDir dir;
    const auto manifest = six_record_fixture(dir);
    SimulatedProvider provider;
    const auto config = simulated_config();
    const auto single = run_pipeline(manifest, config, 'B', ViewMode::SingleFront, provider);
    const auto multi = run_pipeline(manifest, config, 'B', ViewMode::MultiView, provider);

    const auto eval_json = evaluation_to_json(evaluate_runlog(multi.entries, manifest));
    auto outcome = verify_evaluation(eval_json, multi.entries, manifest);
    CHECK(outcome.clean());
    CHECK(outcome.values_checked > 20);

    const auto mc_json = mcnemar_to_json(mcnemar_runlogs(single.entries, multi.entries, manifest));
    auto mc_outcome = verify_mcnemar(mc_json, single.entries, multi.entries, manifest);
    CHECK(mc_outcome.clean());

    // a tampered number is caught
    auto tampered = eval_json;
    tampered["accuracy"] = 0.123;
    CHECK_FALSE(verify_evaluation(tampered, multi.entries, manifest).clean());
}

TEST_CASE("config: load, defaults and fail-fast validation") {
    fstest::TempDir dir;

    SUBCASE("valid simulated config") {
        const auto path = dir.write_file("cfg.json", R"({
            "provider": {"type": "simulated"},
            "models": {"vlm": "gpt-4o", "llm": "gpt-4o"},
            "decoding": {"direct": {"temperature": 0.5, "max_tokens": 10}},
            "cost": {"input_price_per_token": "2.5e-6", "output_price_per_token": "1.0e-5"},
            "parallelism": 3,
            "indicator_library": "alg2-min",
            "seed": 42
        })");
        const auto c = RunConfig::load(path);
        CHECK(c.provider_type == "simulated");
        CHECK(c.parallelism == 3);
        CHECK(c.seed == 42);
        CHECK(c.load_library().size() == 6);
        CHECK(c.cost.input_price_per_token == Decimal::parse("2.5e-6"));
    }
    SUBCASE("http provider without the API key env var fails before any work") {
        unsetenv("FIRESCOPE_TEST_MISSING_KEY");
        const auto path = dir.write_file("cfg.json", R"({
            "provider": {"type": "http", "base_url": "http://127.0.0.1:9",
                          "api_key_env": "FIRESCOPE_TEST_MISSING_KEY"}
        })");
        CHECK_THROWS_AS(RunConfig::load(path), ConfigError);
    }
    SUBCASE("http provider picks the key up from the environment") {
        setenv("FIRESCOPE_TEST_KEY", "sk-123", 1);
        const auto path = dir.write_file("cfg.json", R"({
            "provider": {"type": "http", "base_url": "http://127.0.0.1:9",
                          "api_key_env": "FIRESCOPE_TEST_KEY"}
        })");
        const auto c = RunConfig::load(path);
        CHECK(c.api_key == "sk-123");
        unsetenv("FIRESCOPE_TEST_KEY");
    }
    SUBCASE("unknown provider type and bad knobs are rejected") {
        CHECK_THROWS_AS(RunConfig::load(dir.write_file("a.json", R"({"provider": {"type": "psychic"}})")),
                        ConfigError);
        CHECK_THROWS_AS(
            RunConfig::load(dir.write_file("b.json", R"({"parallelism": 0})")), ConfigError);
        CHECK_THROWS_AS(
            RunConfig::load(dir.write_file("c.json",
                                           R"({"indicator_library": "no_such_file.json"})")),
            ConfigError);
        CHECK_THROWS_AS(
            RunConfig::load(dir.write_file(
                "d.json", R"({"decoding": {"direct": {"temperature": 3.0}}})")),
            ConfigError);
    }
    SUBCASE("custom indicator library file resolves relative to the config") {
        dir.write_file("lib.json", IndicatorLibrary::alg2_min().to_json().dump());
        const auto path =
            dir.write_file("cfg.json", R"({"indicator_library": "lib.json"})");
        const auto c = RunConfig::load(path);
        CHECK(c.load_library().size() == 6);
    }
}

TEST_CASE("evaluation JSON carries everything the text tables show") {
    fstest::TempDir dir;
    const auto manifest = six_record_fixture(dir);
    SimulatedProvider provider;
    const auto outcome =
        run_pipeline(manifest, simulated_config(), 'B', ViewMode::MultiView, provider);
    const auto art = evaluate_runlog(outcome.entries, manifest);

    const auto j = evaluation_to_json(art);
    CHECK(j["kind"] == "evaluation");
    CHECK(j["evaluated"] == 6);
    CHECK(j["per_class"]["no_damage"].contains("precision"));
    CHECK(j["confusion"].size() == 3);

    const auto table = render_metrics_table(art);
    CHECK(table.find("Accuracy") != std::string::npos);
    CHECK(table.find("Macro-Average F1 Score") != std::string::npos);
    const auto correct = render_correct_table(art);
    CHECK(correct.find("No Damage") != std::string::npos);
    CHECK(correct.find("(2/2)") != std::string::npos);  // two NoDamage households

    const auto csv = confusion_to_csv(art.confusion);
    CHECK(csv.find("truth\\prediction,no_damage,affected,destroyed") == 0);
}
