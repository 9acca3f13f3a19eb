#include "doctest.h"

#include "firescope/pipeline_b.hpp"
#include "firescope/mock_provider.hpp"

#include "support/faithful_llm.hpp"
#include "support/fixtures.hpp"
#include "support/temp_dir.hpp"

using namespace firescope;

namespace {

int label_rank(AssessmentLabel l) {
    switch (l) {
        case AssessmentLabel::NoDamage: return 0;
        case AssessmentLabel::Affected: return 1;
        case AssessmentLabel::Destroyed: return 2;
    }
    return -1;
}

}  // namespace

TEST_CASE("library presets are well-formed") {
    auto min = IndicatorLibrary::alg2_min();
    CHECK(min.size() == 6);
    CHECK(min.destruction_indicator().question == "is the house destroyed");

    auto full = IndicatorLibrary::appendix_full();
    CHECK(full.size() == 11);
    CHECK(full.destruction_indicator().question == "is the house destroyed");
    CHECK(full.find_by_question("is there debris around the house") != nullptr);

    CHECK(IndicatorLibrary::resolve("alg2-min").name() == "alg2-min");
    CHECK(IndicatorLibrary::resolve("appendix-full").name() == "appendix-full");
}

TEST_CASE("library rejects duplicate keys and missing destruction role") {
    CHECK_THROWS_AS(IndicatorLibrary("bad", {{"a", "q1", IndicatorRole::Affect},
                                             {"a", "q2", IndicatorRole::Affect}}),
                    ConfigError);
    CHECK_THROWS_AS(IndicatorLibrary("bad", {{"a", "q1", IndicatorRole::Affect}}), ConfigError);
    CHECK_THROWS_AS(IndicatorLibrary("bad", {{"a", "q1", IndicatorRole::Destruction},
                                             {"b", "q2", IndicatorRole::Destruction}}),
                    ConfigError);
}

TEST_CASE("library file round-trip") {
    fstest::TempDir dir;
    const auto path = dir.path() / "lib.json";
    {
        std::ofstream out(path);
        out << IndicatorLibrary::appendix_full().to_json().dump(2);
    }
    auto loaded = IndicatorLibrary::load(path.string());
    CHECK(loaded.size() == 11);
    CHECK(loaded.destruction_indicator().key == "house_destroyed");
    CHECK(loaded.at(10).key == "debris_around_house");
}

TEST_CASE("stage-1 prompts match their golden files byte for byte") {
    CHECK(stage1_prompt(IndicatorLibrary::alg2_min()) ==
          fstest::read_golden("prompt_stage1_alg2_min.txt"));
    CHECK(stage1_prompt(IndicatorLibrary::appendix_full()) ==
          fstest::read_golden("prompt_stage1_appendix_full.txt"));
}

TEST_CASE("stage-2 prompt matches its golden file for the all-false set") {
    auto lib = IndicatorLibrary::alg2_min();
    auto ind = IndicatorSet::from_bits(lib, 0);
    CHECK(stage2_prompt(render_indicator_json(ind, lib)) ==
          fstest::read_golden("prompt_stage2_alg2_all_false.txt"));
}

TEST_CASE("parse_indicator_reply handles well-formed, fenced and decorated JSON") {
    auto lib = IndicatorLibrary::alg2_min();
    nlohmann::ordered_json obj;
    for (const auto& ind : lib.all()) obj[ind.question] = false;
    obj["is the house destroyed"] = true;

    SUBCASE("plain object") {
        auto set = parse_indicator_reply(obj.dump(), lib, "h");
        CHECK(set.at("house_destroyed"));
        CHECK_FALSE(set.at("furniture_burnt"));
        CHECK(set.complete_for(lib));
    }
    SUBCASE("markdown code fences") {
        auto set = parse_indicator_reply("```json\n" + obj.dump(2) + "\n```", lib, "h");
        CHECK(set.at("house_destroyed"));
    }
    SUBCASE("surrounding prose") {
        auto set = parse_indicator_reply("Here is my assessment:\n" + obj.dump() +
                                             "\nLet me know if you need more.",
                                         lib, "h");
        CHECK(set.at("house_destroyed"));
    }
    SUBCASE("string booleans are coerced") {
        nlohmann::ordered_json stringy;
        for (const auto& ind : lib.all()) stringy[ind.question] = "false";
        stringy["is the vegetation around burnt"] = "True";
        auto set = parse_indicator_reply(stringy.dump(), lib, "h");
        CHECK(set.at("vegetation_around_burnt"));
        CHECK_FALSE(set.at("house_destroyed"));
    }
    SUBCASE("snake_case keys are accepted") {
        nlohmann::ordered_json keyed;
        for (const auto& ind : lib.all()) keyed[ind.key] = false;
        auto set = parse_indicator_reply(keyed.dump(), lib, "h");
        CHECK(set.complete_for(lib));
    }
}

TEST_CASE("parse_indicator_reply rejects missing, extra and non-boolean fields") {
    auto lib = IndicatorLibrary::alg2_min();
    nlohmann::ordered_json obj;
    for (const auto& ind : lib.all()) obj[ind.question] = false;

    SUBCASE("missing key") {
        obj.erase("is the furniture burnt");
        CHECK_THROWS_AS(parse_indicator_reply(obj.dump(), lib, "h"), IndicatorParseError);
    }
    SUBCASE("extra key") {
        obj["is the pool damaged"] = true;
        CHECK_THROWS_AS(parse_indicator_reply(obj.dump(), lib, "h"), IndicatorParseError);
    }
    SUBCASE("non-boolean value") {
        obj["is the furniture burnt"] = "perhaps";
        CHECK_THROWS_AS(parse_indicator_reply(obj.dump(), lib, "h"), IndicatorParseError);
    }
    SUBCASE("not JSON at all") {
        CHECK_THROWS_AS(parse_indicator_reply("the house looks fine", lib, "h"),
                        IndicatorParseError);
    }
}

TEST_CASE("rule_adjudicate follows the priority cascade") {
    auto lib = IndicatorLibrary::alg2_min();

    CHECK(rule_adjudicate(IndicatorSet::from_bits(lib, 0), lib) == AssessmentLabel::NoDamage);

    // destruction indicator true, everything else arbitrary
    for (std::uint64_t rest = 0; rest < (1u << 5); ++rest) {
        auto ind = IndicatorSet::from_bits(lib, 1 | (rest << 1));
        CHECK(rule_adjudicate(ind, lib) == AssessmentLabel::Destroyed);
    }

    IndicatorSet veg = IndicatorSet::from_bits(lib, 0);
    veg.values["vegetation_around_burnt"] = true;
    CHECK(rule_adjudicate(veg, lib) == AssessmentLabel::Affected);
}

TEST_CASE("rule_adjudicate is monotone under false->true flips") {
    for (const auto& lib : {IndicatorLibrary::alg2_min(), IndicatorLibrary::appendix_full()}) {
        const std::uint64_t n = 1ULL << lib.size();
        for (std::uint64_t bits = 0; bits < n; ++bits) {
            const int before = label_rank(rule_adjudicate(IndicatorSet::from_bits(lib, bits), lib));
            for (std::size_t i = 0; i < lib.size(); ++i) {
                if ((bits >> i) & 1) continue;
                const std::uint64_t flipped = bits | (1ULL << i);
                const int after =
                    label_rank(rule_adjudicate(IndicatorSet::from_bits(lib, flipped), lib));
                CHECK(after >= before);
            }
        }
    }
}

TEST_CASE("exhaustive: faithful LLM adjudication equals the rule engine") {
    fstest::FaithfulLLM faithful;
    for (const auto& lib : {IndicatorLibrary::alg2_min(), IndicatorLibrary::appendix_full()}) {
        const std::uint64_t n = 1ULL << lib.size();
        for (std::uint64_t bits = 0; bits < n; ++bits) {
            auto ind = IndicatorSet::from_bits(lib, bits);
            CHECK(llm_adjudicate(ind, lib, faithful) == rule_adjudicate(ind, lib));
        }
    }
}

TEST_CASE("llm_adjudicate on an all-false set returns No Damage") {
    fstest::FaithfulLLM faithful;
    auto lib = IndicatorLibrary::appendix_full();
    CHECK(llm_adjudicate(IndicatorSet::from_bits(lib, 0), lib, faithful) ==
          AssessmentLabel::NoDamage);
}

TEST_CASE("disagreeing LLM is recorded, not silently overruled") {
    fstest::TempDir dir;
    auto lib = IndicatorLibrary::alg2_min();
    auto record = fstest::marked_household(dir, "h1", RawDamageCategory::Destroyed,
                                           {{"is the house destroyed"}});

    // stage 1 answered by the simulated VLM; stage 2 scripted to contradict
    class Contrarian : public ChatProvider {
    public:
        ModelResponse complete(const ModelRequest& request) override {
            if (request.prompt.rfind("Analyze the image", 0) == 0) return sim_.complete(request);
            ModelResponse resp;
            resp.text = "Affected";
            resp.usage = estimate_usage(request, resp.text);
            resp.usage_estimated = true;
            return resp;
        }

    private:
        SimulatedProvider sim_;
    } contrarian;

    auto result = classify_indicator_guided(record, ViewMode::SingleFront, lib, contrarian);
    CHECK(result.llm_label == AssessmentLabel::Affected);
    CHECK(result.rule_label == AssessmentLabel::Destroyed);
    CHECK_FALSE(result.agreement);
}

TEST_CASE("classify_indicator_guided composes the stages and sums usage") {
    fstest::TempDir dir;
    auto lib = IndicatorLibrary::alg2_min();
    SimulatedProvider sim;

    SUBCASE("all-false household is No Damage with agreement") {
        auto record = fstest::marked_household(dir, "clean", RawDamageCategory::NoDamage, {{}});
        auto result = classify_indicator_guided(record, ViewMode::SingleFront, lib, sim);
        CHECK(result.llm_label == AssessmentLabel::NoDamage);
        CHECK(result.rule_label == AssessmentLabel::NoDamage);
        CHECK(result.agreement);
        CHECK(result.indicators.complete_for(lib));
        CHECK(result.attempts == 2);  // one call per stage
    }
    SUBCASE("destroyed household is Destroyed with agreement") {
        auto record = fstest::marked_household(dir, "razed", RawDamageCategory::Destroyed,
                                               {{"is the house destroyed"}});
        auto result = classify_indicator_guided(record, ViewMode::SingleFront, lib, sim);
        CHECK(result.llm_label == AssessmentLabel::Destroyed);
        CHECK(result.agreement);
    }
    SUBCASE("usage equals the fieldwise sum of stage usages") {
        auto record = fstest::marked_household(dir, "sum", RawDamageCategory::NoDamage, {{}});
        auto result = classify_indicator_guided(record, ViewMode::SingleFront, lib, sim);
        auto log = sim.call_log();
        REQUIRE(log.size() == 2);
        const TokenUsage stage1 = estimate_usage(log[0], result.raw_stage1);
        const TokenUsage stage2 = estimate_usage(log[1], result.raw_stage2);
        CHECK(result.usage == stage1 + stage2);
    }
}

TEST_CASE("damage visible only off-façade flips the verdict between modes") {
    fstest::TempDir dir;
    auto lib = IndicatorLibrary::alg2_min();
    SimulatedProvider sim;
    auto record = fstest::marked_household(
        dir, "rear_burn", RawDamageCategory::Affected,
        {{}, {"is the vegetation around burnt"}});

    auto single = classify_indicator_guided(record, ViewMode::SingleFront, lib, sim);
    CHECK(single.llm_label == AssessmentLabel::NoDamage);

    auto multi = classify_indicator_guided(record, ViewMode::MultiView, lib, sim);
    CHECK(multi.llm_label == AssessmentLabel::Affected);
    CHECK(multi.indicators.at("vegetation_around_burnt"));
    CHECK(multi.agreement);
}

TEST_CASE("stage 2 is text-only by default, image-carrying when opted in") {
    fstest::TempDir dir;
    auto lib = IndicatorLibrary::alg2_min();
    auto record = fstest::marked_household(dir, "h9", RawDamageCategory::NoDamage, {{}, {}});

    SimulatedProvider sim;
    classify_indicator_guided(record, ViewMode::MultiView, lib, sim);
    auto log = sim.call_log();
    REQUIRE(log.size() == 2);
    CHECK(log[0].images.size() == 2);
    CHECK(log[1].images.empty());

    SimulatedProvider sim2;
    PipelineBOptions with_images;
    with_images.stage2_with_images = true;
    classify_indicator_guided(record, ViewMode::MultiView, lib, sim2, with_images);
    auto log2 = sim2.call_log();
    REQUIRE(log2.size() == 2);
    CHECK(log2[1].images.size() == 2);
}

TEST_CASE("stage-1 parse failure retries once, then raises IndicatorParseError") {
    fstest::TempDir dir;
    auto lib = IndicatorLibrary::alg2_min();
    auto record = fstest::marked_household(dir, "h10", RawDamageCategory::NoDamage, {{}});
    MockProvider mock("this is not json");
    CHECK_THROWS_AS(classify_indicator_guided(record, ViewMode::SingleFront, lib, mock),
                    IndicatorParseError);
    CHECK(mock.call_count() == 2);
}
