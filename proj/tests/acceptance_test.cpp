#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "scenebench/scenebench.hpp"
#include "reference_scorer.hpp"
#include "test_util.hpp"

using namespace scenebench;

// Each test covers one acceptance criterion and ends by printing a single
// machine-readable verdict line.

namespace {

void verdict(int index, const std::string& name, bool failed) {
    std::printf("[ACCEPTANCE] C%d %s: %s\n", index, name.c_str(),
                failed ? "FAIL" : "PASS");
    std::fflush(stdout);
}

// C1: the attribute table matches the checked-in schema description and the
// instruction template byte for byte.
TEST(Acceptance, C01SchemaFidelity) {
    EXPECT_EQ(kAttributeCount, 21u);
    std::string golden =
        testutil::read_text(testutil::fixture_path("schema.golden.json"));
    EXPECT_EQ(schema_to_json().dump(1) + "\n", golden);

    json doc = json::parse(golden);
    ASSERT_EQ(doc["attributes"].size(), 21u);
    const AttributeSchema& reg = attribute_registry();
    for (size_t i = 0; i < reg.size(); ++i) {
        const json& entry = doc["attributes"][i];
        EXPECT_EQ(entry["key"].get<std::string>(), std::string(reg[i].key));
        EXPECT_EQ(entry["domain"].size(),
                  static_cast<size_t>(reg[i].domain_max) + 1);
        EXPECT_EQ(entry["eval_domain"].size(),
                  static_cast<size_t>(reg[i].eval_max()) + 1);
    }

    // The template block inside the instruction text lists exactly the same
    // keys in the same order, all zero.
    auto extracted = extract_json(build_prompt().text);
    ASSERT_TRUE(extracted.has_value());
    ordered_json tmpl = ordered_json::parse(extracted->text);
    ASSERT_EQ(tmpl.size(), kAttributeCount);
    size_t i = 0;
    for (const auto& [key, value] : tmpl.items()) {
        EXPECT_EQ(key, std::string(reg[i].key)) << "position " << i;
        EXPECT_EQ(value, 0) << key;
        ++i;
    }
    verdict(1, "attribute-schema-fidelity", HasFailure());
}

// C2: stage collapse maps 0 to 0 and everything else to 1, exhaustively.
TEST(Acceptance, C02StageBinarization) {
    for (const AttributeSpec& attr : attribute_registry()) {
        for (int v = 0; v <= attr.domain_max; ++v) {
            int expected =
                attr.kind == AttributeKind::Staged ? (v == 0 ? 0 : 1) : v;
            EXPECT_EQ(binarize_value(attr, v), expected)
                << attr.key << " value " << v;
            EXPECT_EQ(binarize_value(attr, binarize_value(attr, v)),
                      binarize_value(attr, v))
                << attr.key << " not idempotent at " << v;
        }
    }
    verdict(2, "stage-binarization", HasFailure());
}

// C3: a thousand random frame sets agree with the enumeration-based
// reference scorer to within 1e-12 on every emitted number.
TEST(Acceptance, C03MetricsAgainstReferenceScorer) {
    std::mt19937 rng(1000003);
    std::uniform_int_distribution<size_t> size_dist(1, 10);
    for (int round = 0; round < 1000 && !HasFailure(); ++round) {
        size_t n = size_dist(rng);
        std::vector<SceneLabel> raw_truths, raw_preds;
        std::vector<EvalLabel> truths, preds;
        for (size_t i = 0; i < n; ++i) {
            raw_truths.push_back(testutil::random_raw_label(rng));
            raw_preds.push_back(testutil::random_raw_label(rng));
            truths.push_back(binarize_label(raw_truths.back()));
            preds.push_back(binarize_label(raw_preds.back()));
        }
        RunSummary got = summarize("p", truths, preds, 0, "score_zero");
        refscore::Score want = refscore::score(raw_truths, raw_preds);
        EXPECT_NEAR(got.macro.precision, want.macro.precision, 1e-12);
        EXPECT_NEAR(got.macro.recall, want.macro.recall, 1e-12);
        EXPECT_NEAR(got.macro.f1, want.macro.f1, 1e-12);
        EXPECT_NEAR(got.support_weighted_macro.precision,
                    want.support_weighted.precision, 1e-12);
        EXPECT_NEAR(got.support_weighted_macro.recall,
                    want.support_weighted.recall, 1e-12);
        EXPECT_NEAR(got.support_weighted_macro.f1,
                    want.support_weighted.f1, 1e-12);
        for (const auto& [key, m] : got.per_attribute) {
            const refscore::AttributeScore& ref = want.per_attribute.at(key);
            EXPECT_NEAR(m.weighted.precision, ref.weighted.precision, 1e-12)
                << key << " round " << round;
            EXPECT_NEAR(m.weighted.recall, ref.weighted.recall, 1e-12) << key;
            EXPECT_NEAR(m.weighted.f1, ref.weighted.f1, 1e-12) << key;
            ASSERT_EQ(m.per_class.size(), ref.per_class.size()) << key;
            for (size_t c = 0; c < m.per_class.size(); ++c) {
                EXPECT_NEAR(m.per_class[c].precision,
                            ref.per_class[c].prf.precision, 1e-12);
                EXPECT_NEAR(m.per_class[c].recall,
                            ref.per_class[c].prf.recall, 1e-12);
                EXPECT_NEAR(m.per_class[c].f1, ref.per_class[c].prf.f1,
                            1e-12);
                EXPECT_EQ(m.per_class[c].support, ref.per_class[c].support);
            }
        }
    }
    verdict(3, "metrics-vs-reference", HasFailure());
}

// C4: the canonical binary example scores exactly 0.6 on all three
// weighted metrics.
TEST(Acceptance, C04BinaryExampleScoresExactlyThreeFifths) {
    const AttributeSpec* attr = find_attribute("Tunnel");
    ASSERT_NE(attr, nullptr);
    std::vector<int> truths = {1, 1, 1, 0, 0};
    std::vector<int> preds = {1, 0, 1, 0, 1};
    AttributeMetrics m = score_attribute(*attr, truths, preds);
    EXPECT_EQ(m.weighted.precision, 0.6);
    EXPECT_EQ(m.weighted.recall, 0.6);
    EXPECT_EQ(m.weighted.f1, 0.6);
    verdict(4, "binary-prf-example", HasFailure());
}

// C5: plurality with priority tie-break, exhaustively over four binary
// voters; three binary voters reduce to the median.
TEST(Acceptance, C05VoteSemantics) {
    for (int mask = 0; mask < 16; ++mask) {
        std::vector<int> votes(4);
        int ones = 0;
        for (int i = 0; i < 4; ++i) {
            votes[i] = (mask >> i) & 1;
            ones += votes[i];
        }
        int got = vote_value(votes);
        if (ones >= 3)
            EXPECT_EQ(got, 1) << "mask " << mask;
        else if (ones <= 1)
            EXPECT_EQ(got, 0) << "mask " << mask;
        else
            EXPECT_EQ(got, votes[0]) << "mask " << mask;
    }
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<int> votes(3);
        int ones = 0;
        for (int i = 0; i < 3; ++i) {
            votes[i] = (mask >> i) & 1;
            ones += votes[i];
        }
        EXPECT_EQ(vote_value(votes), ones >= 2 ? 1 : 0) << "mask " << mask;
    }
    // Named examples: a 2-2 split goes to the first voter; an all-distinct
    // ballot goes to the highest-priority voter.
    EXPECT_EQ(vote_value({1, 0, 1, 0}), 1);
    VotePolicy policy;
    policy.priority = {"C", "A", "B"};
    EXPECT_EQ(vote_value({{"A", 2}, {"B", 3}, {"C", 0}}, policy), 0);
    verdict(5, "vote-semantics", HasFailure());
}

// C6: four providers at minimum size three yield exactly five committees.
TEST(Acceptance, C06CommitteeEnumeration) {
    auto committees = enumerate_ensembles({"a", "b", "c", "d"}, 3);
    ASSERT_EQ(committees.size(), 5u);
    EXPECT_EQ(committees[0], (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(committees[1], (std::vector<std::string>{"a", "b", "d"}));
    EXPECT_EQ(committees[2], (std::vector<std::string>{"a", "c", "d"}));
    EXPECT_EQ(committees[3], (std::vector<std::string>{"b", "c", "d"}));
    EXPECT_EQ(committees[4], (std::vector<std::string>{"a", "b", "c", "d"}));
    verdict(6, "committee-enumeration", HasFailure());
}

// C7: on the 20-frame fixture a three-model committee strictly beats its
// noisiest member on support-weighted F1.
TEST(Acceptance, C07EnsembleRepairsTheErringMember) {
    DatasetManifest manifest =
        load_manifest(testutil::fixture_path("eval20/manifest.jsonl"));
    std::map<std::string, std::vector<PredictionRecord>> by_provider;
    for (const std::string id : {"alpha", "bravo", "charlie"})
        by_provider[id] = read_predictions(testutil::fixture_path(
            "eval20/predictions_" + id + ".jsonl"));
    RunSummary erring = evaluate_provider(manifest, by_provider.at("bravo"));
    auto voted = vote_predictions({"alpha", "bravo", "charlie"}, by_provider);
    RunSummary committee = evaluate_provider(manifest, voted);
    EXPECT_GT(committee.support_weighted_macro.f1,
              erring.support_weighted_macro.f1);
    verdict(7, "ensemble-repair", HasFailure());
}

// C8: every checked-in malformed-output sample parses to its recorded
// outcome, and ten thousand random strings never crash the parser.
TEST(Acceptance, C08MalformedOutputHandling) {
    std::vector<std::filesystem::path> inputs;
    for (const auto& entry : std::filesystem::directory_iterator(
             testutil::fixture_path("parsing")))
        if (entry.path().extension() == ".txt")
            inputs.push_back(entry.path());
    std::sort(inputs.begin(), inputs.end());
    EXPECT_GE(inputs.size(), 20u);
    for (const auto& input : inputs) {
        SCOPED_TRACE(input.filename().string());
        std::string raw = testutil::read_text(input);
        std::filesystem::path expected_path = input;
        expected_path.replace_extension(".expected.json");
        json expected = json::parse(testutil::read_text(expected_path));
        ParseOutcome outcome = parse_response(raw);
        EXPECT_EQ(outcome.fatal, expected["fatal"].get<bool>());
        EXPECT_EQ(outcome.label,
                  label_from_json(expected["label"], /*eval_domains=*/true));
        ASSERT_EQ(outcome.diagnostics.size(), expected["diagnostics"].size());
        for (size_t i = 0; i < outcome.diagnostics.size(); ++i)
            EXPECT_EQ(diagnostic_kind_name(outcome.diagnostics[i].kind),
                      expected["diagnostics"][i]["kind"].get<std::string>());
    }

    std::mt19937 rng(0xf22u);
    const std::string alphabet = "{}[]\",:0123456789 \n\\abcod.eE-+`";
    std::uniform_int_distribution<size_t> len_dist(0, 300);
    std::uniform_int_distribution<size_t> chr_dist(0, alphabet.size() - 1);
    for (int i = 0; i < 10000; ++i) {
        std::string text;
        size_t len = len_dist(rng);
        for (size_t k = 0; k < len; ++k) text += alphabet[chr_dist(rng)];
        ParseOutcome outcome;
        ASSERT_NO_THROW(outcome = parse_response(text));
        EXPECT_EQ(outcome.label.size(), kAttributeCount);
    }
    verdict(8, "malformed-output-handling", HasFailure());
}

// Shared by C9/C10: a small frame set and four scripted providers whose
// answers genuinely differ.
struct PipelineWorkspace {
    testutil::TempDir dir;
    std::string manifest;
    std::string providers;

    PipelineWorkspace() {
        std::string rows;
        rows += ordered_json{{"source_note", "pipeline scratch"}}.dump() +
                "\n";
        std::mt19937 rng(99);
        for (int i = 1; i <= 6; ++i) {
            std::string frame = "f" + std::to_string(i);
            testutil::write_text(dir / ("images/" + frame + ".png"),
                                 testutil::tiny_png(static_cast<uint32_t>(i)));
            ordered_json row = ordered_json::object();
            row["frame_id"] = frame;
            row["image_path"] = "images/" + frame + ".png";
            row["truth"] = label_to_json(testutil::random_raw_label(rng));
            rows += row.dump() + "\n";
        }
        manifest = (dir / "manifest.jsonl").string();
        testutil::write_text(dir / "manifest.jsonl", rows);
        providers = (dir / "providers.json").string();
        testutil::write_text(dir / "providers.json", R"({"providers": [
          {"id": "m1", "adapter": "mock", "model": "m1"},
          {"id": "m2", "adapter": "mock", "model": "m2"},
          {"id": "m3", "adapter": "mock", "model": "m3"},
          {"id": "m4", "adapter": "mock", "model": "m4"}
        ]})");
    }

    int run_pipeline(const std::string& out) const {
        int code = testutil::run_cli({"run", "--manifest", manifest,
                                      "--providers", providers, "--out", out})
                       .code;
        if (code != 0) return code;
        code = testutil::run_cli(
                   {"eval", "--manifest", manifest, "--run-dir", out})
                   .code;
        if (code != 0) return code;
        code = testutil::run_cli(
                   {"ensemble", "--manifest", manifest, "--run-dir", out})
                   .code;
        if (code != 0) return code;
        return testutil::run_cli({"report", "--run-dir", out}).code;
    }
};

std::vector<std::filesystem::path> relative_files(
    const std::filesystem::path& root) {
    std::vector<std::filesystem::path> out;
    for (const auto& entry :
         std::filesystem::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            out.push_back(std::filesystem::relative(entry.path(), root));
    std::sort(out.begin(), out.end());
    return out;
}

// C9: the full pipeline is byte-identical across two executions, and the
// radar chart spans 21 axes by 4 series.
TEST(Acceptance, C09PipelineDeterminism) {
    testutil::EnvGuard clock("SOURCE_DATE_EPOCH", "1700000000");
    PipelineWorkspace ws;
    std::string out_a = (ws.dir / "runA").string();
    std::string out_b = (ws.dir / "runB").string();
    ASSERT_EQ(ws.run_pipeline(out_a), 0);
    ASSERT_EQ(ws.run_pipeline(out_b), 0);

    auto files_a = relative_files(out_a);
    auto files_b = relative_files(out_b);
    ASSERT_EQ(files_a, files_b);
    EXPECT_FALSE(files_a.empty());
    for (const auto& rel : files_a)
        EXPECT_EQ(testutil::read_text(out_a / rel),
                  testutil::read_text(out_b / rel))
            << rel;

    json radar = json::parse(testutil::read_text(
        std::filesystem::path(out_a) / "charts/per_attribute_f1_radar.json"));
    EXPECT_EQ(radar["axes"].size(), 21u);
    EXPECT_EQ(radar["series"].size(), 4u);
    verdict(9, "pipeline-determinism", HasFailure());
}

// C10: rerunning against a warm cache issues no model queries at all.
TEST(Acceptance, C10WarmCacheReplay) {
    testutil::EnvGuard clock("SOURCE_DATE_EPOCH", "1700000000");
    PipelineWorkspace ws;
    std::string out = (ws.dir / "run").string();
    ASSERT_EQ(testutil::run_cli({"run", "--manifest", ws.manifest,
                                 "--providers", ws.providers, "--out", out})
                  .code,
              0);
    json cold = json::parse(testutil::read_text(
        std::filesystem::path(out) / "run_meta.json"));
    EXPECT_EQ(cold["steps"]["run"]["network_calls"], 24);
    EXPECT_EQ(cold["steps"]["run"]["cache_hits"], 0);

    ASSERT_EQ(testutil::run_cli({"run", "--manifest", ws.manifest,
                                 "--providers", ws.providers, "--out", out})
                  .code,
              0);
    json warm = json::parse(testutil::read_text(
        std::filesystem::path(out) / "run_meta.json"));
    EXPECT_EQ(warm["steps"]["run"]["network_calls"], 0);
    EXPECT_EQ(warm["steps"]["run"]["cache_hits"], 24);

    for (const std::string id : {"m1", "m2", "m3", "m4"}) {
        auto records = read_predictions(std::filesystem::path(out) /
                                        ("predictions/" + id + ".jsonl"));
        ASSERT_EQ(records.size(), 6u) << id;
        for (const PredictionRecord& r : records)
            EXPECT_TRUE(r.from_cache) << id << " " << r.frame_id;
    }
    verdict(10, "warm-cache-replay", HasFailure());
}

}  // namespace
