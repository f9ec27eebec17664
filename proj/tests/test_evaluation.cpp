#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "taskinduct/evaluation.hpp"
#include "taskinduct/util.hpp"

using namespace taskinduct;
using eval::MatchPolicy;
using eval::SettingResult;

namespace {

std::filesystem::path fixture_path() {
    return std::filesystem::path(TASKINDUCT_SOURCE_DIR) / "data" / "table1.csv";
}

uint64_t rng_state = 0x7a5c3e1fd2b90461ULL;
uint64_t next_rand() {
    uint64_t z = (rng_state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SettingResult random_setting(int index) {
    long total = 1 + long(next_rand() % 400);
    long correct = long(next_rand() % (uint64_t(total) + 1));
    return SettingResult::from_counts("model" + std::to_string(index % 7),
                                      "task" + std::to_string(index), "m", correct, total);
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("option letters match through parentheses and case") {
    CHECK(eval::match_answer(std::string("(A)"), "A", MatchPolicy::OptionLetter));
    CHECK(eval::match_answer(std::string("a"), "(A)", MatchPolicy::OptionLetter));
    CHECK(eval::match_answer(std::string("B."), "B", MatchPolicy::OptionLetter));
    CHECK(!eval::match_answer(std::string("(A)"), "B", MatchPolicy::OptionLetter));
    CHECK(!eval::match_answer(std::string("AB"), "A", MatchPolicy::OptionLetter));
}

TEST_CASE("exact matching trims, folds case and collapses whitespace") {
    CHECK(eval::match_answer(std::string(" choosed "), "choosed",
                             MatchPolicy::ExactNormalized));
    CHECK(eval::match_answer(std::string("Two  Words"), "two words",
                             MatchPolicy::ExactNormalized));
    CHECK(!eval::match_answer(std::string("chose"), "choosed",
                              MatchPolicy::ExactNormalized));
}

TEST_CASE("numeric matching respects the epsilon and rejects non-numbers") {
    CHECK(eval::match_answer(std::string("3.14159"), "3.141590001",
                             MatchPolicy::NumericTolerant, 1e-6));
    CHECK(!eval::match_answer(std::string("3.14"), "3.15", MatchPolicy::NumericTolerant,
                              1e-6));
    CHECK(!eval::match_answer(std::string("about three"), "3",
                              MatchPolicy::NumericTolerant, 1e-6));
}

TEST_CASE("an absent extraction never matches") {
    CHECK(!eval::match_answer(std::nullopt, "anything", MatchPolicy::OptionLetter));
    CHECK(!eval::match_answer(std::nullopt, "anything", MatchPolicy::ExactNormalized));
    CHECK(!eval::match_answer(std::nullopt, "3", MatchPolicy::NumericTolerant));
}

TEST_CASE("policy resolution honors overrides then the answer format") {
    data::TaskSpec task;
    task.task = "t";
    task.short_phrase = "p";
    task.answer_format = "The output is a single option letter (e.g., A, B).";
    CHECK(eval::resolve_policy(task) == MatchPolicy::OptionLetter);
    task.answer_format = "a single lowercase word";
    CHECK(eval::resolve_policy(task) == MatchPolicy::ExactNormalized);
    task.match_policy = "numeric";
    CHECK(eval::resolve_policy(task) == MatchPolicy::NumericTolerant);
    task.match_policy = "bogus";
    CHECK_THROWS_AS((void)eval::resolve_policy(task), ConfigError);
}

TEST_CASE("accuracy keeps exact counts and renders two decimals") {
    data::TaskSpec task;
    task.task = "t";
    task.short_phrase = "p";
    task.answer_format = "a word";
    std::vector<pipeline::InferenceRecord> records;
    for (int i = 0; i < 25; ++i) {
        task.items.push_back({"i" + std::to_string(i), "q", "gold"});
        pipeline::InferenceRecord record;
        record.item_id = "i" + std::to_string(i);
        record.final_answer = i < 16 ? std::optional<std::string>("gold") : std::nullopt;
        records.push_back(std::move(record));
    }
    SettingResult result = eval::accuracy(records, task, "m", "d", "zcot");
    CHECK(result.correct == 16);
    CHECK(result.total == 25);
    CHECK(result.render_percent() == "64.00");
    for (int i = 0; i < 25; ++i) CHECK(records[i].correct == (i < 16));

    for (auto& record : records) record.final_answer = std::nullopt;
    CHECK(eval::accuracy(records, task, "m", "d", "zcot").render_percent() == "0.00");
}

TEST_CASE("accuracy demands gold answers") {
    data::TaskSpec task;
    task.task = "t";
    task.short_phrase = "p";
    task.answer_format = "a word";
    task.items.push_back({"i0", "q", std::nullopt});
    std::vector<pipeline::InferenceRecord> records(1);
    records[0].item_id = "i0";
    CHECK_THROWS_AS((void)eval::accuracy(records, task, "m", "d", "zcot"), MissingGold);
}

TEST_CASE("unparseable percent strings are rejected") {
    CHECK_THROWS_AS((void)eval::percent_to_hundredths("n/a"), ConfigError);
    CHECK_THROWS_AS((void)eval::percent_to_hundredths("12.3x"), ConfigError);
}

TEST_CASE("percent strings parse exactly at two decimals") {
    CHECK(eval::percent_to_hundredths("65.33") == 6533);
    CHECK(eval::percent_to_hundredths("0.00") == 0);
    CHECK(eval::percent_to_hundredths("100") == 10000);
    CHECK(eval::percent_to_hundredths("2.5") == 250);
    CHECK(eval::percent_to_hundredths("-0.36") == -36);
    CHECK(eval::hundredths_to_percent(6533) == "65.33");
    CHECK(eval::hundredths_to_percent(-36) == "-0.36");
    CHECK(eval::hundredths_to_percent(0) == "0.00");
}

TEST_CASE("the transcribed fixture replays every published record exactly") {
    auto fixture = eval::load_results_csv(fixture_path());
    CHECK(fixture.size() == 240);

    eval::Table1Replay replay = eval::replay_table1(fixture);
    CHECK(replay.vs_zcot.render() == "50-3-7");
    CHECK(replay.vs_induct.render() == "44-3-13");
    CHECK(replay.vs_scot.render() == "52-0-8");
    CHECK(replay.small_models_vs_induct.render() == "10-3-2");

    // rendering reproduces the published strings
    bool found = false;
    for (const SettingResult& r : fixture) {
        if (r.model == "Llama 3.1 8B" && r.dataset == "BBH-Induct" &&
            r.method == "strategy-induct") {
            CHECK(r.render_percent() == "65.33");
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("win_tie_lose of a list against itself is all ties") {
    std::vector<SettingResult> settings;
    for (int i = 0; i < 40; ++i) settings.push_back(random_setting(i));
    eval::WTLRecord record = eval::win_tie_lose(settings, settings);
    CHECK(record.wins == 0);
    CHECK(record.ties == 40);
    CHECK(record.losses == 0);
}

TEST_CASE("win_tie_lose is antisymmetric") {
    for (int round = 0; round < 1000; ++round) {
        size_t count = 1 + next_rand() % 8;
        std::vector<SettingResult> a, b;
        for (size_t i = 0; i < count; ++i) {
            a.push_back(random_setting(int(i)));
            SettingResult mirror = a.back();
            mirror.percent_hundredths = int64_t(next_rand() % 10001);
            b.push_back(mirror);
        }
        eval::WTLRecord forward = eval::win_tie_lose(a, b);
        eval::WTLRecord backward = eval::win_tie_lose(b, a);
        CHECK(forward.wins == backward.losses);
        CHECK(forward.losses == backward.wins);
        CHECK(forward.ties == backward.ties);
        CHECK(forward.wins + forward.ties + forward.losses == long(count));
    }
}

TEST_CASE("ties are decided at two-decimal precision") {
    // 1/3 and 3333/10000 both round to 33.33
    auto a = SettingResult::from_counts("m", "d", "x", 1, 3);
    auto b = SettingResult::from_counts("m", "d", "x", 3333, 10000);
    CHECK(a.render_percent() == "33.33");
    CHECK(b.render_percent() == "33.33");
    eval::WTLRecord record = eval::win_tie_lose({a}, {b});
    CHECK(record.ties == 1);

    for (int round = 0; round < 1000; ++round) {
        auto x = random_setting(0);
        auto y = random_setting(0);
        y.model = x.model;
        y.dataset = x.dataset;
        eval::WTLRecord r = eval::win_tie_lose({x}, {y});
        bool same_rendered = x.render_percent() == y.render_percent();
        CHECK(r.ties == (same_rendered ? 1 : 0));
    }
}

TEST_CASE("misaligned settings are rejected") {
    auto a = SettingResult::from_counts("m1", "d", "x", 1, 2);
    auto b = SettingResult::from_counts("m2", "d", "x", 1, 2);
    CHECK_THROWS_AS((void)eval::win_tie_lose({a}, {b}), MisalignedSettings);
    CHECK_THROWS_AS((void)eval::win_tie_lose({a, a}, {a}), MisalignedSettings);
}

TEST_CASE("accuracy is permutation-invariant over records") {
    data::TaskSpec task;
    task.task = "t";
    task.short_phrase = "p";
    task.answer_format = "a word";
    std::vector<pipeline::InferenceRecord> records;
    for (int i = 0; i < 60; ++i) {
        task.items.push_back({"i" + std::to_string(i), "q", "gold"});
        pipeline::InferenceRecord record;
        record.item_id = "i" + std::to_string(i);
        if (next_rand() % 2) record.final_answer = "gold";
        records.push_back(std::move(record));
    }
    SettingResult base = eval::accuracy(records, task, "m", "d", "x");
    for (int round = 0; round < 50; ++round) {
        for (size_t i = records.size(); i > 1; --i) {
            std::swap(records[i - 1], records[next_rand() % i]);
        }
        SettingResult shuffled = eval::accuracy(records, task, "m", "d", "x");
        CHECK(shuffled.correct == base.correct);
        CHECK(shuffled.percent_hundredths == base.percent_hundredths);
    }
}

TEST_CASE("identical result sets give an all-zero delta matrix") {
    std::vector<SettingResult> results;
    for (int m = 0; m < 3; ++m) {
        for (int t = 0; t < 4; ++t) {
            auto row = random_setting(t);
            row.model = "model" + std::to_string(m);
            row.dataset = "task" + std::to_string(t);
            row.method = "a";
            results.push_back(row);
            row.method = "b";
            results.push_back(row);
        }
    }
    eval::DeltaMatrix matrix = eval::delta_matrix(results, "a", "b");
    for (const auto& row : matrix.cells) {
        for (int64_t cell : row) CHECK(cell == 0);
    }
}

TEST_CASE("a 0.76 vs 0.40 cell yields +0.36") {
    std::vector<SettingResult> results = {
        SettingResult::from_percent_text("gemini", "snarks", "ours", "0.76"),
        SettingResult::from_percent_text("gemini", "snarks", "scot", "0.40")};
    eval::DeltaMatrix matrix = eval::delta_matrix(results, "ours", "scot");
    REQUIRE(matrix.cells.size() == 1);
    CHECK(matrix.cells[0][0] == 36);
    CHECK(eval::hundredths_to_percent(matrix.cells[0][0]) == "0.36");
}

TEST_CASE("a synthetic 2x2 grid matches direct subtraction") {
    // hand-computed oracle: a - b per cell
    struct Cell { const char* model; const char* task; int64_t a; int64_t b; };
    std::vector<Cell> cells = {{"m1", "t1", 7600, 4000},
                               {"m1", "t2", 5000, 5000},
                               {"m2", "t1", 1234, 2234},
                               {"m2", "t2", 9999, 1}};
    std::vector<SettingResult> results;
    for (const Cell& cell : cells) {
        SettingResult a;
        a.model = cell.model;
        a.dataset = cell.task;
        a.method = "a";
        a.percent_hundredths = cell.a;
        results.push_back(a);
        a.method = "b";
        a.percent_hundredths = cell.b;
        results.push_back(a);
    }
    eval::DeltaMatrix matrix = eval::delta_matrix(results, "a", "b");
    REQUIRE(matrix.models == std::vector<std::string>{"m1", "m2"});
    REQUIRE(matrix.subtasks == std::vector<std::string>{"t1", "t2"});
    CHECK(matrix.cells[0][0] == 7600 - 4000);
    CHECK(matrix.cells[0][1] == 0);
    CHECK(matrix.cells[1][0] == 1234 - 2234);
    CHECK(matrix.cells[1][1] == 9999 - 1);
}

TEST_CASE("delta matrix is antisymmetric") {
    for (int round = 0; round < 200; ++round) {
        std::vector<SettingResult> results;
        for (int m = 0; m < 2; ++m) {
            for (int t = 0; t < 3; ++t) {
                for (const char* method : {"a", "b"}) {
                    SettingResult r;
                    r.model = "model" + std::to_string(m);
                    r.dataset = "task" + std::to_string(t);
                    r.method = method;
                    r.percent_hundredths = int64_t(next_rand() % 10001);
                    results.push_back(r);
                }
            }
        }
        eval::DeltaMatrix ab = eval::delta_matrix(results, "a", "b");
        eval::DeltaMatrix ba = eval::delta_matrix(results, "b", "a");
        for (size_t r = 0; r < ab.cells.size(); ++r) {
            for (size_t c = 0; c < ab.cells[r].size(); ++c) {
                CHECK(ab.cells[r][c] == -ba.cells[r][c]);
            }
        }
    }
}

TEST_CASE("missing cells are reported") {
    std::vector<SettingResult> results = {
        SettingResult::from_percent_text("m1", "t1", "a", "50.00")};
    CHECK_THROWS_AS((void)eval::delta_matrix(results, "a", "b"), MissingCell);
}

TEST_CASE("cross-model improvements come from the fixture numbers") {
    auto fixture = eval::load_results_csv(fixture_path());
    std::vector<SettingResult> baselines;
    int64_t gpt4o_ours = 0, gpt4o_zcot = 0;
    for (const SettingResult& r : fixture) {
        if (r.dataset != "BBH-Induct") continue;
        if (r.method == "zcot") baselines.push_back(r);
        if (r.model == "GPT-4o" && r.method == "strategy-induct") {
            gpt4o_ours = r.percent_hundredths;
        }
        if (r.model == "GPT-4o" && r.method == "zcot") gpt4o_zcot = r.percent_hundredths;
    }
    // self-induced GPT-4o improvement over its own baseline
    std::vector<eval::CrossModelCell> induced = {{"GPT-4o", "GPT-4o", gpt4o_ours}};
    eval::CrossModelGrid grid = eval::cross_model_grid(induced, baselines);
    REQUIRE(grid.cells.size() == 1);
    CHECK(grid.cells[0][0] == gpt4o_ours - gpt4o_zcot);
    CHECK(eval::hundredths_to_percent(grid.cells[0][0]) == "3.53");
}

TEST_CASE("identical induced and baseline sets give a zero grid") {
    std::vector<SettingResult> baselines = {
        SettingResult::from_percent_text("m", "d", "zcot", "70.00")};
    std::vector<eval::CrossModelCell> induced = {{"m", "m", 7000}};
    eval::CrossModelGrid grid = eval::cross_model_grid(induced, baselines);
    CHECK(grid.cells[0][0] == 0);
}

TEST_CASE("a missing baseline is reported") {
    std::vector<eval::CrossModelCell> induced = {{"a", "b", 5000}};
    CHECK_THROWS_AS((void)eval::cross_model_grid(induced, {}), MissingBaseline);
}

}  // TEST_SUITE
