#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "taskinduct/runtime.hpp"
#include "taskinduct/util.hpp"
#include "test_helpers.hpp"

using namespace taskinduct;
using test_helpers::TempDir;

namespace {

std::filesystem::path source_dir() { return TASKINDUCT_SOURCE_DIR; }

std::string run_cli(const std::string& args) {
    std::string cmd = std::string(TASKINDUCT_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[512];
    while (fgets(buf, sizeof(buf), pipe) != nullptr) out += buf;
    pclose(pipe);
    return out;
}

// Three tiny synthetic tasks plus a mock script that answers every stage.
void write_tasks(const std::filesystem::path& dir, int task_count, int items) {
    std::filesystem::create_directories(dir);
    for (int t = 0; t < task_count; ++t) {
        nlohmann::json doc;
        std::string name = "synthetic-" + std::to_string(t);
        doc["task"] = name;
        doc["short_phrase"] = "Synthetic " + std::to_string(t);
        doc["answer_format"] = "a single word";
        doc["items"] = nlohmann::json::array();
        for (int i = 0; i < items; ++i) {
            char id[16];
            std::snprintf(id, sizeof(id), "q%02d", i);
            doc["items"].push_back({{"id", id},
                                    {"question", name + " question " + std::to_string(i)},
                                    {"gold", "ok" + std::to_string(i % 3)}});
        }
        util::write_file(dir / (name + ".json"), doc.dump(2));
    }
}

void write_script(const std::filesystem::path& path, int task_count, int items) {
    nlohmann::json script = nlohmann::json::array();
    for (int t = 0; t < task_count; ++t) {
        std::string name = "synthetic-" + std::to_string(t);
        for (int i = 0; i < items; ++i) {
            std::string question = name + " question " + std::to_string(i);
            script.push_back(
                {{"substring", "<question>\n" + question + "\n</question>"},
                 {"response",
                  "<strategy>plan " + std::to_string(i) + " for " + name + "</strategy>"}});
            // answers alternate so accuracies are non-trivial
            std::string answer = i % 2 == 0 ? "ok" + std::to_string(i % 3) : "wrong";
            script.push_back({{"substring", "[Question]\n" + question + "\n"},
                              {"response", "<deduction>d</deduction><final_answer>" +
                                               answer + "</final_answer>"}});
        }
        script.push_back(
            {{"substring",
              nlohmann::json::array({"inductively deriving better solution rules", name})},
             {"response", "<task_instruction>steps for " + name + "</task_instruction>"}});
        script.push_back(
            {{"substring", nlohmann::json::array({"extracting significant rules", name})},
             {"response", "<task_instruction>rules for " + name + "</task_instruction>"}});
    }
    util::write_file(path, script.dump(2));
}

runtime::RunConfig base_config(const std::filesystem::path& root) {
    runtime::RunConfig config;
    config.tasks_dir = root / "tasks";
    config.out_dir = root / "run";
    config.cache_dir = root / "cache";
    config.templates_dir = source_dir() / "templates";
    config.mock_script = root / "mock.json";
    config.methods = {pipeline::Method::ZCoT, pipeline::Method::StrategyInduct};
    config.inducing_models = {"model-a"};
    config.inference_models = {"model-a"};
    config.n_values = {2};
    config.sample_size = 4;
    config.workers = 2;
    config.dataset_label = "synthetic";
    return config;
}

// Digest of every artifact byte under the given subdirectories.
std::string artifacts_digest(const std::filesystem::path& out_dir) {
    std::vector<std::string> parts;
    for (const char* sub : {"induced", "records", "reports"}) {
        auto dir = out_dir / sub;
        if (!std::filesystem::is_directory(dir)) continue;
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            parts.push_back(file.lexically_relative(out_dir).string() + ":" +
                            util::sha256_hex(util::read_file(file)));
        }
    }
    std::string blob;
    for (const auto& part : parts) blob += part + "\n";
    return util::sha256_hex(blob);
}

int ledger_provider_rows(const std::filesystem::path& out_dir) {
    int fresh = 0;
    for (const std::string& line :
         util::split_lines(util::read_file(out_dir / "logs" / "ledger.csv"))) {
        if (line.empty() || line.rfind("provider_id", 0) == 0) continue;
        if (line.size() >= 2 && line.substr(line.size() - 2) == ",0") ++fresh;
    }
    return fresh;
}

}  // namespace

TEST_SUITE("runtime") {

TEST_CASE("gen-cipher writes one oracle-consistent task file per shift") {
    TempDir root("rt_cipher");
    std::vector<int> ks;
    for (int k = 1; k <= 25; ++k) ks.push_back(k);
    int code = runtime::cmd_gen_cipher(source_dir() / "data" / "words7.txt", ks,
                                       root.path / "tasks", 25);
    CHECK(code == 0);
    auto tasks = data::load_tasks(root.path / "tasks");
    REQUIRE(tasks.size() == 25);
    for (const auto& task : tasks) {
        CHECK(task.items.size() == 25);
        CHECK(task.short_phrase == "Shift Cipher");
    }
    // spot-check golds decode from questions
    data::TaskSpec rot13 = data::load_task_file(root.path / "tasks" /
                                                "shift_cipher_rot13.json");
    for (const auto& item : rot13.items) {
        CHECK(data::rot_decode(item.question, 13) == *item.gold);
    }
}

TEST_CASE("eval with no inference artifacts is an explicit error") {
    TempDir root("rt_eval_empty");
    write_tasks(root.path / "tasks", 1, 4);
    write_script(root.path / "mock.json", 1, 4);
    runtime::RunConfig config = base_config(root.path);
    try {
        (void)runtime::cmd_eval(config);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(util::contains(e.what(), "nothing to evaluate"));
    }
}

TEST_CASE("report before eval is an explicit error") {
    TempDir root("rt_report_empty");
    write_tasks(root.path / "tasks", 1, 4);
    write_script(root.path / "mock.json", 1, 4);
    CHECK_THROWS_AS((void)runtime::cmd_report(base_config(root.path)), ConfigError);
}

TEST_CASE("full mock pipeline: induce, infer, eval, report") {
    TempDir root("rt_full");
    write_tasks(root.path / "tasks", 3, 6);
    write_script(root.path / "mock.json", 3, 6);
    runtime::RunConfig config = base_config(root.path);

    CHECK(runtime::cmd_induce(config) == 0);
    // one induced artifact per (task, strategy-induct, model, n, seed)
    int induced_files = 0;
    for (const auto& entry :
         std::filesystem::directory_iterator(config.out_dir / "induced")) {
        (void)entry;
        ++induced_files;
    }
    CHECK(induced_files == 3);

    CHECK(runtime::cmd_infer(config) == 0);
    int record_files = 0;
    for (const auto& entry :
         std::filesystem::directory_iterator(config.out_dir / "records")) {
        (void)entry;
        ++record_files;
    }
    CHECK(record_files == 6);  // 3 tasks x {zcot, strategy-induct}

    CHECK(runtime::cmd_eval(config) == 0);
    nlohmann::json settings = nlohmann::json::parse(
        util::read_file(config.out_dir / "reports" / "settings.json"));
    CHECK(settings["settings"].size() == 6);
    for (const auto& row : settings["settings"]) {
        CHECK(row["total"].get<long>() == 4);
        // sample holds questions 0..5; answers for even questions match gold
        CHECK(row["accuracy"].is_string());
    }

    CHECK(runtime::cmd_report(config) == 0);
    nlohmann::json report = nlohmann::json::parse(
        util::read_file(config.out_dir / "reports" / "report.json"));
    CHECK(report["settings"].size() == 6);
    CHECK(report["win_tie_lose"].contains("vs_zcot"));
    CHECK(std::filesystem::exists(config.out_dir / "reports" / "settings.csv"));
    CHECK(std::filesystem::exists(config.out_dir / "reports" / "delta_vs_zcot.csv"));
    CHECK(std::filesystem::exists(config.out_dir / "manifest.json"));
}

TEST_CASE("all four methods run through the command flow") {
    TempDir root("rt_methods");
    write_tasks(root.path / "tasks", 2, 5);
    write_script(root.path / "mock.json", 2, 5);
    runtime::RunConfig config = base_config(root.path);
    config.methods = {pipeline::Method::ZCoT, pipeline::Method::SCoT,
                      pipeline::Method::InductBaseline,
                      pipeline::Method::StrategyInduct};

    CHECK(runtime::cmd_induce(config) == 0);
    int induced_files = 0;
    for (const auto& entry :
         std::filesystem::directory_iterator(config.out_dir / "induced")) {
        (void)entry;
        ++induced_files;
    }
    CHECK(induced_files == 4);  // 2 tasks x {induct, strategy-induct}

    CHECK(runtime::cmd_infer(config) == 0);
    CHECK(runtime::cmd_eval(config) == 0);
    CHECK(runtime::cmd_report(config) == 0);

    nlohmann::json report = nlohmann::json::parse(
        util::read_file(config.out_dir / "reports" / "report.json"));
    CHECK(report["settings"].size() == 8);  // 2 tasks x 4 methods
    CHECK(report["win_tie_lose"].contains("vs_zcot"));
    CHECK(report["win_tie_lose"].contains("vs_scot"));
    CHECK(report["win_tie_lose"].contains("vs_induct"));
    for (const char* baseline : {"zcot", "scot", "induct"}) {
        CHECK(std::filesystem::exists(config.out_dir / "reports" /
                                      ("delta_vs_" + std::string(baseline) + ".csv")));
    }
}

TEST_CASE("cross-model runs reuse induced prompts and fill the grid") {
    TempDir root("rt_cross");
    write_tasks(root.path / "tasks", 2, 5);
    write_script(root.path / "mock.json", 2, 5);
    runtime::RunConfig config = base_config(root.path);
    config.inducing_models = {"model-a", "model-b"};
    config.inference_models = {"model-a", "model-b"};

    CHECK(runtime::cmd_induce(config) == 0);
    CHECK(runtime::cmd_infer(config) == 0);
    CHECK(runtime::cmd_eval(config) == 0);
    CHECK(runtime::cmd_report(config) == 0);

    int record_files = 0;
    for (const auto& entry :
         std::filesystem::directory_iterator(config.out_dir / "records")) {
        (void)entry;
        ++record_files;
    }
    // zcot: 2 tasks x 2 inference; strategy-induct: 2 tasks x 2 x 2 pairs
    CHECK(record_files == 4 + 8);

    std::string grid = util::read_file(config.out_dir / "reports" / "cross_model.csv");
    auto lines = util::split_lines(grid);
    REQUIRE(lines.size() >= 3);
    CHECK(lines[0] == "inducing_model,model-a,model-b");
    CHECK(lines[1].rfind("model-a,", 0) == 0);
    CHECK(lines[2].rfind("model-b,", 0) == 0);
}

TEST_CASE("induce over 23 tasks writes 23 artifacts within the call budget") {
    TempDir root("rt_23");
    write_tasks(root.path / "tasks", 23, 4);
    write_script(root.path / "mock.json", 23, 4);
    runtime::RunConfig config = base_config(root.path);
    config.methods = {pipeline::Method::StrategyInduct};
    config.n_values = {3};

    CHECK(runtime::cmd_induce(config) == 0);
    int artifacts = 0;
    for (const auto& entry :
         std::filesystem::directory_iterator(config.out_dir / "induced")) {
        (void)entry;
        ++artifacts;
    }
    CHECK(artifacts == 23);
    // n strategy calls + 1 induct call per task, nothing else
    CHECK(ledger_provider_rows(config.out_dir) == 23 * 4);
}

TEST_CASE("rerunning completed stages issues zero provider calls") {
    TempDir root("rt_idem");
    write_tasks(root.path / "tasks", 2, 5);
    write_script(root.path / "mock.json", 2, 5);
    runtime::RunConfig config = base_config(root.path);

    CHECK(runtime::cmd_induce(config) == 0);
    CHECK(runtime::cmd_infer(config) == 0);
    CHECK(ledger_provider_rows(config.out_dir) > 0);

    // completed entries are skipped outright, so the ledger stays empty
    CHECK(runtime::cmd_induce(config) == 0);
    CHECK(runtime::cmd_infer(config) == 0);
    CHECK(ledger_provider_rows(config.out_dir) == 0);
}

TEST_CASE("deleting the run directory reproduces identical artifacts from cache") {
    TempDir root("rt_rebuild");
    write_tasks(root.path / "tasks", 2, 5);
    write_script(root.path / "mock.json", 2, 5);
    runtime::RunConfig config = base_config(root.path);

    auto run_all = [&]() {
        REQUIRE(runtime::cmd_induce(config) == 0);
        REQUIRE(runtime::cmd_infer(config) == 0);
        REQUIRE(runtime::cmd_eval(config) == 0);
        REQUIRE(runtime::cmd_report(config) == 0);
    };
    run_all();
    std::string first = artifacts_digest(config.out_dir);

    std::filesystem::remove_all(config.out_dir);
    run_all();
    CHECK(ledger_provider_rows(config.out_dir) == 0);  // warm cache, zero fresh calls
    CHECK(artifacts_digest(config.out_dir) == first);
}

TEST_CASE("a budget interrupt resumes to the same artifacts as a straight run") {
    TempDir root("rt_budget");
    write_tasks(root.path / "tasks", 2, 5);
    write_script(root.path / "mock.json", 2, 5);
    util::write_file(root.path / "profiles.json", R"({
        "profiles": {
            "model-a": {"provider_id": "mock", "model_name": "model-a",
                         "price_in": 0.0, "price_out": 1000.0,
                         "max_output_tokens": 1000}
        }
    })");

    // straight run
    runtime::RunConfig straight = base_config(root.path);
    straight.out_dir = root.path / "run_straight";
    straight.cache_dir = root.path / "cache_straight";
    straight.profiles_path = root.path / "profiles.json";
    REQUIRE(runtime::cmd_induce(straight) == 0);
    REQUIRE(runtime::cmd_infer(straight) == 0);
    REQUIRE(runtime::cmd_eval(straight) == 0);
    REQUIRE(runtime::cmd_report(straight) == 0);

    // interrupted run: the cap stops induction partway
    runtime::RunConfig capped = base_config(root.path);
    capped.out_dir = root.path / "run_resumed";
    capped.cache_dir = root.path / "cache_resumed";
    capped.profiles_path = root.path / "profiles.json";
    capped.budget_cap = 1.01;
    CHECK(runtime::cmd_induce(capped) == 1);

    nlohmann::json manifest = nlohmann::json::parse(
        util::read_file(capped.out_dir / "manifest.json"));
    bool has_pending = false;
    for (const auto& [key, entry] : manifest["entries"].items()) {
        if (entry["status"] == "pending") has_pending = true;
    }
    CHECK(has_pending);

    // resume without the cap and finish every stage
    runtime::RunConfig resumed = capped;
    resumed.budget_cap.reset();
    REQUIRE(runtime::cmd_induce(resumed) == 0);
    REQUIRE(runtime::cmd_infer(resumed) == 0);
    REQUIRE(runtime::cmd_eval(resumed) == 0);
    REQUIRE(runtime::cmd_report(resumed) == 0);

    CHECK(artifacts_digest(resumed.out_dir) == artifacts_digest(straight.out_dir));
}

TEST_CASE("manifest status only moves forward and saves atomically") {
    TempDir root("rt_manifest");
    runtime::RunConfig config = base_config(root.path);
    config.out_dir = root.path / "m";
    std::filesystem::create_directories(config.out_dir);
    runtime::RunManifest manifest =
        runtime::RunManifest::load_or_create(config.out_dir, config);
    manifest.advance("k", runtime::EntryStatus::Inferred, "records/x.jsonl");
    manifest.advance("k", runtime::EntryStatus::Induced);  // regression, ignored
    CHECK(manifest.entry("k").status == runtime::EntryStatus::Inferred);
    manifest.advance("k", runtime::EntryStatus::Evaluated);
    CHECK(manifest.entry("k").status == runtime::EntryStatus::Evaluated);
    manifest.save();
    CHECK(std::filesystem::exists(config.out_dir / "manifest.json"));
    CHECK(!std::filesystem::exists(config.out_dir / "manifest.json.tmp"));

    runtime::RunManifest reloaded =
        runtime::RunManifest::load_or_create(config.out_dir, config);
    CHECK(reloaded.entry("k").status == runtime::EntryStatus::Evaluated);
    CHECK(reloaded.entry("k").artifact == "records/x.jsonl");
}

TEST_CASE("one process owns the run directory") {
    TempDir root("rt_lock");
    auto dir = root.path / "run";
    runtime::RunLock lock(dir);
    CHECK_THROWS_AS(runtime::RunLock{dir}, ConfigError);
}

TEST_CASE("n-ablation over N in {1,3,5} emits a models-by-N table") {
    TempDir root("rt_ablation");
    write_tasks(root.path / "tasks", 2, 8);
    write_script(root.path / "mock.json", 2, 8);
    runtime::RunConfig config = base_config(root.path);
    config.methods = {pipeline::Method::StrategyInduct};
    config.n_values = {1, 3, 5};
    config.sample_size = 6;

    REQUIRE(runtime::cmd_induce(config) == 0);
    REQUIRE(runtime::cmd_infer(config) == 0);
    REQUIRE(runtime::cmd_eval(config) == 0);
    REQUIRE(runtime::cmd_report(config) == 0);

    std::string csv = util::read_file(config.out_dir / "reports" / "n_ablation.csv");
    auto lines = util::split_lines(csv);
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] == "model,N=1,N=3,N=5");
    CHECK(lines[1].rfind("model-a,", 0) == 0);
    // one accuracy cell per N column
    CHECK(std::count(lines[1].begin(), lines[1].end(), ',') == 3);
}

TEST_CASE("the installed binary handles the replay and cipher subcommands") {
    std::string replay = run_cli("replay-table1 --fixture " +
                                 (source_dir() / "data" / "table1.csv").string());
    CHECK(util::contains(replay, "vs ZCoT: 50-3-7"));
    CHECK(util::contains(replay, "vs INDUCT: 44-3-13"));
    CHECK(util::contains(replay, "vs SCoT: 52-0-8"));
    CHECK(util::contains(replay, "small models vs INDUCT: 10-3-2"));

    TempDir root("rt_cli_gen");
    std::string gen = run_cli("gen-cipher --words " +
                              (source_dir() / "data" / "words7.txt").string() + " --out " +
                              (root.path / "tasks").string() + " --ks 3 --ks 13");
    CHECK(util::contains(gen, "wrote 2 cipher task files"));
    CHECK(std::filesystem::exists(root.path / "tasks" / "shift_cipher_rot03.json"));

    std::string usage = run_cli("definitely-not-a-command");
    CHECK(!usage.empty());
}

}  // TEST_SUITE
