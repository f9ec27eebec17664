#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taskinduct/runtime.hpp"

#ifndef TASKINDUCT_DATA_DIR
#define TASKINDUCT_DATA_DIR ""
#endif

namespace {

using taskinduct::runtime::RunConfig;

struct RunFlags {
    std::string config_file;
    std::vector<std::string> methods;
    std::vector<int> n_values;
};

void add_run_options(CLI::App* cmd, RunConfig& config, RunFlags& flags) {
    cmd->add_option("--config", flags.config_file, "JSON run config; flags override it");
    cmd->add_option("--tasks", config.tasks_dir, "directory of task JSON files");
    cmd->add_option("--out", config.out_dir, "run directory for artifacts");
    cmd->add_option("--cache", config.cache_dir, "response cache directory");
    cmd->add_option("--templates", config.templates_dir, "prompt template fixture directory");
    cmd->add_option("--profiles", config.profiles_path, "model profile config (JSON)");
    cmd->add_option("--mock", config.mock_script, "mock backend script; makes runs offline");
    cmd->add_option("--method", flags.methods,
                    "methods to run: zcot, scot, induct, strategy-induct");
    cmd->add_option("--inducing-model", config.inducing_models,
                    "profile names that induce instructions");
    cmd->add_option("--inference-model", config.inference_models,
                    "profile names that answer questions");
    cmd->add_option("--n", flags.n_values, "example questions per induction (default 3)");
    cmd->add_option("--seed", config.seed, "sampling seed");
    cmd->add_option("--sample", config.sample_size, "evaluated items per task (default 25)");
    cmd->add_option("--budget", config.budget_cap, "spend cap in currency units");
    cmd->add_option("--workers", config.workers, "parallel completion workers");
    cmd->add_option("--retries", config.max_retries, "attempts per transient failure");
    cmd->add_option("--dataset-label", config.dataset_label, "dataset name in reports");
}

RunConfig finalize_config(const RunConfig& cli_config, const RunFlags& flags,
                          CLI::App* cmd) {
    RunConfig config;
    if (!flags.config_file.empty()) config = RunConfig::from_file(flags.config_file);

    auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };
    if (passed("--tasks")) config.tasks_dir = cli_config.tasks_dir;
    if (passed("--out")) config.out_dir = cli_config.out_dir;
    if (passed("--cache")) config.cache_dir = cli_config.cache_dir;
    if (passed("--templates")) config.templates_dir = cli_config.templates_dir;
    if (passed("--profiles")) config.profiles_path = cli_config.profiles_path;
    if (passed("--mock")) config.mock_script = cli_config.mock_script;
    if (passed("--inducing-model")) config.inducing_models = cli_config.inducing_models;
    if (passed("--inference-model")) config.inference_models = cli_config.inference_models;
    if (passed("--seed")) config.seed = cli_config.seed;
    if (passed("--sample")) config.sample_size = cli_config.sample_size;
    if (passed("--budget")) config.budget_cap = cli_config.budget_cap;
    if (passed("--workers")) config.workers = cli_config.workers;
    if (passed("--retries")) config.max_retries = cli_config.max_retries;
    if (passed("--dataset-label")) config.dataset_label = cli_config.dataset_label;
    if (!flags.methods.empty()) {
        config.methods.clear();
        for (const std::string& name : flags.methods) {
            auto method = taskinduct::pipeline::method_from_string(name);
            if (!method) throw taskinduct::ConfigError("unknown method: " + name);
            config.methods.push_back(*method);
        }
    }
    if (!flags.n_values.empty()) config.n_values = flags.n_values;
    if (config.out_dir.empty()) config.out_dir = "run";
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"question-only task instruction induction and evaluation"};
    app.require_subcommand(1);

    RunConfig cli_config;
    RunFlags flags;

    CLI::App* induce = app.add_subcommand("induce", "run strategy + induct stages");
    CLI::App* infer = app.add_subcommand("infer", "answer sampled questions per method");
    CLI::App* eval_cmd = app.add_subcommand("eval", "score records against gold answers");
    CLI::App* report = app.add_subcommand("report", "emit CSV/JSON reports and matrices");
    for (CLI::App* cmd : {induce, infer, eval_cmd, report}) {
        add_run_options(cmd, cli_config, flags);
    }

    std::filesystem::path data_dir(TASKINDUCT_DATA_DIR);

    CLI::App* gen = app.add_subcommand("gen-cipher", "generate shift-cipher task files");
    std::string words_path = (data_dir / "words7.txt").string();
    std::string gen_out = "tasks/shift_cipher";
    std::vector<int> ks;
    int word_limit = 0;
    gen->add_option("--words", words_path, "word corpus, one 7-letter word per line");
    gen->add_option("--out", gen_out, "output directory for task files");
    gen->add_option("--ks", ks, "shift values (default all of 1..25)");
    gen->add_option("--limit", word_limit, "use only the first N words");

    CLI::App* replay = app.add_subcommand(
        "replay-table1", "win-tie-lose records from a transcribed results fixture");
    std::string fixture_path = (data_dir / "table1.csv").string();
    replay->add_option("--fixture", fixture_path, "results CSV (model,dataset,method,accuracy)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : taskinduct::runtime::kExitUsage;
    }

    try {
        if (gen->parsed()) {
            if (ks.empty()) {
                for (int k = 1; k <= 25; ++k) ks.push_back(k);
            }
            return taskinduct::runtime::cmd_gen_cipher(words_path, ks, gen_out, word_limit);
        }
        if (replay->parsed()) {
            return taskinduct::runtime::cmd_replay_table1(fixture_path);
        }

        CLI::App* active = induce->parsed()   ? induce
                           : infer->parsed()  ? infer
                           : eval_cmd->parsed() ? eval_cmd
                                               : report;
        RunConfig config = finalize_config(cli_config, flags, active);
        if (induce->parsed()) return taskinduct::runtime::cmd_induce(config);
        if (infer->parsed()) return taskinduct::runtime::cmd_infer(config);
        if (eval_cmd->parsed()) return taskinduct::runtime::cmd_eval(config);
        return taskinduct::runtime::cmd_report(config);
    } catch (const taskinduct::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return taskinduct::runtime::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return taskinduct::runtime::kExitPartial;
    }
}
