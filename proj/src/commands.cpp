#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "taskinduct/runtime.hpp"
#include "taskinduct/util.hpp"

namespace taskinduct::runtime {

namespace {

using nlohmann::json;

struct Session {
    RunConfig config;
    templates::TemplateStore store;
    std::map<std::string, llm::ModelProfile> profiles;
    std::unique_ptr<llm::Gateway> gateway;
    std::vector<data::TaskSpec> tasks;
    std::string dataset_label;
};

Session open_session(const RunConfig& config, bool need_tasks) {
    Session session;
    session.config = config;

    std::filesystem::path templates_dir =
        config.templates_dir.empty() ? default_templates_dir() : config.templates_dir;
    if (templates_dir.empty()) {
        throw ConfigError("no template directory configured (--templates)");
    }
    session.store = templates::TemplateStore::load(templates_dir);

    if (!config.profiles_path.empty()) {
        session.profiles = llm::load_profiles(config.profiles_path);
    }

    std::unique_ptr<llm::Backend> backend;
    if (!config.mock_script.empty()) {
        backend = llm::MockBackend::from_file(config.mock_script);
    } else {
        backend = std::make_unique<llm::HttpBackend>();
    }
    llm::GatewayOptions options;
    options.cache_dir = config.cache_dir.empty()
                            ? std::filesystem::path("cache")
                            : config.cache_dir;
    options.budget_cap = config.budget_cap;
    options.max_retries = config.max_retries;
    session.gateway = std::make_unique<llm::Gateway>(std::move(backend), options);

    if (need_tasks) {
        if (config.tasks_dir.empty()) throw ConfigError("no task directory given (--tasks)");
        session.tasks = data::load_tasks(config.tasks_dir);
        if (session.tasks.empty()) {
            throw ConfigError("no task files in " + config.tasks_dir.string());
        }
    }
    session.dataset_label = config.dataset_label.empty()
                                ? config.tasks_dir.filename().string()
                                : config.dataset_label;
    return session;
}

const llm::ModelProfile& resolve_profile(Session& session, const std::string& name) {
    auto it = session.profiles.find(name);
    if (it != session.profiles.end()) return it->second;
    if (!session.config.mock_script.empty()) {
        // Mock runs work without a profiles file.
        llm::ModelProfile profile;
        profile.provider_id = "mock";
        profile.model_name = name;
        auto [pos, ok] = session.profiles.emplace(name, std::move(profile));
        return pos->second;
    }
    throw ConfigError("unknown model profile '" + name + "' (add it to --profiles)");
}

pipeline::PipelineOptions pipeline_options(const RunConfig& config, int n) {
    pipeline::PipelineOptions options;
    options.n = n;
    options.seed = config.seed;
    options.sample_size = config.sample_size;
    options.extraction_retries = config.extraction_retries;
    options.workers = config.workers;
    options.artifacts_dir = config.out_dir / "induced";
    return options;
}

void write_failures(const RunConfig& config, const std::vector<std::string>& failures) {
    if (failures.empty()) return;
    json doc;
    doc["failures"] = failures;
    util::write_file_atomic(config.out_dir / "logs" / "errors.json", doc.dump(2) + "\n");
}

void write_ledger(const Session& session) {
    session.gateway->write_ledger_csv(session.config.out_dir / "logs" / "ledger.csv");
}

std::string records_file_name(const data::TaskSpec& task, pipeline::Method method,
                              const std::string& inducing, const std::string& inference,
                              int n, uint64_t seed) {
    return util::slug(task.key()) + "__" + std::string(to_string(method)) + "__ind-" +
           util::slug(inducing.empty() ? "-" : inducing) + "__inf-" + util::slug(inference) +
           "__n" + std::to_string(n) + "__seed" + std::to_string(seed) + ".jsonl";
}

void write_records_file(const std::filesystem::path& path,
                        const std::vector<pipeline::InferenceRecord>& records) {
    std::ostringstream out;
    for (const auto& record : records) out << record.to_json_line() << '\n';
    util::write_file_atomic(path, out.str());
}

std::vector<pipeline::InferenceRecord> read_records_file(const std::filesystem::path& path) {
    std::vector<pipeline::InferenceRecord> records;
    for (const std::string& line : util::split_lines(util::read_file(path))) {
        if (util::trim(line).empty()) continue;
        records.push_back(pipeline::InferenceRecord::from_json_line(line));
    }
    return records;
}

}  // namespace

int cmd_induce(const RunConfig& config) {
    Session session = open_session(config, true);
    RunLock lock(config.out_dir);
    RunManifest manifest = RunManifest::load_or_create(config.out_dir, config);

    std::vector<std::string> failures;
    bool budget_hit = false;

    for (int n : config.n_values) {
        if (budget_hit) break;
        pipeline::Pipeline pipe(*session.gateway, session.store,
                                pipeline_options(config, n));
        for (pipeline::Method method : config.methods) {
            if (!pipeline::is_task_level(method) || budget_hit) continue;
            for (const data::TaskSpec& task : session.tasks) {
                if (budget_hit) break;
                for (const std::string& name : config.inducing_models) {
                    const llm::ModelProfile& profile = resolve_profile(session, name);
                    std::string key = RunManifest::induce_key(task.key(), method,
                                                              profile.label(), n,
                                                              config.seed);
                    std::string artifact =
                        "induced/" + pipeline::InducedPrompt::artifact_name(
                                         task.key(), method, profile.label(), n,
                                         config.seed);
                    if (manifest.entry(key).status >= EntryStatus::Induced &&
                        std::filesystem::exists(config.out_dir / artifact)) {
                        continue;
                    }
                    try {
                        pipe.get_or_induce(task, method, profile);
                        manifest.advance(key, EntryStatus::Induced, artifact);
                    } catch (const BudgetExceeded& e) {
                        manifest.advance(key, EntryStatus::Pending, "", e.what());
                        budget_hit = true;
                    } catch (const Error& e) {
                        manifest.advance(key, EntryStatus::Failed, "", e.what());
                        failures.push_back(key + ": " + e.what());
                    }
                    manifest.save();
                    if (budget_hit) break;
                }
            }
        }
    }

    manifest.save();
    write_failures(config, failures);
    write_ledger(session);
    if (budget_hit) {
        std::cerr << "induce: stopped at spend cap; rerun to resume\n";
        return kExitPartial;
    }
    return failures.empty() ? kExitOk : kExitPartial;
}

int cmd_infer(const RunConfig& config) {
    if (config.inference_models.empty()) {
        throw ConfigError("no inference models given (--inference-model)");
    }
    Session session = open_session(config, true);
    RunLock lock(config.out_dir);
    RunManifest manifest = RunManifest::load_or_create(config.out_dir, config);
    std::filesystem::create_directories(config.out_dir / "records");

    std::vector<std::string> failures;
    bool budget_hit = false;

    for (size_t n_index = 0; n_index < config.n_values.size() && !budget_hit; ++n_index) {
        int n = config.n_values[n_index];
        pipeline::Pipeline pipe(*session.gateway, session.store,
                                pipeline_options(config, n));
        for (pipeline::Method method : config.methods) {
            if (budget_hit) break;
            bool task_level = pipeline::is_task_level(method);
            // Instance-level methods do not depend on n; run them once.
            if (!task_level && n_index > 0) continue;

            std::vector<std::string> inducing_names =
                task_level ? config.inducing_models : std::vector<std::string>{""};
            if (task_level && inducing_names.empty()) {
                throw ConfigError("task-level method '" +
                                  std::string(to_string(method)) +
                                  "' needs --inducing-model");
            }

            for (const data::TaskSpec& task : session.tasks) {
                if (budget_hit) break;
                for (const std::string& ind_name : inducing_names) {
                    if (budget_hit) break;
                    const llm::ModelProfile* inducing = nullptr;
                    if (task_level) inducing = &resolve_profile(session, ind_name);
                    for (const std::string& inf_name : config.inference_models) {
                        const llm::ModelProfile& inference =
                            resolve_profile(session, inf_name);
                        std::string ind_label =
                            task_level ? inducing->label() : std::string("-");
                        int entry_n = task_level ? n : 0;
                        std::string key = RunManifest::infer_key(
                            task.key(), method, ind_label, inference.label(), entry_n,
                            config.seed);
                        std::string artifact =
                            "records/" + records_file_name(task, method,
                                                           task_level ? ind_label : "",
                                                           inference.label(), entry_n,
                                                           config.seed);
                        if (manifest.entry(key).status >= EntryStatus::Inferred &&
                            std::filesystem::exists(config.out_dir / artifact)) {
                            continue;
                        }
                        try {
                            pipeline::MethodRunResult result = pipe.run_method(
                                method, task, task_level ? *inducing : inference,
                                inference);
                            write_records_file(config.out_dir / artifact, result.records);
                            manifest.advance(key, EntryStatus::Inferred, artifact);
                            for (const std::string& failure : result.failures) {
                                failures.push_back(key + ": " + failure);
                            }
                        } catch (const BudgetExceeded& e) {
                            manifest.advance(key, EntryStatus::Pending, "", e.what());
                            budget_hit = true;
                        } catch (const Error& e) {
                            manifest.advance(key, EntryStatus::Failed, "", e.what());
                            failures.push_back(key + ": " + e.what());
                        }
                        manifest.save();
                        if (budget_hit) break;
                    }
                }
            }
        }
    }

    manifest.save();
    write_failures(config, failures);
    write_ledger(session);
    if (budget_hit) {
        std::cerr << "infer: stopped at spend cap; rerun to resume\n";
        return kExitPartial;
    }
    return failures.empty() ? kExitOk : kExitPartial;
}

int cmd_eval(const RunConfig& config) {
    Session session = open_session(config, true);
    RunLock lock(config.out_dir);
    RunManifest manifest = RunManifest::load_or_create(config.out_dir, config);

    std::map<std::string, const data::TaskSpec*> tasks_by_key;
    for (const data::TaskSpec& task : session.tasks) tasks_by_key[task.key()] = &task;

    std::filesystem::path records_dir = config.out_dir / "records";
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(records_dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(records_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw ConfigError("nothing to evaluate: no inference records under " +
                          records_dir.string());
    }

    json rows = json::array();
    for (const auto& file : files) {
        std::vector<pipeline::InferenceRecord> records = read_records_file(file);
        if (records.empty()) continue;
        const pipeline::InferenceRecord& head = records.front();
        auto task_it = tasks_by_key.find(head.task);
        if (task_it == tasks_by_key.end()) {
            throw ConfigError("records in " + file.filename().string() +
                              " reference unknown task '" + head.task +
                              "' (wrong --tasks directory?)");
        }
        const data::TaskSpec& task = *task_it->second;
        eval::SettingResult result =
            eval::accuracy(records, task, head.inference_model, task.key(),
                           std::string(to_string(head.method)));
        write_records_file(file, records);

        json row;
        row["model"] = head.inference_model;
        row["task"] = task.key();
        row["dataset"] = session.dataset_label;
        row["method"] = std::string(to_string(head.method));
        row["inducing_model"] = head.inducing_model;
        row["n"] = head.n;
        row["seed"] = head.seed;
        row["correct"] = result.correct;
        row["total"] = result.total;
        row["accuracy"] = result.render_percent();
        rows.push_back(std::move(row));

        std::string key = RunManifest::infer_key(
            task.key(), head.method,
            head.inducing_model.empty() ? "-" : head.inducing_model, head.inference_model,
            head.n, head.seed);
        manifest.advance(key, EntryStatus::Evaluated, "");
    }

    json doc;
    doc["dataset"] = session.dataset_label;
    doc["settings"] = std::move(rows);
    util::write_file_atomic(config.out_dir / "reports" / "settings.json",
                            doc.dump(2) + "\n");
    manifest.save();
    return kExitOk;
}

namespace {

struct EvalRow {
    std::string model, task, dataset, method, inducing_model;
    int n = 0;
    uint64_t seed = 0;
    long correct = 0, total = 0;
    int64_t percent = 0;
};

std::vector<EvalRow> load_eval_rows(const RunConfig& config) {
    auto path = config.out_dir / "reports" / "settings.json";
    if (!std::filesystem::exists(path)) {
        throw ConfigError("nothing to report: run eval first (missing " + path.string() +
                          ")");
    }
    json doc = json::parse(util::read_file(path));
    std::vector<EvalRow> rows;
    for (const json& r : doc.value("settings", json::array())) {
        EvalRow row;
        row.model = r.at("model").get<std::string>();
        row.task = r.at("task").get<std::string>();
        row.dataset = r.at("dataset").get<std::string>();
        row.method = r.at("method").get<std::string>();
        row.inducing_model = r.value("inducing_model", "");
        row.n = r.value("n", 0);
        row.seed = r.value("seed", uint64_t(0));
        row.correct = r.at("correct").get<long>();
        row.total = r.at("total").get<long>();
        row.percent = eval::percent_to_hundredths(r.at("accuracy").get<std::string>());
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
        return std::tie(a.method, a.model, a.inducing_model, a.n, a.task) <
               std::tie(b.method, b.model, b.inducing_model, b.n, b.task);
    });
    return rows;
}

int64_t macro_percent(const std::vector<int64_t>& percents) {
    if (percents.empty()) return 0;
    int64_t sum = 0;
    for (int64_t p : percents) sum += p;
    return (sum + int64_t(percents.size()) / 2) / int64_t(percents.size());
}

// Self-induced selection for a method at a fixed n (task-level), or the
// plain per-model rows (instance-level), sorted for alignment.
std::vector<eval::SettingResult> select_rows(const std::vector<EvalRow>& rows,
                                             const std::string& method, int n) {
    std::vector<eval::SettingResult> out;
    for (const EvalRow& row : rows) {
        if (row.method != method) continue;
        bool task_level = row.method == "induct" || row.method == "strategy-induct";
        if (task_level && (row.inducing_model != row.model || row.n != n)) continue;
        out.push_back(eval::SettingResult::from_counts(row.model, row.task, row.method,
                                                       row.correct, row.total));
    }
    std::sort(out.begin(), out.end(),
              [](const eval::SettingResult& a, const eval::SettingResult& b) {
                  return std::tie(a.model, a.dataset) < std::tie(b.model, b.dataset);
              });
    return out;
}

}  // namespace

int cmd_report(const RunConfig& config) {
    std::vector<EvalRow> rows = load_eval_rows(config);
    std::filesystem::path reports = config.out_dir / "reports";
    int primary_n = config.n_values.empty() ? 3 : config.n_values[0];

    // per-setting CSV
    {
        std::ostringstream csv;
        csv << "model,task,method,inducing_model,n,seed,correct,total,accuracy\n";
        for (const EvalRow& row : rows) {
            csv << row.model << ',' << row.task << ',' << row.method << ','
                << row.inducing_model << ',' << row.n << ',' << row.seed << ','
                << row.correct << ',' << row.total << ','
                << eval::hundredths_to_percent(row.percent) << '\n';
        }
        util::write_file_atomic(reports / "settings.csv", csv.str());
    }

    json report;
    report["dataset"] = rows.empty() ? "" : rows.front().dataset;
    report["seed"] = config.seed;
    report["sample_size"] = config.sample_size;

    json settings = json::array();
    for (const EvalRow& row : rows) {
        settings.push_back(json{{"model", row.model},
                                {"task", row.task},
                                {"method", row.method},
                                {"inducing_model", row.inducing_model},
                                {"n", row.n},
                                {"correct", row.correct},
                                {"total", row.total},
                                {"accuracy", eval::hundredths_to_percent(row.percent)}});
    }
    report["settings"] = std::move(settings);

    // aggregates per (method, model, inducing_model, n)
    std::map<std::tuple<std::string, std::string, std::string, int>,
             std::vector<const EvalRow*>>
        groups;
    for (const EvalRow& row : rows) {
        groups[{row.method, row.model, row.inducing_model, row.n}].push_back(&row);
    }
    json aggregates = json::array();
    for (const auto& [key, group] : groups) {
        std::vector<int64_t> percents;
        long correct = 0, total = 0;
        for (const EvalRow* row : group) {
            percents.push_back(row->percent);
            correct += row->correct;
            total += row->total;
        }
        aggregates.push_back(
            json{{"method", std::get<0>(key)},
                 {"model", std::get<1>(key)},
                 {"inducing_model", std::get<2>(key)},
                 {"n", std::get<3>(key)},
                 {"tasks", group.size()},
                 {"macro_accuracy", eval::hundredths_to_percent(macro_percent(percents))},
                 {"micro_correct", correct},
                 {"micro_total", total}});
    }
    report["aggregates"] = std::move(aggregates);

    // win-tie-lose of strategy-induct against each present baseline
    json wtl = json::object();
    auto ours = select_rows(rows, "strategy-induct", primary_n);
    if (!ours.empty()) {
        for (const char* baseline_name : {"zcot", "scot", "induct"}) {
            const std::string baseline = baseline_name;
            auto base = select_rows(rows, baseline, primary_n);
            if (base.empty()) continue;
            try {
                wtl["vs_" + baseline] = eval::win_tie_lose(ours, base).render();
            } catch (const MisalignedSettings&) {
                // methods were run over different settings; skip the record
            }
        }
    }
    report["win_tie_lose"] = std::move(wtl);

    // accuracy-delta matrix, ours minus each baseline
    if (!ours.empty()) {
        for (const char* baseline_name : {"zcot", "scot", "induct"}) {
            const std::string baseline = baseline_name;
            auto base = select_rows(rows, baseline, primary_n);
            if (base.empty()) continue;
            std::vector<eval::SettingResult> merged = ours;
            merged.insert(merged.end(), base.begin(), base.end());
            try {
                eval::DeltaMatrix matrix =
                    eval::delta_matrix(merged, "strategy-induct", baseline);
                util::write_file_atomic(reports / ("delta_vs_" + baseline + ".csv"),
                                        matrix.to_csv());
            } catch (const MissingCell&) {
            }
        }
    }

    // cross-model improvement grid over the zcot baseline
    {
        std::map<std::pair<std::string, std::string>, std::vector<int64_t>> induced;
        std::map<std::string, std::vector<int64_t>> baseline;
        for (const EvalRow& row : rows) {
            if (row.method == "strategy-induct" && row.n == primary_n) {
                induced[{row.inducing_model, row.model}].push_back(row.percent);
            } else if (row.method == "zcot") {
                baseline[row.model].push_back(row.percent);
            }
        }
        if (!induced.empty() && !baseline.empty()) {
            std::vector<eval::CrossModelCell> cells;
            for (const auto& [key, percents] : induced) {
                cells.push_back({key.first, key.second, macro_percent(percents)});
            }
            std::vector<eval::SettingResult> baselines;
            for (const auto& [model, percents] : baseline) {
                eval::SettingResult b;
                b.model = model;
                b.method = "zcot";
                b.percent_hundredths = macro_percent(percents);
                baselines.push_back(std::move(b));
            }
            try {
                eval::CrossModelGrid grid = eval::cross_model_grid(cells, baselines);
                util::write_file_atomic(reports / "cross_model.csv", grid.to_csv());
                json grid_json;
                grid_json["inducing_models"] = grid.inducing_models;
                grid_json["inference_models"] = grid.inference_models;
                json grid_cells = json::array();
                for (const auto& row : grid.cells) {
                    json cells_row = json::array();
                    for (int64_t cell : row) {
                        cells_row.push_back(eval::hundredths_to_percent(cell));
                    }
                    grid_cells.push_back(std::move(cells_row));
                }
                grid_json["improvement"] = std::move(grid_cells);
                report["cross_model"] = std::move(grid_json);
            } catch (const Error&) {
            }
        }
    }

    // N-ablation table: models down, one accuracy column per N
    {
        std::set<int> n_seen;
        for (const EvalRow& row : rows) {
            if (row.method == "strategy-induct" && row.n > 0) n_seen.insert(row.n);
        }
        if (n_seen.size() > 1) {
            std::map<std::string, std::map<int, std::vector<int64_t>>> by_model;
            for (const EvalRow& row : rows) {
                if (row.method != "strategy-induct") continue;
                if (row.inducing_model != row.model) continue;
                by_model[row.model][row.n].push_back(row.percent);
            }
            std::ostringstream csv;
            csv << "model";
            for (int n : n_seen) csv << ",N=" << n;
            csv << '\n';
            json ablation = json::array();
            for (const auto& [model, by_n] : by_model) {
                csv << model;
                json entry{{"model", model}};
                for (int n : n_seen) {
                    auto it = by_n.find(n);
                    std::string cell =
                        it == by_n.end()
                            ? ""
                            : eval::hundredths_to_percent(macro_percent(it->second));
                    csv << ',' << cell;
                    entry["N=" + std::to_string(n)] = cell;
                }
                csv << '\n';
                ablation.push_back(std::move(entry));
            }
            util::write_file_atomic(reports / "n_ablation.csv", csv.str());
            report["n_ablation"] = std::move(ablation);
        }
    }

    util::write_file_atomic(reports / "report.json", report.dump(2) + "\n");
    std::cout << "report written to " << (reports / "report.json").string() << "\n";
    return kExitOk;
}

int cmd_gen_cipher(const std::filesystem::path& words_path, const std::vector<int>& ks,
                   const std::filesystem::path& out_dir, int word_limit) {
    std::vector<std::string> words = data::load_word_list(words_path);
    if (word_limit > 0 && size_t(word_limit) < words.size()) {
        words.resize(size_t(word_limit));
    }
    std::vector<data::TaskSpec> tasks = data::build_cipher_tasks(words, ks);
    std::filesystem::create_directories(out_dir);
    for (size_t i = 0; i < tasks.size(); ++i) {
        char name[48];
        std::snprintf(name, sizeof(name), "shift_cipher_rot%02d.json", ks[i]);
        data::write_task_file(tasks[i], out_dir / name);
    }
    std::cout << "wrote " << tasks.size() << " cipher task files to " << out_dir.string()
              << "\n";
    return kExitOk;
}

int cmd_replay_table1(const std::filesystem::path& fixture_path) {
    std::vector<eval::SettingResult> fixture = eval::load_results_csv(fixture_path);
    eval::Table1Replay replay = eval::replay_table1(fixture);
    std::cout << "vs ZCoT: " << replay.vs_zcot.render() << "\n"
              << "vs INDUCT: " << replay.vs_induct.render() << "\n"
              << "vs SCoT: " << replay.vs_scot.render() << "\n"
              << "small models vs INDUCT: " << replay.small_models_vs_induct.render()
              << "\n";
    return kExitOk;
}

}  // namespace taskinduct::runtime
