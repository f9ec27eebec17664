#include "taskinduct/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <thread>

#include <json.hpp>

#include "taskinduct/tag_parser.hpp"
#include "taskinduct/util.hpp"

namespace taskinduct::pipeline {

namespace {

using nlohmann::json;

// Bounded fan-out; exceptions are captured per index and rethrown by the
// caller in index order.
void parallel_for(size_t count, int workers,
                  const std::function<void(size_t)>& fn,
                  std::vector<std::exception_ptr>& errors) {
    errors.assign(count, nullptr);
    int thread_count = std::max(1, std::min<int>(workers, int(count)));
    if (thread_count == 1) {
        for (size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(size_t(thread_count));
    for (int t = 0; t < thread_count; ++t) {
        threads.emplace_back([&]() {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& thread : threads) thread.join();
}

// Request defaults are temperature 0 / top_p 1 unless the profile
// explicitly overrides them; a profile-pinned reasoning effort rides along.
llm::CompletionRequest make_request(const llm::ModelProfile& profile, std::string prompt) {
    llm::CompletionRequest req;
    req.profile = profile;
    req.prompt = std::move(prompt);
    if (profile.temperature) req.temperature = *profile.temperature;
    if (profile.top_p) req.top_p = *profile.top_p;
    req.reasoning_effort = profile.reasoning_effort;
    return req;
}

templates::TemplateKind inference_kind(Method method) {
    switch (method) {
        case Method::ZCoT: return templates::TemplateKind::InferenceZCoT;
        case Method::SCoT: return templates::TemplateKind::InferenceSCoT;
        case Method::InductBaseline:
        case Method::StrategyInduct: return templates::TemplateKind::InferenceInduced;
    }
    return templates::TemplateKind::InferenceZCoT;
}

}  // namespace

bool is_task_level(Method method) {
    return method == Method::InductBaseline || method == Method::StrategyInduct;
}

std::string_view to_string(Method method) {
    switch (method) {
        case Method::ZCoT: return "zcot";
        case Method::SCoT: return "scot";
        case Method::InductBaseline: return "induct";
        case Method::StrategyInduct: return "strategy-induct";
    }
    return "unknown";
}

std::optional<Method> method_from_string(std::string_view name) {
    std::string s = util::lower(name);
    if (s == "zcot") return Method::ZCoT;
    if (s == "scot") return Method::SCoT;
    if (s == "induct" || s == "induct-baseline") return Method::InductBaseline;
    if (s == "strategy-induct" || s == "strategy_induct" || s == "ours") {
        return Method::StrategyInduct;
    }
    return std::nullopt;
}

std::string InducedPrompt::to_json_text() const {
    json doc;
    doc["instruction"] = instruction;
    doc["task"] = task;
    doc["method"] = std::string(to_string(method));
    doc["inducing_model"] = inducing_model;
    doc["n"] = n;
    doc["seed"] = seed;
    doc["source_item_ids"] = source_item_ids;
    return doc.dump(2) + "\n";
}

InducedPrompt InducedPrompt::from_json_text(const std::string& text) {
    json doc = json::parse(text);
    InducedPrompt out;
    out.instruction = doc.at("instruction").get<std::string>();
    out.task = doc.at("task").get<std::string>();
    auto method = method_from_string(doc.at("method").get<std::string>());
    if (!method) throw ConfigError("unknown method in induced prompt artifact");
    out.method = *method;
    out.inducing_model = doc.at("inducing_model").get<std::string>();
    out.n = doc.at("n").get<int>();
    out.seed = doc.at("seed").get<uint64_t>();
    out.source_item_ids = doc.at("source_item_ids").get<std::vector<std::string>>();
    return out;
}

std::string InducedPrompt::digest() const {
    return util::sha256_hex(to_json_text());
}

std::string InducedPrompt::artifact_name(const std::string& task_key, Method method,
                                         const std::string& inducing_model, int n,
                                         uint64_t seed) {
    return util::slug(task_key) + "__" + std::string(to_string(method)) + "__" +
           util::slug(inducing_model) + "__n" + std::to_string(n) + "__seed" +
           std::to_string(seed) + ".json";
}

std::string InferenceRecord::to_json_line() const {
    json doc;
    doc["item_id"] = item_id;
    doc["method"] = std::string(to_string(method));
    doc["inference_model"] = inference_model;
    doc["prompt_digest"] = prompt_digest;
    doc["raw_response"] = raw_response;
    if (final_answer) doc["final_answer"] = *final_answer;
    if (correct) doc["correct"] = *correct;
    if (error) doc["error"] = *error;
    doc["task"] = task;
    doc["inducing_model"] = inducing_model;
    doc["n"] = n;
    doc["seed"] = seed;
    return doc.dump();
}

InferenceRecord InferenceRecord::from_json_line(const std::string& line) {
    json doc = json::parse(line);
    InferenceRecord out;
    out.item_id = doc.at("item_id").get<std::string>();
    auto method = method_from_string(doc.at("method").get<std::string>());
    if (!method) throw ConfigError("unknown method in inference record");
    out.method = *method;
    out.inference_model = doc.at("inference_model").get<std::string>();
    out.prompt_digest = doc.at("prompt_digest").get<std::string>();
    out.raw_response = doc.at("raw_response").get<std::string>();
    if (doc.contains("final_answer")) out.final_answer = doc["final_answer"].get<std::string>();
    if (doc.contains("correct")) out.correct = doc["correct"].get<bool>();
    if (doc.contains("error")) out.error = doc["error"].get<std::string>();
    out.task = doc.value("task", "");
    out.inducing_model = doc.value("inducing_model", "");
    out.n = doc.value("n", 0);
    out.seed = doc.value("seed", uint64_t(0));
    return out;
}

Pipeline::Pipeline(llm::Gateway& gateway, const templates::TemplateStore& store,
                   PipelineOptions options)
    : gateway_(gateway), store_(store), options_(std::move(options)) {
    if (options_.artifacts_dir) std::filesystem::create_directories(*options_.artifacts_dir);
}

llm::Completion Pipeline::complete_with_reask(const std::string& prompt,
                                              const llm::ModelProfile& model,
                                              const std::string& tag,
                                              std::optional<std::string>& extracted) {
    llm::CompletionRequest req = make_request(model, prompt);
    llm::Completion completion = gateway_.complete(req);
    extracted = tags::extract(completion.text, tag);
    // A cached malformed response never heals on its own, so re-asks
    // bypass the cache read and overwrite the entry.
    for (int attempt = 0; !extracted && attempt < options_.extraction_retries; ++attempt) {
        completion = gateway_.complete(req, /*refresh=*/true);
        extracted = tags::extract(completion.text, tag);
    }
    return completion;
}

std::vector<templates::StrategyPair> Pipeline::run_strategy_stage(
    const data::TaskSpec& task, int n, uint64_t seed, const llm::ModelProfile& model) {
    std::vector<data::QAItem> sampled = data::sample_items(task, n, seed);
    std::vector<templates::StrategyPair> pairs(sampled.size());

    std::vector<std::exception_ptr> errors;
    parallel_for(
        sampled.size(), options_.workers,
        [&](size_t i) {
            const data::QAItem& item = sampled[i];
            templates::SlotValues slots;
            slots.task_information = task.short_phrase;
            slots.answer_format = task.answer_format;
            slots.question = item.question;
            templates::PromptText prompt =
                store_.render(templates::TemplateKind::StrategyDesign, slots);

            std::optional<std::string> strategy;
            complete_with_reask(prompt.text, model, "strategy", strategy);
            if (!strategy) throw StrategyExtractionFailed(item.id);
            pairs[i] = templates::StrategyPair{item.question, *strategy, item.id};
        },
        errors);
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    return pairs;
}

InducedPrompt Pipeline::run_induct_stage(const data::TaskSpec& task,
                                         const std::vector<templates::StrategyPair>& pairs,
                                         const llm::ModelProfile& model, Method method) {
    if (!is_task_level(method)) {
        throw ConfigError("induct stage applies only to task-level methods");
    }
    if (pairs.empty()) throw EmptyPairs();

    templates::SlotValues slots;
    slots.task_information = task.short_phrase;
    slots.answer_format = task.answer_format;
    templates::TemplateKind kind;
    if (method == Method::StrategyInduct) {
        for (const auto& pair : pairs) {
            if (pair.strategy.empty()) {
                throw EmptyPairs();
            }
        }
        slots.examples_block = templates::serialize_pairs(pairs);
        kind = templates::TemplateKind::StrategyInduction;
    } else {
        std::vector<std::string> questions;
        questions.reserve(pairs.size());
        for (const auto& pair : pairs) questions.push_back(pair.question);
        slots.examples_block = templates::serialize_questions(questions);
        kind = templates::TemplateKind::InductBaseline;
    }
    templates::PromptText prompt = store_.render(kind, slots);

    std::optional<std::string> instruction;
    complete_with_reask(prompt.text, model, "task_instruction", instruction);
    if (!instruction) {
        throw InstructionExtractionFailed("no <task_instruction> block for task '" +
                                          task.key() + "' on " + model.label());
    }

    InducedPrompt induced;
    induced.instruction = *instruction;
    induced.task = task.key();
    induced.method = method;
    induced.inducing_model = model.label();
    induced.n = int(pairs.size());
    induced.seed = options_.seed;
    for (const auto& pair : pairs) induced.source_item_ids.push_back(pair.item_id);

    if (options_.artifacts_dir) {
        auto path = *options_.artifacts_dir /
                    InducedPrompt::artifact_name(induced.task, method,
                                                 induced.inducing_model, induced.n,
                                                 induced.seed);
        util::write_file_atomic(path, induced.to_json_text());
    }
    return induced;
}

InferenceRecord Pipeline::run_inference(const std::string& instruction_or_phrase,
                                        Method method, const data::QAItem& item,
                                        const std::string& answer_format,
                                        const llm::ModelProfile& model) {
    templates::SlotValues slots;
    slots.task_information = instruction_or_phrase;
    slots.answer_format = answer_format;
    slots.question = item.question;
    templates::PromptText prompt = store_.render(inference_kind(method), slots);

    llm::CompletionRequest req = make_request(model, prompt.text);

    InferenceRecord record;
    record.item_id = item.id;
    record.method = method;
    record.inference_model = model.label();
    record.prompt_digest = llm::cache_digest(req);
    try {
        llm::Completion completion = gateway_.complete(req);
        record.raw_response = completion.text;
        record.final_answer = tags::extract(completion.text, "final_answer");
    } catch (const BudgetExceeded&) {
        throw;
    } catch (const Error& e) {
        throw Error("item " + item.id + ": " + e.what());
    }
    return record;
}

InducedPrompt Pipeline::get_or_induce(const data::TaskSpec& task, Method method,
                                      const llm::ModelProfile& inducing_model) {
    const std::string name = InducedPrompt::artifact_name(
        task.key(), method, inducing_model.label(), options_.n, options_.seed);
    {
        std::lock_guard<std::mutex> lock(memo_mutex_);
        auto it = induced_memo_.find(name);
        if (it != induced_memo_.end()) return it->second;
    }
    if (options_.artifacts_dir) {
        auto path = *options_.artifacts_dir / name;
        if (std::filesystem::exists(path)) {
            InducedPrompt loaded = InducedPrompt::from_json_text(util::read_file(path));
            std::lock_guard<std::mutex> lock(memo_mutex_);
            induced_memo_.emplace(name, loaded);
            return loaded;
        }
    }

    std::vector<templates::StrategyPair> pairs;
    if (method == Method::StrategyInduct) {
        pairs = run_strategy_stage(task, options_.n, options_.seed, inducing_model);
    } else {
        for (const data::QAItem& item :
             data::sample_items(task, options_.n, options_.seed)) {
            pairs.push_back(templates::StrategyPair{item.question, "", item.id});
        }
    }
    InducedPrompt induced = run_induct_stage(task, pairs, inducing_model, method);
    std::lock_guard<std::mutex> lock(memo_mutex_);
    induced_memo_.emplace(name, induced);
    return induced;
}

MethodRunResult Pipeline::run_method(Method method, const data::TaskSpec& task,
                                     const llm::ModelProfile& inducing_model,
                                     const llm::ModelProfile& inference_model) {
    MethodRunResult result;

    std::string instruction;
    if (is_task_level(method)) {
        InducedPrompt induced = get_or_induce(task, method, inducing_model);
        instruction = induced.instruction;
        result.induced = std::move(induced);
    } else {
        instruction = task.short_phrase;
    }

    int m = int(std::min<size_t>(size_t(options_.sample_size), task.items.size()));
    std::vector<data::QAItem> items = data::sample_items(task, m, options_.seed);

    result.records.resize(items.size());
    std::vector<std::exception_ptr> errors;
    parallel_for(
        items.size(), options_.workers,
        [&](size_t i) {
            result.records[i] =
                run_inference(instruction, method, items[i], task.answer_format,
                              inference_model);
        },
        errors);

    for (size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const BudgetExceeded&) {
            throw;
        } catch (const std::exception& e) {
            InferenceRecord failed;
            failed.item_id = items[i].id;
            failed.method = method;
            failed.inference_model = inference_model.label();
            failed.error = e.what();
            result.records[i] = std::move(failed);
            result.failures.push_back(items[i].id + ": " + e.what());
        }
    }

    for (InferenceRecord& record : result.records) {
        record.task = task.key();
        record.inducing_model = is_task_level(method) ? inducing_model.label() : "";
        record.n = is_task_level(method) ? options_.n : 0;
        record.seed = options_.seed;
    }
    std::sort(result.records.begin(), result.records.end(),
              [](const InferenceRecord& a, const InferenceRecord& b) {
                  return a.item_id < b.item_id;
              });
    return result;
}

}  // namespace taskinduct::pipeline
