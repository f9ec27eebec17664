#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "taskinduct/dataset.hpp"
#include "taskinduct/gateway.hpp"
#include "taskinduct/templates.hpp"

namespace taskinduct::pipeline {

enum class Method { ZCoT, SCoT, InductBaseline, StrategyInduct };

/// ZCoT and SCoT solve each question independently; the other two induce
/// one reusable instruction per task before inference.
bool is_task_level(Method method);

std::string_view to_string(Method method);
std::optional<Method> method_from_string(std::string_view name);

/// A reusable task instruction plus full provenance.
struct InducedPrompt {
    std::string instruction;
    std::string task;
    Method method = Method::StrategyInduct;
    std::string inducing_model;
    int n = 0;
    uint64_t seed = 0;
    std::vector<std::string> source_item_ids;

    std::string to_json_text() const;
    static InducedPrompt from_json_text(const std::string& text);

    /// Content digest of the canonical serialization.
    std::string digest() const;

    /// Artifact file name under the induced/ directory.
    static std::string artifact_name(const std::string& task_key, Method method,
                                     const std::string& inducing_model, int n,
                                     uint64_t seed);
};

struct InferenceRecord {
    std::string item_id;
    Method method = Method::ZCoT;
    std::string inference_model;
    std::string prompt_digest;
    std::string raw_response;
    std::optional<std::string> final_answer;
    std::optional<bool> correct;
    std::optional<std::string> error;

    // run provenance
    std::string task;
    std::string inducing_model;
    int n = 0;
    uint64_t seed = 0;

    std::string to_json_line() const;
    static InferenceRecord from_json_line(const std::string& line);
};

struct MethodRunResult {
    std::optional<InducedPrompt> induced;
    std::vector<InferenceRecord> records;  // sorted by item id
    std::vector<std::string> failures;     // "item_id: message"
};

struct PipelineOptions {
    int n = 3;
    uint64_t seed = 0;
    int sample_size = 25;
    int extraction_retries = 1;  // re-asks after a missing tag
    int workers = 4;
    std::optional<std::filesystem::path> artifacts_dir;  // induced-prompt store
};

/// Strategy stage, induct stage and inference over a gateway.
class Pipeline {
public:
    Pipeline(llm::Gateway& gateway, const templates::TemplateStore& store,
             PipelineOptions options);

    /// One strategy per sampled question, in sampling order.
    std::vector<templates::StrategyPair> run_strategy_stage(const data::TaskSpec& task,
                                                            int n, uint64_t seed,
                                                            const llm::ModelProfile& model);

    /// Renders the induction template over the serialized pairs and
    /// extracts the task instruction. InductBaseline ignores strategies.
    InducedPrompt run_induct_stage(const data::TaskSpec& task,
                                   const std::vector<templates::StrategyPair>& pairs,
                                   const llm::ModelProfile& model, Method method);

    /// Single-question inference. Instance-level methods pass the Short
    /// Phrase as instruction_or_phrase, task-level methods the induced
    /// instruction.
    InferenceRecord run_inference(const std::string& instruction_or_phrase, Method method,
                                  const data::QAItem& item, const std::string& answer_format,
                                  const llm::ModelProfile& model);

    /// Full method run over a task: induce (at most once per artifact
    /// key), then fan inference over the evaluation sample. Per-item
    /// failures are collected, not thrown; BudgetExceeded aborts.
    MethodRunResult run_method(Method method, const data::TaskSpec& task,
                               const llm::ModelProfile& inducing_model,
                               const llm::ModelProfile& inference_model);

    /// Loads the persisted induced prompt if present, else induces and
    /// persists it.
    InducedPrompt get_or_induce(const data::TaskSpec& task, Method method,
                                const llm::ModelProfile& inducing_model);

    const PipelineOptions& options() const { return options_; }

private:
    llm::Completion complete_with_reask(const std::string& prompt,
                                        const llm::ModelProfile& model,
                                        const std::string& tag,
                                        std::optional<std::string>& extracted);

    llm::Gateway& gateway_;
    const templates::TemplateStore& store_;
    PipelineOptions options_;

    std::mutex memo_mutex_;
    std::map<std::string, InducedPrompt> induced_memo_;
};

}  // namespace taskinduct::pipeline
