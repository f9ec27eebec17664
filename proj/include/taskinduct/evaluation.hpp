#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskinduct/dataset.hpp"
#include "taskinduct/errors.hpp"
#include "taskinduct/pipeline.hpp"

namespace taskinduct::eval {

enum class MatchPolicy { OptionLetter, ExactNormalized, NumericTolerant };

std::string_view to_string(MatchPolicy policy);
std::optional<MatchPolicy> match_policy_from_string(std::string_view name);

/// Task-file override wins; otherwise option-style answer formats get
/// OptionLetter and everything else ExactNormalized.
MatchPolicy resolve_policy(const data::TaskSpec& task);

/// Absent extraction is always a miss.
bool match_answer(const std::optional<std::string>& extracted, const std::string& gold,
                  MatchPolicy policy, double epsilon = 1e-6);

/// Accuracy of one (model, dataset/task, method) setting. Exact counts
/// are retained; the percentage is kept in hundredths (2-decimal fixed
/// point), matching the precision the reported records are computed at.
struct SettingResult {
    std::string model;
    std::string dataset;
    std::string method;
    long correct = -1;  // -1 when transcribed from published numbers
    long total = -1;
    int64_t percent_hundredths = 0;

    static SettingResult from_counts(std::string model, std::string dataset,
                                     std::string method, long correct, long total);
    static SettingResult from_percent_text(std::string model, std::string dataset,
                                           std::string method, const std::string& percent);

    /// Two-decimal percentage string, e.g. "65.33".
    std::string render_percent() const;
};

/// Exact percent-string parse: "65.33" -> 6533.
int64_t percent_to_hundredths(const std::string& percent);
std::string hundredths_to_percent(int64_t value);

/// Scores records against the task's gold answers (MissingGold when a
/// record's item lacks one) and fills each record's correct flag.
SettingResult accuracy(std::vector<pipeline::InferenceRecord>& records,
                       const data::TaskSpec& task, const std::string& model,
                       const std::string& dataset, const std::string& method);

struct WTLRecord {
    long wins = 0;
    long ties = 0;
    long losses = 0;
    std::string render() const;  // "50-3-7"
};

/// Pairwise comparison over settings aligned on (model, dataset), at
/// 2-decimal percentage precision.
WTLRecord win_tie_lose(const std::vector<SettingResult>& ours,
                       const std::vector<SettingResult>& baseline);

struct DeltaMatrix {
    std::vector<std::string> models;           // rows
    std::vector<std::string> subtasks;         // columns
    std::vector<std::vector<int64_t>> cells;   // hundredths, a minus b
    std::string to_csv() const;
};

/// Accuracy deltas method_a minus method_b per (model, subtask) cell;
/// positive means method_a wins.
DeltaMatrix delta_matrix(const std::vector<SettingResult>& results,
                         const std::string& method_a, const std::string& method_b);

struct CrossModelCell {
    std::string inducing_model;
    std::string inference_model;
    int64_t percent_hundredths = 0;
};

struct CrossModelGrid {
    std::vector<std::string> inducing_models;   // rows
    std::vector<std::string> inference_models;  // columns
    std::vector<std::vector<int64_t>> cells;    // improvement vs own baseline
    std::string to_csv() const;
};

/// Improvement of each (inducing -> inference) pairing over the inference
/// model's own instance-level baseline.
CrossModelGrid cross_model_grid(const std::vector<CrossModelCell>& induced,
                                const std::vector<SettingResult>& baselines);

/// CSV with header model,dataset,method,accuracy; used for transcribed
/// published results.
std::vector<SettingResult> load_results_csv(const std::filesystem::path& path);

/// The five small models called out in the cross-size comparison.
inline constexpr std::array<std::string_view, 5> kSmallModels = {
    "Llama 3.1 8B", "Mistral Nemo 12B", "Gemini 1.5 Flash 8B",
    "Gemini 2.0 Flash Lite", "GPT-4o mini"};

struct Table1Replay {
    WTLRecord vs_zcot;
    WTLRecord vs_induct;
    WTLRecord vs_scot;
    WTLRecord small_models_vs_induct;
};

/// Win-tie-lose records of the strategy-induct column against each
/// baseline column of a transcribed results fixture.
Table1Replay replay_table1(const std::vector<SettingResult>& fixture);

}  // namespace taskinduct::eval
