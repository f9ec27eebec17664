#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "taskinduct/dataset.hpp"
#include "taskinduct/evaluation.hpp"
#include "taskinduct/gateway.hpp"
#include "taskinduct/pipeline.hpp"
#include "taskinduct/templates.hpp"

namespace taskinduct::runtime {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
    std::filesystem::path tasks_dir;
    std::filesystem::path out_dir;
    std::filesystem::path cache_dir;
    std::filesystem::path templates_dir;   // empty -> built-in fixture directory
    std::filesystem::path profiles_path;   // empty + mock -> synthesized profiles
    std::filesystem::path mock_script;     // non-empty selects the mock backend
    std::vector<pipeline::Method> methods{pipeline::Method::StrategyInduct};
    std::vector<std::string> inducing_models;
    std::vector<std::string> inference_models;
    std::vector<int> n_values{3};
    uint64_t seed = 0;
    int sample_size = 25;
    std::optional<double> budget_cap;
    int workers = 4;
    int max_retries = 3;
    int extraction_retries = 1;
    std::string dataset_label;  // defaults to tasks_dir filename

    static RunConfig from_file(const std::filesystem::path& path);
    std::string to_json_text() const;
};

enum class EntryStatus { Pending, Induced, Inferred, Evaluated, Failed };

std::string_view to_string(EntryStatus status);
EntryStatus entry_status_from_string(std::string_view s);

struct ManifestEntry {
    EntryStatus status = EntryStatus::Pending;
    std::string artifact;  // path relative to out_dir
    std::string error;
};

/// Per-run progress of every (task, method, model-pair) unit, rewritten
/// atomically so an interrupted run resumes cleanly.
class RunManifest {
public:
    static RunManifest load_or_create(const std::filesystem::path& out_dir,
                                      const RunConfig& config);

    ManifestEntry& entry(const std::string& key);
    const std::map<std::string, ManifestEntry>& entries() const { return entries_; }

    /// Forward-only status change; regressions are ignored.
    void advance(const std::string& key, EntryStatus status, const std::string& artifact = "",
                 const std::string& error = "");

    void save() const;

    static std::string induce_key(const std::string& task_key, pipeline::Method method,
                                  const std::string& inducing_model, int n, uint64_t seed);
    static std::string infer_key(const std::string& task_key, pipeline::Method method,
                                 const std::string& inducing_model,
                                 const std::string& inference_model, int n, uint64_t seed);

private:
    std::filesystem::path path_;
    std::string config_snapshot_;
    std::map<std::string, ManifestEntry> entries_;
};

/// Exclusive ownership of a run directory for the process lifetime.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& out_dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path lock_path_;
};

int cmd_induce(const RunConfig& config);
int cmd_infer(const RunConfig& config);
int cmd_eval(const RunConfig& config);
int cmd_report(const RunConfig& config);

int cmd_gen_cipher(const std::filesystem::path& words_path, const std::vector<int>& ks,
                   const std::filesystem::path& out_dir, int word_limit);

int cmd_replay_table1(const std::filesystem::path& fixture_path);

/// Default template fixture directory baked in at build time.
std::filesystem::path default_templates_dir();

}  // namespace taskinduct::runtime
