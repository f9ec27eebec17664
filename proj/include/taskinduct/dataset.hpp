#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "taskinduct/errors.hpp"

namespace taskinduct::data {

struct QAItem {
    std::string id;
    std::string question;
    std::optional<std::string> gold;
};

struct TaskSpec {
    std::string task;
    std::optional<std::string> subtask;
    std::string short_phrase;
    bool short_phrase_optional = false;
    std::string answer_format;
    std::optional<std::string> match_policy;
    std::optional<double> numeric_epsilon;
    std::vector<QAItem> items;
    std::string source_file;

    /// "task" or "task/subtask", used to key artifacts and manifests.
    std::string key() const;
};

struct CipherInstance {
    std::string plaintext;
    int k = 0;
    std::string ciphertext;
};

/// Loads every *.json task file under `dir` (sorted by file name).
/// The whole load fails on the first malformed file.
std::vector<TaskSpec> load_tasks(const std::filesystem::path& dir);

TaskSpec load_task_file(const std::filesystem::path& path);

void write_task_file(const TaskSpec& task, const std::filesystem::path& path);

/// Draws n distinct items without replacement. The selection is a pure
/// function of (item ids, n, seed); for a fixed seed, smaller n yield
/// prefixes of larger n, so induction questions are always among the
/// evaluated ones.
std::vector<QAItem> sample_items(const TaskSpec& task, int n, uint64_t seed);

/// Per-letter forward shift by k with wrap-around modulo 26.
std::string rot_encode(std::string_view word, int k);

/// Backward shift; inverse of rot_encode for the same k.
std::string rot_decode(std::string_view word, int k);

CipherInstance make_cipher_instance(const std::string& word, int k);

/// One TaskSpec per shift value, ciphertext questions and plaintext golds.
std::vector<TaskSpec> build_cipher_tasks(const std::vector<std::string>& words,
                                         const std::vector<int>& ks);

/// Word-corpus file: one lowercase word per line; blank lines ignored.
std::vector<std::string> load_word_list(const std::filesystem::path& path);

}  // namespace taskinduct::data
