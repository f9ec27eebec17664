#include "taskinduct/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "taskinduct/util.hpp"

namespace taskinduct::data {

namespace {

using nlohmann::json;

// splitmix64; fully specified, so samples are stable across platforms.
struct SplitMix64 {
    uint64_t state;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

std::string require_string(const json& doc, const char* field, const std::string& file) {
    if (!doc.contains(field) || !doc[field].is_string()) throw SchemaError(file, field);
    return doc[field].get<std::string>();
}

}  // namespace

std::string TaskSpec::key() const {
    if (subtask && !subtask->empty() && *subtask != task) return task + "/" + *subtask;
    return task;
}

TaskSpec load_task_file(const std::filesystem::path& path) {
    const std::string file = path.filename().string();
    json doc;
    try {
        doc = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw SchemaError(file, std::string("(parse) ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError(file, "(root)");

    TaskSpec task;
    task.source_file = path.string();
    task.task = require_string(doc, "task", file);
    if (task.task.empty()) throw SchemaError(file, "task");
    if (doc.contains("subtask")) {
        if (!doc["subtask"].is_string()) throw SchemaError(file, "subtask");
        task.subtask = doc["subtask"].get<std::string>();
    }
    if (doc.contains("short_phrase_optional")) {
        if (!doc["short_phrase_optional"].is_boolean()) {
            throw SchemaError(file, "short_phrase_optional");
        }
        task.short_phrase_optional = doc["short_phrase_optional"].get<bool>();
    }
    task.short_phrase = require_string(doc, "short_phrase", file);
    if (task.short_phrase.empty() && !task.short_phrase_optional) {
        throw SchemaError(file, "short_phrase");
    }
    task.answer_format = require_string(doc, "answer_format", file);
    if (task.answer_format.empty()) throw SchemaError(file, "answer_format");
    if (doc.contains("match_policy")) {
        if (!doc["match_policy"].is_string()) throw SchemaError(file, "match_policy");
        task.match_policy = doc["match_policy"].get<std::string>();
    }
    if (doc.contains("numeric_epsilon")) {
        if (!doc["numeric_epsilon"].is_number()) throw SchemaError(file, "numeric_epsilon");
        task.numeric_epsilon = doc["numeric_epsilon"].get<double>();
    }

    if (!doc.contains("items") || !doc["items"].is_array() || doc["items"].empty()) {
        throw SchemaError(file, "items");
    }
    std::set<std::string> seen_ids;
    for (const json& entry : doc["items"]) {
        if (!entry.is_object()) throw SchemaError(file, "items[]");
        QAItem item;
        item.id = require_string(entry, "id", file);
        item.question = require_string(entry, "question", file);
        if (entry.contains("gold") && !entry["gold"].is_null()) {
            if (!entry["gold"].is_string()) throw SchemaError(file, "gold");
            item.gold = entry["gold"].get<std::string>();
        }
        if (!seen_ids.insert(item.id).second) {
            throw DuplicateId("duplicate item id '" + item.id + "' in " + file);
        }
        task.items.push_back(std::move(item));
    }
    return task;
}

std::vector<TaskSpec> load_tasks(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw ConfigError("task directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<TaskSpec> tasks;
    tasks.reserve(files.size());
    for (const auto& file : files) tasks.push_back(load_task_file(file));
    return tasks;
}

void write_task_file(const TaskSpec& task, const std::filesystem::path& path) {
    json doc;
    doc["task"] = task.task;
    if (task.subtask) doc["subtask"] = *task.subtask;
    doc["short_phrase"] = task.short_phrase;
    if (task.short_phrase_optional) doc["short_phrase_optional"] = true;
    doc["answer_format"] = task.answer_format;
    if (task.match_policy) doc["match_policy"] = *task.match_policy;
    if (task.numeric_epsilon) doc["numeric_epsilon"] = *task.numeric_epsilon;
    doc["items"] = json::array();
    for (const QAItem& item : task.items) {
        json e;
        e["id"] = item.id;
        e["question"] = item.question;
        if (item.gold) e["gold"] = *item.gold;
        doc["items"].push_back(std::move(e));
    }
    util::write_file_atomic(path, doc.dump(2) + "\n");
}

std::vector<QAItem> sample_items(const TaskSpec& task, int n, uint64_t seed) {
    if (n < 1 || size_t(n) > task.items.size()) {
        throw NotEnoughItems("requested " + std::to_string(n) + " items from task '" +
                             task.key() + "' holding " + std::to_string(task.items.size()));
    }
    // Index items by sorted id so the draw depends on ids, not file order.
    std::vector<size_t> order(task.items.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return task.items[a].id < task.items[b].id;
    });

    std::string id_blob;
    for (size_t idx : order) {
        id_blob += task.items[idx].id;
        id_blob += '\n';
    }
    const std::string id_hash = util::sha256_hex(id_blob);
    uint64_t mixed = seed;
    for (size_t i = 0; i < 16; ++i) {
        mixed = mixed * 31 + uint64_t(uint8_t(id_hash[i]));
    }
    SplitMix64 rng(mixed);

    // Fisher-Yates over the sorted index list.
    for (size_t i = order.size() - 1; i > 0; --i) {
        size_t j = size_t(rng.next() % (i + 1));
        std::swap(order[i], order[j]);
    }

    std::vector<QAItem> out;
    out.reserve(size_t(n));
    for (int i = 0; i < n; ++i) out.push_back(task.items[order[size_t(i)]]);
    return out;
}

namespace {

char shift_letter(char c, int delta) {
    int idx = c - 'a';
    int shifted = (idx + delta) % 26;
    if (shifted < 0) shifted += 26;
    return char('a' + shifted);
}

void check_rot_args(std::string_view word, int k) {
    if (k < 1 || k > 25) throw BadShift("shift must be in [1,25], got " + std::to_string(k));
    if (word.empty()) throw BadAlphabet("empty word");
    for (char c : word) {
        if (c < 'a' || c > 'z') {
            throw BadAlphabet(std::string("non a-z character '") + c + "' in word");
        }
    }
}

}  // namespace

std::string rot_encode(std::string_view word, int k) {
    check_rot_args(word, k);
    std::string out(word);
    for (char& c : out) c = shift_letter(c, k);
    return out;
}

std::string rot_decode(std::string_view word, int k) {
    check_rot_args(word, k);
    std::string out(word);
    for (char& c : out) c = shift_letter(c, -k);
    return out;
}

CipherInstance make_cipher_instance(const std::string& word, int k) {
    if (word.size() != 7) {
        throw BadWordLength("cipher words must have 7 letters, got '" + word + "'");
    }
    return CipherInstance{word, k, rot_encode(word, k)};
}

std::vector<TaskSpec> build_cipher_tasks(const std::vector<std::string>& words,
                                         const std::vector<int>& ks) {
    std::vector<TaskSpec> tasks;
    tasks.reserve(ks.size());
    for (int k : ks) {
        TaskSpec task;
        task.task = "Shift Cipher";
        task.subtask = "Shift Cipher – ROT-" + std::to_string(k);
        task.short_phrase = "Shift Cipher";
        task.answer_format = "a single lowercase word";
        task.match_policy = "exact";
        int idx = 0;
        for (const std::string& word : words) {
            CipherInstance inst = make_cipher_instance(word, k);
            QAItem item;
            char id[32];
            std::snprintf(id, sizeof(id), "rot%02d-%03d", k, ++idx);
            item.id = id;
            item.question = inst.ciphertext;
            item.gold = inst.plaintext;
            task.items.push_back(std::move(item));
        }
        if (task.items.empty()) throw BadWordLength("cipher word list is empty");
        tasks.push_back(std::move(task));
    }
    return tasks;
}

std::vector<std::string> load_word_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open word list: " + path.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        std::string word = util::trim(line);
        if (!word.empty()) words.push_back(std::move(word));
    }
    return words;
}

}  // namespace taskinduct::data
