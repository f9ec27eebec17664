#include "taskinduct/runtime.hpp"

#include <json.hpp>

#include "taskinduct/util.hpp"

#ifndef TASKINDUCT_TEMPLATES_DIR
#define TASKINDUCT_TEMPLATES_DIR ""
#endif

namespace taskinduct::runtime {

namespace {
using nlohmann::json;
}

std::filesystem::path default_templates_dir() {
    return std::filesystem::path(TASKINDUCT_TEMPLATES_DIR);
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("bad run config " + path.string() + ": " + e.what());
    }
    RunConfig config;
    if (doc.contains("tasks_dir")) config.tasks_dir = doc["tasks_dir"].get<std::string>();
    if (doc.contains("out_dir")) config.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("cache_dir")) config.cache_dir = doc["cache_dir"].get<std::string>();
    if (doc.contains("templates_dir")) {
        config.templates_dir = doc["templates_dir"].get<std::string>();
    }
    if (doc.contains("profiles")) config.profiles_path = doc["profiles"].get<std::string>();
    if (doc.contains("mock_script")) {
        config.mock_script = doc["mock_script"].get<std::string>();
    }
    if (doc.contains("methods")) {
        config.methods.clear();
        for (const json& m : doc["methods"]) {
            auto method = pipeline::method_from_string(m.get<std::string>());
            if (!method) throw ConfigError("unknown method: " + m.get<std::string>());
            config.methods.push_back(*method);
        }
    }
    if (doc.contains("inducing_models")) {
        config.inducing_models = doc["inducing_models"].get<std::vector<std::string>>();
    }
    if (doc.contains("inference_models")) {
        config.inference_models = doc["inference_models"].get<std::vector<std::string>>();
    }
    if (doc.contains("n")) {
        if (doc["n"].is_array()) {
            config.n_values = doc["n"].get<std::vector<int>>();
        } else {
            config.n_values = {doc["n"].get<int>()};
        }
    }
    if (doc.contains("seed")) config.seed = doc["seed"].get<uint64_t>();
    if (doc.contains("sample_size")) config.sample_size = doc["sample_size"].get<int>();
    if (doc.contains("budget_cap")) config.budget_cap = doc["budget_cap"].get<double>();
    if (doc.contains("workers")) config.workers = doc["workers"].get<int>();
    if (doc.contains("max_retries")) config.max_retries = doc["max_retries"].get<int>();
    if (doc.contains("extraction_retries")) {
        config.extraction_retries = doc["extraction_retries"].get<int>();
    }
    if (doc.contains("dataset_label")) {
        config.dataset_label = doc["dataset_label"].get<std::string>();
    }
    return config;
}

std::string RunConfig::to_json_text() const {
    json doc;
    doc["tasks_dir"] = tasks_dir.string();
    doc["out_dir"] = out_dir.string();
    doc["cache_dir"] = cache_dir.string();
    doc["templates_dir"] = templates_dir.string();
    doc["profiles"] = profiles_path.string();
    doc["mock_script"] = mock_script.string();
    doc["methods"] = json::array();
    for (pipeline::Method m : methods) doc["methods"].push_back(std::string(to_string(m)));
    doc["inducing_models"] = inducing_models;
    doc["inference_models"] = inference_models;
    doc["n"] = n_values;
    doc["seed"] = seed;
    doc["sample_size"] = sample_size;
    if (budget_cap) doc["budget_cap"] = *budget_cap;
    doc["workers"] = workers;
    doc["max_retries"] = max_retries;
    doc["extraction_retries"] = extraction_retries;
    doc["dataset_label"] = dataset_label;
    return doc.dump(2) + "\n";
}

std::string_view to_string(EntryStatus status) {
    switch (status) {
        case EntryStatus::Pending: return "pending";
        case EntryStatus::Induced: return "induced";
        case EntryStatus::Inferred: return "inferred";
        case EntryStatus::Evaluated: return "evaluated";
        case EntryStatus::Failed: return "failed";
    }
    return "pending";
}

EntryStatus entry_status_from_string(std::string_view s) {
    if (s == "induced") return EntryStatus::Induced;
    if (s == "inferred") return EntryStatus::Inferred;
    if (s == "evaluated") return EntryStatus::Evaluated;
    if (s == "failed") return EntryStatus::Failed;
    return EntryStatus::Pending;
}

RunManifest RunManifest::load_or_create(const std::filesystem::path& out_dir,
                                        const RunConfig& config) {
    RunManifest manifest;
    manifest.path_ = out_dir / "manifest.json";
    manifest.config_snapshot_ = config.to_json_text();
    if (std::filesystem::exists(manifest.path_)) {
        json doc = json::parse(util::read_file(manifest.path_));
        json entries = doc.value("entries", json::object());
        for (const auto& [key, e] : entries.items()) {
            ManifestEntry entry;
            entry.status = entry_status_from_string(e.value("status", "pending"));
            entry.artifact = e.value("artifact", "");
            entry.error = e.value("error", "");
            manifest.entries_[key] = std::move(entry);
        }
    }
    return manifest;
}

ManifestEntry& RunManifest::entry(const std::string& key) {
    return entries_[key];
}

void RunManifest::advance(const std::string& key, EntryStatus status,
                          const std::string& artifact, const std::string& error) {
    ManifestEntry& e = entries_[key];
    // Failed may be retried; otherwise the status only moves forward.
    if (e.status != EntryStatus::Failed && int(status) < int(e.status)) return;
    e.status = status;
    if (!artifact.empty()) e.artifact = artifact;
    e.error = error;
}

void RunManifest::save() const {
    json doc;
    doc["config"] = json::parse(config_snapshot_);
    json entries = json::object();
    for (const auto& [key, e] : entries_) {
        json entry;
        entry["status"] = std::string(to_string(e.status));
        if (!e.artifact.empty()) entry["artifact"] = e.artifact;
        if (!e.error.empty()) entry["error"] = e.error;
        entries[key] = std::move(entry);
    }
    doc["entries"] = std::move(entries);
    util::write_file_atomic(path_, doc.dump(2) + "\n");
}

std::string RunManifest::induce_key(const std::string& task_key, pipeline::Method method,
                                    const std::string& inducing_model, int n,
                                    uint64_t seed) {
    return "induce|" + task_key + "|" + std::string(to_string(method)) + "|ind=" +
           inducing_model + "|n=" + std::to_string(n) + "|seed=" + std::to_string(seed);
}

std::string RunManifest::infer_key(const std::string& task_key, pipeline::Method method,
                                   const std::string& inducing_model,
                                   const std::string& inference_model, int n,
                                   uint64_t seed) {
    return "infer|" + task_key + "|" + std::string(to_string(method)) + "|ind=" +
           inducing_model + "|inf=" + inference_model + "|n=" + std::to_string(n) +
           "|seed=" + std::to_string(seed);
}

RunLock::RunLock(const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    lock_path_ = out_dir / ".lock";
    if (std::filesystem::exists(lock_path_)) {
        throw ConfigError("run directory is locked by another process: " +
                          lock_path_.string() + " (remove the lockfile if stale)");
    }
    util::write_file(lock_path_, "locked\n");
}

RunLock::~RunLock() {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
}

}  // namespace taskinduct::runtime
