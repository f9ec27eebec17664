#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "taskinduct/errors.hpp"

namespace taskinduct::llm {

enum class ReasoningEffort { Low, Medium, High };

std::string to_string(ReasoningEffort effort);
std::optional<ReasoningEffort> reasoning_effort_from_string(const std::string& s);

struct ModelProfile {
    std::string name;  // display label; profiles may share a model version
    std::string provider_id;
    std::string model_name;
    std::string base_url;
    double price_in = 0.0;   // currency per 1M input tokens
    double price_out = 0.0;  // currency per 1M output tokens
    int max_output_tokens = 8192;
    bool supports_reasoning_effort = false;
    std::optional<ReasoningEffort> reasoning_effort;  // fixed effort, e.g. "(low)"
    std::optional<double> temperature;                // request default override
    std::optional<double> top_p;
    std::string api_key_env;  // defaults to <PROVIDER_ID>_API_KEY
    std::optional<double> requests_per_second;
    std::string extra_options_json;  // provider pass-through (e.g. safety settings)

    std::string key() const { return provider_id + "/" + model_name; }
    const std::string& label() const { return name.empty() ? model_name : name; }
};

/// Named profiles from a JSON config file.
std::map<std::string, ModelProfile> load_profiles(const std::filesystem::path& path);

struct CompletionRequest {
    ModelProfile profile;
    std::string prompt;
    double temperature = 0.0;
    double top_p = 1.0;
    std::optional<ReasoningEffort> reasoning_effort;
};

struct Completion {
    std::string text;
    long input_tokens = 0;
    long output_tokens = 0;
    bool cached = false;
    std::chrono::milliseconds latency{0};
};

/// Content digest of everything that determines a completion.
std::string cache_digest(const CompletionRequest& req);

struct LedgerRow {
    std::string provider_id;
    std::string model_name;
    long input_tokens = 0;
    long output_tokens = 0;
    double cost = 0.0;
    bool cached = false;
};

struct LedgerGroup {
    std::string provider_id;
    std::string model_name;
    long calls = 0;
    long cached_hits = 0;
    long input_tokens = 0;
    long output_tokens = 0;
    double cost = 0.0;
};

struct LedgerReport {
    std::vector<LedgerGroup> groups;  // sorted by profile key
    double grand_total = 0.0;
};

namespace detail {
/// Raised by backends for failures worth retrying (timeouts, 429, 5xx).
struct TransientFailure : Error {
    TransientFailure(int status_, const std::string& body_)
        : Error("transient provider failure " + std::to_string(status_)),
          status(status_),
          body(body_) {}
    int status;
    std::string body;
};
}  // namespace detail

/// A backend produces one raw chat-completions response body per call.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete_once(const CompletionRequest& req) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic backend scripted from a file: an ordered list of
/// (digest | prompt substrings, response) entries, first match wins.
class MockBackend : public Backend {
public:
    static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& script);
    static std::unique_ptr<MockBackend> from_json_text(const std::string& text);

    std::string complete_once(const CompletionRequest& req) override;
    std::string name() const override { return "mock"; }

private:
    struct Entry {
        std::optional<std::string> digest;
        std::vector<std::string> substrings;  // all must appear in the prompt
        std::string response;
        std::optional<long> input_tokens;
        std::optional<long> output_tokens;
        int fail_status = 0;
        int fail_times = 0;
        int failures_served = 0;
    };
    std::vector<Entry> entries_;
    std::mutex mutex_;
};

/// Chat-completions HTTP backend; one wire dialect for every provider,
/// credentials read from the profile's environment variable.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(std::chrono::milliseconds timeout = std::chrono::milliseconds(120000))
        : timeout_(timeout) {}

    std::string complete_once(const CompletionRequest& req) override;
    std::string name() const override { return "http"; }

private:
    std::chrono::milliseconds timeout_;
};

struct GatewayOptions {
    std::optional<std::filesystem::path> cache_dir;
    std::optional<double> budget_cap;
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff{200};
};

/// Completion front door: cache, bounded retry, rate limiting, spend cap
/// and cost accounting over a pluggable backend.
class Gateway {
public:
    Gateway(std::unique_ptr<Backend> backend, GatewayOptions options);

    /// Returns provider text verbatim; writes a cache entry and a
    /// cost-ledger row priced by the request's profile. refresh skips the
    /// cache read (the entry is still rewritten), for re-asks after a
    /// malformed response.
    Completion complete(const CompletionRequest& req, bool refresh = false);

    LedgerReport ledger_report() const;
    void write_ledger_csv(const std::filesystem::path& path) const;

    /// Completions served by the backend (cache hits excluded).
    long provider_calls() const { return provider_calls_.load(); }

    double spent() const;

private:
    std::string call_with_retries(const CompletionRequest& req);
    void rate_limit(const ModelProfile& profile);

    std::unique_ptr<Backend> backend_;
    GatewayOptions options_;
    mutable std::mutex ledger_mutex_;
    std::vector<LedgerRow> ledger_;
    std::atomic<long> provider_calls_{0};

    struct Bucket {
        double tokens = 1.0;
        std::chrono::steady_clock::time_point last;
    };
    std::mutex bucket_mutex_;
    std::map<std::string, Bucket> buckets_;
};

/// Pulls text and token usage out of a chat-completions response body.
Completion parse_completion_body(const std::string& body);

/// Builds a chat-completions shaped body; used by the mock backend so
/// cached mock and HTTP responses share one format.
std::string make_completion_body(const std::string& model, const std::string& text,
                                 long input_tokens, long output_tokens);

}  // namespace taskinduct::llm
