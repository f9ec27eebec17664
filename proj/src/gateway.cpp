#include "taskinduct/gateway.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "taskinduct/util.hpp"

namespace taskinduct::llm {

namespace detail {
// Implemented in http.cpp so the httplib header stays in one TU.
std::string http_post_json(const std::string& origin, const std::string& path,
                           const std::string& bearer, const std::string& body,
                           std::chrono::milliseconds timeout);
}  // namespace detail

namespace {

using nlohmann::json;

long estimate_tokens(std::string_view text) {
    return long(text.size() / 4) + 1;
}

double token_cost(double price_per_million, long tokens) {
    return price_per_million * (double(tokens) / 1e6);
}

std::string default_api_key_env(const std::string& provider_id) {
    std::string env = util::lower(provider_id);
    for (char& c : env) {
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
        c = char(std::toupper(static_cast<unsigned char>(c)));
    }
    return env + "_API_KEY";
}

}  // namespace

std::string to_string(ReasoningEffort effort) {
    switch (effort) {
        case ReasoningEffort::Low: return "low";
        case ReasoningEffort::Medium: return "medium";
        case ReasoningEffort::High: return "high";
    }
    return "medium";
}

std::optional<ReasoningEffort> reasoning_effort_from_string(const std::string& s) {
    if (s == "low") return ReasoningEffort::Low;
    if (s == "medium") return ReasoningEffort::Medium;
    if (s == "high") return ReasoningEffort::High;
    return std::nullopt;
}

std::map<std::string, ModelProfile> load_profiles(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("bad profile config " + path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("profiles") || !doc["profiles"].is_object()) {
        throw ConfigError("profile config must hold a 'profiles' object: " + path.string());
    }
    std::map<std::string, ModelProfile> out;
    for (const auto& [name, p] : doc["profiles"].items()) {
        ModelProfile profile;
        profile.name = name;
        profile.provider_id = p.value("provider_id", "");
        profile.model_name = p.value("model_name", name);
        profile.base_url = p.value("base_url", "");
        profile.price_in = p.value("price_in", 0.0);
        profile.price_out = p.value("price_out", 0.0);
        profile.max_output_tokens = p.value("max_output_tokens", 8192);
        profile.supports_reasoning_effort = p.value("supports_reasoning_effort", false);
        profile.api_key_env = p.value("api_key_env", "");
        if (p.contains("reasoning_effort")) {
            auto effort = reasoning_effort_from_string(p["reasoning_effort"].get<std::string>());
            if (!effort) {
                throw ConfigError("profile '" + name + "' has unknown reasoning_effort");
            }
            profile.reasoning_effort = effort;
            profile.supports_reasoning_effort = true;
        }
        if (p.contains("temperature")) profile.temperature = p["temperature"].get<double>();
        if (p.contains("top_p")) profile.top_p = p["top_p"].get<double>();
        if (p.contains("requests_per_second")) {
            profile.requests_per_second = p["requests_per_second"].get<double>();
        }
        if (p.contains("extra_options")) {
            profile.extra_options_json = p["extra_options"].dump();
        }
        if (profile.provider_id.empty()) {
            throw ConfigError("profile '" + name + "' lacks provider_id");
        }
        if (profile.price_in < 0 || profile.price_out < 0) {
            throw ConfigError("profile '" + name + "' has negative prices");
        }
        out.emplace(name, std::move(profile));
    }
    return out;
}

std::string cache_digest(const CompletionRequest& req) {
    std::ostringstream key;
    key << req.profile.provider_id << '\x1f' << req.profile.model_name << '\x1f'
        << req.prompt << '\x1f' << req.temperature << '\x1f' << req.top_p << '\x1f'
        << (req.reasoning_effort ? to_string(*req.reasoning_effort) : "-");
    return util::sha256_hex(key.str());
}

Completion parse_completion_body(const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception& e) {
        throw ProviderError(200, std::string("unparseable completion body: ") + e.what());
    }
    if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
        throw ProviderError(200, "completion body has no choices");
    }
    const json& msg = doc["choices"][0];
    Completion out;
    if (msg.contains("message") && msg["message"].contains("content") &&
        msg["message"]["content"].is_string()) {
        out.text = msg["message"]["content"].get<std::string>();
    } else {
        throw ProviderError(200, "completion body has no message content");
    }
    if (doc.contains("usage") && doc["usage"].is_object()) {
        out.input_tokens = doc["usage"].value("prompt_tokens", 0L);
        out.output_tokens = doc["usage"].value("completion_tokens", 0L);
    }
    if (out.input_tokens < 0) out.input_tokens = 0;
    if (out.output_tokens <= 0) out.output_tokens = estimate_tokens(out.text);
    return out;
}

std::string make_completion_body(const std::string& model, const std::string& text,
                                 long input_tokens, long output_tokens) {
    json body;
    body["object"] = "chat.completion";
    body["model"] = model;
    body["choices"] = json::array({json{{"index", 0},
                                        {"message", json{{"role", "assistant"}, {"content", text}}},
                                        {"finish_reason", "stop"}}});
    body["usage"] = json{{"prompt_tokens", input_tokens},
                         {"completion_tokens", output_tokens},
                         {"total_tokens", input_tokens + output_tokens}};
    return body.dump();
}

// ---------------------------------------------------------------------------
// MockBackend

std::unique_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& script) {
    return from_json_text(util::read_file(script));
}

std::unique_ptr<MockBackend> MockBackend::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad mock script: ") + e.what());
    }
    if (!doc.is_array()) throw ConfigError("mock script must be a JSON array");
    auto backend = std::make_unique<MockBackend>();
    for (const json& e : doc) {
        Entry entry;
        if (e.contains("digest")) entry.digest = e["digest"].get<std::string>();
        if (e.contains("substring")) {
            if (e["substring"].is_string()) {
                entry.substrings.push_back(e["substring"].get<std::string>());
            } else if (e["substring"].is_array()) {
                for (const json& s : e["substring"]) {
                    entry.substrings.push_back(s.get<std::string>());
                }
            } else {
                throw ConfigError("mock entry 'substring' must be string or array");
            }
        }
        if (!entry.digest && entry.substrings.empty()) {
            throw ConfigError("mock entry needs a 'digest' or 'substring' matcher");
        }
        entry.response = e.value("response", "");
        if (e.contains("input_tokens")) entry.input_tokens = e["input_tokens"].get<long>();
        if (e.contains("output_tokens")) entry.output_tokens = e["output_tokens"].get<long>();
        entry.fail_status = e.value("fail_status", 0);
        entry.fail_times = e.value("fail_times", 0);
        backend->entries_.push_back(std::move(entry));
    }
    return backend;
}

std::string MockBackend::complete_once(const CompletionRequest& req) {
    const std::string digest = cache_digest(req);
    std::lock_guard<std::mutex> lock(mutex_);
    for (Entry& entry : entries_) {
        if (entry.digest && *entry.digest != digest) continue;
        bool all_found = std::all_of(
            entry.substrings.begin(), entry.substrings.end(),
            [&](const std::string& s) { return util::contains(req.prompt, s); });
        if (!all_found) continue;

        if (entry.fail_times > entry.failures_served) {
            ++entry.failures_served;
            int status = entry.fail_status != 0 ? entry.fail_status : 503;
            if (status == 401 || status == 403) {
                throw AuthError("mock auth failure " + std::to_string(status));
            }
            if (status == 408 || status == 429 || status >= 500) {
                throw detail::TransientFailure(status, "scripted mock failure");
            }
            throw ProviderError(status, "scripted mock failure");
        }
        long in_tokens = entry.input_tokens.value_or(estimate_tokens(req.prompt));
        long out_tokens = entry.output_tokens.value_or(estimate_tokens(entry.response));
        return make_completion_body(req.profile.model_name, entry.response, in_tokens,
                                    out_tokens);
    }
    throw ProviderError(0, "no mock entry matches prompt: " +
                               std::string(req.prompt.substr(0, 120)));
}

// ---------------------------------------------------------------------------
// HttpBackend

std::string HttpBackend::complete_once(const CompletionRequest& req) {
    const ModelProfile& profile = req.profile;
    if (profile.base_url.empty()) {
        throw ConfigError("profile " + profile.key() + " has no base_url");
    }

    json payload;
    payload["model"] = profile.model_name;
    payload["messages"] =
        json::array({json{{"role", "user"}, {"content", req.prompt}}});
    payload["temperature"] = req.temperature;
    payload["top_p"] = req.top_p;
    payload["max_tokens"] = profile.max_output_tokens;
    if (req.reasoning_effort) {
        if (!profile.supports_reasoning_effort) {
            throw ConfigError("profile " + profile.key() +
                              " does not support reasoning_effort");
        }
        payload.erase("max_tokens");
        payload["max_completion_tokens"] = profile.max_output_tokens;
        payload["reasoning_effort"] = to_string(*req.reasoning_effort);
    }
    if (!profile.extra_options_json.empty()) {
        json extra = json::parse(profile.extra_options_json);
        for (auto& [k, v] : extra.items()) payload[k] = v;
    }

    std::string env_name = profile.api_key_env.empty()
                               ? default_api_key_env(profile.provider_id)
                               : profile.api_key_env;
    auto key = util::env_var(env_name);
    if (!key) {
        throw AuthError("no credentials: set " + env_name + " for provider " +
                        profile.provider_id);
    }

    // Split base_url into origin + path prefix for httplib.
    std::string origin = profile.base_url;
    std::string prefix;
    size_t scheme = origin.find("://");
    size_t path_start = scheme == std::string::npos ? origin.find('/')
                                                    : origin.find('/', scheme + 3);
    if (path_start != std::string::npos) {
        prefix = origin.substr(path_start);
        origin = origin.substr(0, path_start);
    }
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    return detail::http_post_json(origin, prefix + "/chat/completions", *key,
                                  payload.dump(), timeout_);
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(std::unique_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
    if (options_.cache_dir) std::filesystem::create_directories(*options_.cache_dir);
}

double Gateway::spent() const {
    std::lock_guard<std::mutex> lock(ledger_mutex_);
    double total = 0.0;
    for (const LedgerRow& row : ledger_) total += row.cost;
    return total;
}

void Gateway::rate_limit(const ModelProfile& profile) {
    if (!profile.requests_per_second) return;
    const double rate = *profile.requests_per_second;
    if (rate <= 0) return;
    while (true) {
        std::chrono::duration<double> wait{0};
        {
            std::lock_guard<std::mutex> lock(bucket_mutex_);
            Bucket& bucket = buckets_[profile.key()];
            auto now = std::chrono::steady_clock::now();
            if (bucket.last.time_since_epoch().count() == 0) bucket.last = now;
            double elapsed = std::chrono::duration<double>(now - bucket.last).count();
            bucket.tokens = std::min(std::max(rate, 1.0), bucket.tokens + elapsed * rate);
            bucket.last = now;
            if (bucket.tokens >= 1.0) {
                bucket.tokens -= 1.0;
                return;
            }
            wait = std::chrono::duration<double>((1.0 - bucket.tokens) / rate);
        }
        std::this_thread::sleep_for(wait);
    }
}

std::string Gateway::call_with_retries(const CompletionRequest& req) {
    int attempts = std::max(1, options_.max_retries);
    for (int attempt = 1;; ++attempt) {
        try {
            return backend_->complete_once(req);
        } catch (const detail::TransientFailure& failure) {
            if (attempt >= attempts) {
                throw ProviderError(failure.status, failure.body);
            }
            std::this_thread::sleep_for(options_.retry_backoff * attempt);
        }
        // AuthError / ProviderError / ConfigError surface immediately.
    }
}

Completion Gateway::complete(const CompletionRequest& req, bool refresh) {
    const std::string digest = cache_digest(req);

    if (options_.cache_dir && !refresh) {
        auto path = *options_.cache_dir / (digest + ".json");
        if (std::filesystem::exists(path)) {
            Completion hit = parse_completion_body(util::read_file(path));
            hit.cached = true;
            hit.latency = std::chrono::milliseconds(0);
            LedgerRow row{req.profile.provider_id, req.profile.model_name,
                          hit.input_tokens, hit.output_tokens, 0.0, true};
            std::lock_guard<std::mutex> lock(ledger_mutex_);
            ledger_.push_back(row);
            return hit;
        }
    }

    if (options_.budget_cap) {
        double estimate = token_cost(req.profile.price_in, estimate_tokens(req.prompt)) +
                          token_cost(req.profile.price_out, req.profile.max_output_tokens);
        if (spent() + estimate > *options_.budget_cap) {
            std::ostringstream msg;
            msg << "spend cap " << *options_.budget_cap << " would be crossed (spent "
                << spent() << ", next call est. " << estimate << ")";
            throw BudgetExceeded(msg.str());
        }
    }

    rate_limit(req.profile);

    auto started = std::chrono::steady_clock::now();
    std::string body = call_with_retries(req);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    Completion completion = parse_completion_body(body);
    completion.cached = false;
    completion.latency = elapsed;
    provider_calls_.fetch_add(1);

    if (options_.cache_dir) {
        util::write_file_atomic(*options_.cache_dir / (digest + ".json"), body);
    }

    LedgerRow row{req.profile.provider_id, req.profile.model_name,
                  completion.input_tokens, completion.output_tokens,
                  token_cost(req.profile.price_in, completion.input_tokens) +
                      token_cost(req.profile.price_out, completion.output_tokens),
                  false};
    {
        std::lock_guard<std::mutex> lock(ledger_mutex_);
        ledger_.push_back(row);
    }
    return completion;
}

LedgerReport Gateway::ledger_report() const {
    std::lock_guard<std::mutex> lock(ledger_mutex_);
    std::map<std::string, LedgerGroup> groups;
    for (const LedgerRow& row : ledger_) {
        LedgerGroup& group = groups[row.provider_id + "/" + row.model_name];
        group.provider_id = row.provider_id;
        group.model_name = row.model_name;
        group.calls += 1;
        if (row.cached) group.cached_hits += 1;
        group.input_tokens += row.input_tokens;
        group.output_tokens += row.output_tokens;
        group.cost += row.cost;
    }
    LedgerReport report;
    for (auto& [key, group] : groups) {
        report.grand_total += group.cost;
        report.groups.push_back(std::move(group));
    }
    return report;
}

void Gateway::write_ledger_csv(const std::filesystem::path& path) const {
    std::ostringstream csv;
    csv << "provider_id,model_name,input_tokens,output_tokens,cost,cached\n";
    {
        std::lock_guard<std::mutex> lock(ledger_mutex_);
        for (const LedgerRow& row : ledger_) {
            csv << row.provider_id << ',' << row.model_name << ',' << row.input_tokens
                << ',' << row.output_tokens << ',' << row.cost << ','
                << (row.cached ? 1 : 0) << '\n';
        }
    }
    util::write_file_atomic(path, csv.str());
}

}  // namespace taskinduct::llm
