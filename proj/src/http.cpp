#include <chrono>
#include <string>

#include <httplib.h>

#include "taskinduct/errors.hpp"
#include "taskinduct/gateway.hpp"

namespace taskinduct::llm::detail {

std::string http_post_json(const std::string& origin, const std::string& path,
                           const std::string& bearer, const std::string& body,
                           std::chrono::milliseconds timeout) {
    httplib::Client client(origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    client.set_connection_timeout(secs.count(), 0);
    client.set_read_timeout(secs.count(), 0);
    client.set_write_timeout(secs.count(), 0);

    httplib::Headers headers{{"Authorization", "Bearer " + bearer}};
    auto res = client.Post(path, headers, body, "application/json");

    if (!res) {
        throw TransientFailure(0, "connection failure: " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw AuthError("provider rejected credentials (" + std::to_string(res->status) +
                        "): " + res->body);
    }
    if (res->status == 408 || res->status == 429 || res->status >= 500) {
        throw TransientFailure(res->status, res->body);
    }
    if (res->status != 200) {
        throw ProviderError(res->status, res->body);
    }
    return res->body;
}

}  // namespace taskinduct::llm::detail
