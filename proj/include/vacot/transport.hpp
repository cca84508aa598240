// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <chrono>
#include <functional>
#include <string>

namespace vacot {

/// Request/response exchange of structured documents. Throws
/// Error(TransportFailure) when no response document could be obtained.
using JsonTransport = std::function<nlohmann::json(const nlohmann::json& request)>;

struct HttpEndpoint {
    std::string url;   // http://host[:port][/path]
    std::string token; // sent as "Authorization: Bearer <token>" when non-empty
    int timeout_seconds = 30;
};

/// POSTs each request as application/json to the endpoint.
JsonTransport http_transport(HttpEndpoint endpoint);

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff {200};
};

/// Retries TransportFailure with exponential backoff (initial, 2x, 4x, ...).
JsonTransport with_retries(JsonTransport inner, RetryPolicy policy);

/// Reads an environment variable; empty when unset.
std::string env_or_empty(const char* name);

} // namespace vacot
